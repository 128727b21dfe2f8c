#pragma once

#include "hrl/common.hpp"
#include "hrl/dataset.hpp"
#include "hrl/env.hpp"
#include "hrl/eval.hpp"
#include "hrl/experiment.hpp"
#include "hrl/feature_encoder.hpp"
#include "hrl/fitted_learner.hpp"
#include "hrl/hierarchy.hpp"
#include "hrl/io.hpp"
#include "hrl/random_forest.hpp"
#include "hrl/regressor.hpp"
#include "hrl/state_space.hpp"
#include "hrl/tabular_learner.hpp"
#include "hrl/tabular_model.hpp"
#include "hrl/taxi.hpp"
