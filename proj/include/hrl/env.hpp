#pragma once

#include <cstdint>
#include <memory>

#include "hrl/common.hpp"
#include "hrl/state_space.hpp"
#include "hrl/tabular_model.hpp"

namespace hrl {

struct StepResult {
    std::int64_t s_next = 0;
    double r = 0.0;
    bool terminal = false;
};

/// Sampling interface shared by the simulator-backed and model-backed
/// environments. All randomness flows through the caller's stream.
class Env {
  public:
    virtual ~Env() = default;
    virtual const StateSpace& states() const = 0;
    virtual const ActionSpace& actions() const = 0;
    virtual std::int64_t reset(Rng& rng) const = 0;
    virtual StepResult step(std::int64_t s, int a, Rng& rng) const = 0;
};

/// Environment that samples from an explicit TabularModel. Used to turn
/// randomly generated small MDPs into simulators for tests.
class ModelEnv final : public Env {
  public:
    ModelEnv(TabularModel model, StateSpace states, ActionSpace actions)
        : model_(std::move(model)), states_(std::move(states)), actions_(std::move(actions)) {}

    const StateSpace& states() const override { return states_; }
    const ActionSpace& actions() const override { return actions_; }

    std::int64_t reset(Rng& rng) const override {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        double u = unit(rng), acc = 0.0;
        for (std::int64_t s = 0; s < model_.n_states; ++s) {
            acc += model_.initial_dist[s];
            if (u <= acc) return s;
        }
        return model_.n_states - 1;
    }

    StepResult step(std::int64_t s, int a, Rng& rng) const override {
        const auto& outs = model_.at(s, a);
        if (outs.empty()) throw ContractError("ModelEnv: no outcomes for (s,a)");
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        double u = unit(rng), acc = 0.0;
        for (const auto& o : outs) {
            acc += o.prob;
            if (u <= acc) return {o.next, o.reward, o.terminal};
        }
        const auto& last = outs.back();
        return {last.next, last.reward, last.terminal};
    }

    const TabularModel& model() const { return model_; }

  private:
    TabularModel model_;
    StateSpace states_;
    ActionSpace actions_;
};

}  // namespace hrl
