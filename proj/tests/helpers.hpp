#pragma once

// Shared test fixtures: random small MDPs, exhaustive-coverage datasets, and
// a chi-square threshold used by the distribution checks.

#include <cmath>
#include <vector>

#include "hrl/dataset.hpp"
#include "hrl/env.hpp"
#include "hrl/tabular_model.hpp"

namespace hrl_test {

struct SmallMdp {
    hrl::StateSpace states;
    hrl::ActionSpace actions;
    hrl::TabularModel model;
};

/// Random enumerable MDP; each (s,a) has 1-3 successors, rewards in [-1,1].
/// When episodic, roughly one transition in eight ends the episode.
inline SmallMdp make_random_mdp(int n_states, int n_actions, std::uint64_t seed,
                                double gamma = 0.9, bool episodic = true) {
    hrl::Rng rng = hrl::make_rng(seed);
    SmallMdp mdp{hrl::StateSpace({{"s", n_states}}), {}, {}};
    for (int a = 0; a < n_actions; ++a) mdp.actions.actions.push_back("a" + std::to_string(a));
    mdp.model = hrl::TabularModel(n_states, n_actions, gamma);
    std::uniform_int_distribution<int> n_succ(1, 3);
    std::uniform_int_distribution<int> pick_state(0, n_states - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> reward(-1.0, 1.0);
    for (int s = 0; s < n_states; ++s) {
        for (int a = 0; a < n_actions; ++a) {
            int k = n_succ(rng);
            std::vector<double> weights(k);
            double total = 0.0;
            for (auto& w : weights) {
                w = unit(rng) + 0.1;
                total += w;
            }
            auto& out = mdp.model.at(s, a);
            for (int i = 0; i < k; ++i) {
                hrl::TabularModel::Outcome o;
                o.prob = weights[i] / total;
                o.reward = reward(rng);
                o.terminal = episodic && unit(rng) < 0.125;
                o.next = pick_state(rng);
                // keep successors distinct so probabilities stay well defined
                bool dup = false;
                for (const auto& prev : out)
                    if (prev.next == o.next && prev.terminal == o.terminal) dup = true;
                if (dup)
                    out.back().prob += o.prob;
                else
                    out.push_back(o);
            }
        }
        mdp.model.initial_dist[s] = 1.0 / n_states;
    }
    return mdp;
}

/// Dataset with guaranteed coverage: `per_pair` sampled transitions from the
/// model for every (s,a).
inline hrl::Dataset exhaustive_dataset(const SmallMdp& mdp, int per_pair, std::uint64_t seed) {
    hrl::Dataset data{mdp.states, mdp.actions, {}};
    hrl::ModelEnv env(mdp.model, mdp.states, mdp.actions);
    hrl::Rng rng = hrl::make_rng(seed);
    for (int rep = 0; rep < per_pair; ++rep)
        for (std::int64_t s = 0; s < mdp.model.n_states; ++s)
            for (int a = 0; a < mdp.model.n_actions; ++a) {
                auto out = env.step(s, a, rng);
                data.items.push_back({s, a, out.r, out.s_next, out.terminal});
            }
    return data;
}

/// Wilson-Hilferty approximation of the chi-square quantile.
inline double chi_square_critical(int dof, double z) {
    double t = 1.0 - 2.0 / (9.0 * dof) + z * std::sqrt(2.0 / (9.0 * dof));
    return dof * t * t * t;
}

/// alpha = 0.01 upper quantile.
inline double chi_square_critical_99(int dof) { return chi_square_critical(dof, 2.326); }

}  // namespace hrl_test
