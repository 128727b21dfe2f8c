#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "hrl/dataset.hpp"
#include "hrl/state_space.hpp"

namespace hrl {

/// Dense action-value table over (state index, child index).
/// For flat solvers the state index is the full state; hierarchical learners
/// index through a per-subtask Abstraction instead.
struct QTable {
    std::int64_t n_states = 0;
    int n_children = 0;
    std::vector<double> values;

    bool converged = false;
    double residual = 0.0;
    int sweeps = 0;

    QTable() = default;
    QTable(std::int64_t states, int children)
        : n_states(states), n_children(children),
          values(static_cast<std::size_t>(states) * children, 0.0) {}

    double& at(std::int64_t s, int c) { return values[s * n_children + c]; }
    double at(std::int64_t s, int c) const { return values[s * n_children + c]; }

    double state_value(std::int64_t s) const {
        double best = at(s, 0);
        for (int c = 1; c < n_children; ++c) best = std::max(best, at(s, c));
        return best;
    }

    /// Lowest index wins ties.
    int greedy(std::int64_t s) const {
        int best = 0;
        for (int c = 1; c < n_children; ++c)
            if (at(s, c) > at(s, best)) best = c;
        return best;
    }
};

/// Exact or estimated one-step model of an enumerable MDP.
/// A transition marked terminal ends the episode: its continuation value is
/// zero regardless of next_state.
struct TabularModel {
    struct Outcome {
        std::int64_t next = 0;
        double prob = 0.0;
        double reward = 0.0;
        bool terminal = false;
    };

    std::int64_t n_states = 0;
    int n_actions = 0;
    double gamma = 1.0;
    // outcomes[s * n_actions + a]
    std::vector<std::vector<Outcome>> outcomes;
    std::vector<double> initial_dist;
    // False marks (s,a) pairs with no data; solvers keep their value at init
    // instead of guessing.
    std::vector<char> visited;

    TabularModel() = default;
    TabularModel(std::int64_t states, int actions, double discount)
        : n_states(states), n_actions(actions), gamma(discount),
          outcomes(static_cast<std::size_t>(states) * actions),
          initial_dist(states, 0.0),
          visited(static_cast<std::size_t>(states) * actions, 1) {}

    std::vector<Outcome>& at(std::int64_t s, int a) { return outcomes[s * n_actions + a]; }
    const std::vector<Outcome>& at(std::int64_t s, int a) const {
        return outcomes[s * n_actions + a];
    }
    bool is_visited(std::int64_t s, int a) const { return visited[s * n_actions + a] != 0; }

    void validate(double tol = 1e-9) const {
        if (gamma <= 0.0 || gamma > 1.0) throw ContractError("TabularModel: gamma out of (0,1]");
        for (std::int64_t s = 0; s < n_states; ++s)
            for (int a = 0; a < n_actions; ++a) {
                if (!is_visited(s, a)) continue;
                double total = 0.0;
                for (const auto& o : at(s, a)) total += o.prob;
                if (std::abs(total - 1.0) > tol)
                    throw ContractError("TabularModel: P(.|s,a) does not sum to 1");
            }
        double p0 = 0.0;
        for (double p : initial_dist) p0 += p;
        if (std::abs(p0 - 1.0) > tol) throw ContractError("TabularModel: P0 does not sum to 1");
    }
};

/// Synchronous Bellman optimality iteration; the exact DP oracle.
/// Unvisited (s,a) pairs stay at zero.
inline QTable value_iteration(const TabularModel& model, double tol = 1e-8,
                              int max_sweeps = 100000) {
    if (tol <= 0.0) throw ContractError("value_iteration: tol must be positive");
    QTable q(model.n_states, model.n_actions);
    std::vector<double> v(model.n_states, 0.0);
    double residual = 0.0;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        for (std::int64_t s = 0; s < model.n_states; ++s) v[s] = q.state_value(s);
        residual = 0.0;
        for (std::int64_t s = 0; s < model.n_states; ++s) {
            for (int a = 0; a < model.n_actions; ++a) {
                if (!model.is_visited(s, a)) continue;
                double backup = 0.0;
                for (const auto& o : model.at(s, a))
                    backup += o.prob * (o.reward + (o.terminal ? 0.0 : model.gamma * v[o.next]));
                residual = std::max(residual, std::abs(backup - q.at(s, a)));
                q.at(s, a) = backup;
            }
        }
        if (residual <= tol) {
            q.converged = true;
            q.residual = residual;
            q.sweeps = sweep + 1;
            return q;
        }
    }
    throw ConvergenceError("value_iteration: no convergence within sweep limit", residual);
}

/// Maximum-likelihood one-step model from a batch of transitions.
inline TabularModel empirical_model(const Dataset& data, double gamma) {
    if (data.empty()) throw ContractError("empirical_model: empty dataset");
    TabularModel model(data.states.size(), data.actions.size(), gamma);
    std::fill(model.visited.begin(), model.visited.end(), 0);

    struct Cell {
        std::int64_t count = 0;
        double reward_sum = 0.0;
    };
    // (s,a) -> (s', terminal) -> stats
    std::map<std::pair<std::int64_t, int>, std::map<std::pair<std::int64_t, bool>, Cell>> counts;
    std::map<std::pair<std::int64_t, int>, std::int64_t> totals;
    for (const auto& e : data.items) {
        auto& cell = counts[{e.s, e.a}][{e.s_next, e.terminal}];
        cell.count += 1;
        cell.reward_sum += e.r;
        totals[{e.s, e.a}] += 1;
    }
    for (const auto& [sa, nexts] : counts) {
        model.visited[sa.first * model.n_actions + sa.second] = 1;
        auto& out = model.at(sa.first, sa.second);
        double total = static_cast<double>(totals[sa]);
        for (const auto& [key, cell] : nexts)
            out.push_back({key.first, cell.count / total, cell.reward_sum / cell.count,
                           key.second});
    }
    // Start-state frequencies are unknown to a pure transition batch; leave a
    // uniform placeholder so validate() passes.
    for (auto& p : model.initial_dist) p = 1.0 / model.n_states;
    return model;
}

}  // namespace hrl
