#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "hrl/dataset.hpp"
#include "hrl/eval.hpp"
#include "hrl/feature_encoder.hpp"
#include "hrl/hierarchy.hpp"
#include "hrl/regressor.hpp"

namespace hrl {

struct FittedLearnerConfig {
    int max_iter = 100;
    // Early stop when max |delta Q| over training inputs drops below this.
    double convergence_tol = 1e-3;
    double gamma = 0.99;
    bool terminal_consistency_check = true;
    std::uint64_t seed = 0;

    void validate() const {
        if (gamma <= 0.0 || gamma > 1.0)
            throw ContractError("FittedLearnerConfig: gamma outside (0,1]");
        if (max_iter <= 0) throw ContractError("FittedLearnerConfig: max_iter must be positive");
    }
};

/// One regressor per child, state-only inputs. Predictions over the
/// enumerable state space are cached after each refit so greedy lookups and
/// backup targets are table reads.
struct FittedSubtaskQ {
    std::vector<std::unique_ptr<Regressor>> models;          // per child; null = constant 0
    std::vector<std::vector<double>> predictions;            // [child][state]
    bool converged = false;
    double residual = 0.0;
    int sweeps = 0;

    int n_children() const { return static_cast<int>(predictions.size()); }

    double value(std::int64_t s, int child) const { return predictions[child][s]; }

    int greedy(std::int64_t s) const {
        int best = 0;
        for (int c = 1; c < n_children(); ++c)
            if (predictions[c][s] > predictions[best][s]) best = c;
        return best;
    }
};

struct FittedHierarchicalQ {
    std::map<int, FittedSubtaskQ> tables;

    const FittedSubtaskQ& at(int subtask_id) const {
        auto it = tables.find(subtask_id);
        if (it == tables.end()) throw ContractError("FittedHierarchicalQ: no table for subtask");
        return it->second;
    }
};

class FittedPolicy final : public HierarchicalPolicy {
  public:
    explicit FittedPolicy(const FittedHierarchicalQ& hq) : hq_(&hq) {}
    int greedy_child_index(int subtask_id, std::int64_t s,
                           std::span<const char> selectable = {}) const override {
        const FittedSubtaskQ& q = hq_->at(subtask_id);
        if (selectable.empty()) return q.greedy(s);
        int best = -1;
        for (int c = 0; c < static_cast<int>(selectable.size()); ++c) {
            if (!selectable[c]) continue;
            if (best < 0 || q.value(s, c) > q.value(s, best)) best = c;
        }
        return best;
    }

  private:
    const FittedHierarchicalQ* hq_;
};

/// Mirrors the tabular greedy descent: only children that would not terminate
/// on entry are considered; lowest index wins ties.
inline int fitted_greedy_policy(Child u, std::int64_t s, const TaskDag& dag,
                                const FittedHierarchicalQ& hq,
                                const std::map<int, std::vector<char>>& beta) {
    while (u.kind == Child::kSubtask) {
        const Subtask& st = dag.at(u.index);
        const FittedSubtaskQ& q = hq.at(u.index);
        int best = -1;
        for (int c = 0; c < static_cast<int>(st.children.size()); ++c) {
            const Child& ch = st.children[c];
            if (ch.kind == Child::kSubtask && beta.at(ch.index)[s] != 0) continue;
            if (best < 0 || q.value(s, c) > q.value(s, best)) best = c;
        }
        if (best < 0) best = q.greedy(s);
        u = st.children[best];
    }
    return u.index;
}

inline int fitted_greedy_policy(Child u, std::int64_t s, const TaskDag& dag, const Domain& domain,
                                const FittedHierarchicalQ& hq) {
    return fitted_greedy_policy(u, s, dag, hq, tabulate_terminations(dag, domain));
}

/// Fitted subtask solver: same backup contract as the tabular sweep, but each
/// sweep collects (features, target) pairs per child and refits a fresh model.
inline FittedSubtaskQ fitted_sqi(const Subtask& subtask, const Dataset& data, const TaskDag& dag,
                                 const Domain& domain, const FittedHierarchicalQ& hq,
                                 const RegressorFactory& factory, const FeatureEncoder& encoder,
                                 const FittedLearnerConfig& cfg) {
    cfg.validate();
    if (data.empty()) throw ContractError("fitted_sqi: empty dataset");
    const int n_children = static_cast<int>(subtask.children.size());
    const std::int64_t n_states = domain.states.size();

    auto beta = tabulate_terminations(dag, domain);
    auto beta_i = domain.predicates.tabulate(subtask.termination, domain.states);
    // Child greedy policies and terminations are frozen for the whole call.
    std::vector<std::vector<int>> greedy_action(n_children);
    std::vector<std::vector<char>> beta_u(n_children);
    std::vector<char> is_primitive(n_children, 1);
    for (int c = 0; c < n_children; ++c) {
        const Child& child = subtask.children[c];
        if (child.kind == Child::kPrimitive) {
            greedy_action[c].assign(n_states, child.index);
        } else {
            is_primitive[c] = 0;
            beta_u[c] = beta.at(child.index);
            greedy_action[c].resize(n_states);
            for (std::int64_t s = 0; s < n_states; ++s)
                greedy_action[c][s] = fitted_greedy_policy(child, s, dag, hq, beta);
        }
    }

    auto features = encoder.encode_all();
    FittedSubtaskQ result;
    result.models.resize(n_children);
    result.predictions.assign(n_children, std::vector<double>(n_states, 0.0));

    std::vector<std::vector<std::vector<double>>> xs(n_children);
    std::vector<std::vector<double>> ys(n_children);
    std::vector<std::vector<char>> in_training(n_children);
    for (int sweep = 0; sweep < cfg.max_iter; ++sweep) {
        for (int c = 0; c < n_children; ++c) {
            xs[c].clear();
            ys[c].clear();
            in_training[c].assign(n_states, 0);
        }
        auto prev = result.predictions;
        for (const auto& exp : data.items) {
            if (beta_i[exp.s] != 0) continue;
            for (int c = 0; c < n_children; ++c) {
                // Same contract as the tabular backup: a subtask child
                // terminated at exp.s could not have produced the sample, and
                // the continuation argmax after a child exit ranges over the
                // children selectable at exp.s_next.
                bool selectable = is_primitive[c] || beta_u[c][exp.s] == 0;
                bool consistent = selectable && greedy_action[c][exp.s] == exp.a;
                bool next_terminal = exp.terminal || beta_i[exp.s_next] != 0;
                double y;
                if (next_terminal) {
                    if (cfg.terminal_consistency_check && !consistent) continue;
                    y = exp.r;
                } else {
                    if (!consistent) continue;
                    double bu = is_primitive[c] ? 1.0 : (beta_u[c][exp.s_next] ? 1.0 : 0.0);
                    if (bu == 0.0) {
                        y = exp.r + cfg.gamma * prev[c][exp.s_next];
                    } else {
                        double vmax = 0.0;
                        bool any = false;
                        for (int c2 = 0; c2 < n_children; ++c2) {
                            if (!is_primitive[c2] && beta_u[c2][exp.s_next] != 0) continue;
                            double v = prev[c2][exp.s_next];
                            if (!any || v > vmax) vmax = v;
                            any = true;
                        }
                        if (!any) {
                            vmax = prev[0][exp.s_next];
                            for (int c2 = 1; c2 < n_children; ++c2)
                                vmax = std::max(vmax, prev[c2][exp.s_next]);
                        }
                        y = exp.r + cfg.gamma * ((1.0 - bu) * prev[c][exp.s_next] + bu * vmax);
                    }
                }
                xs[c].push_back(features[exp.s]);
                ys[c].push_back(y);
                in_training[c][exp.s] = 1;
            }
        }
        double residual = 0.0;
        for (int c = 0; c < n_children; ++c) {
            if (xs[c].empty()) {
                // No consistent samples for this child; it stays at zero.
                result.models[c] = nullptr;
                std::fill(result.predictions[c].begin(), result.predictions[c].end(), 0.0);
                continue;
            }
            auto model = factory(derive_seed(cfg.seed, subtask.id, sweep, c));
            model->fit(xs[c], ys[c]);
            for (std::int64_t s = 0; s < n_states; ++s) {
                result.predictions[c][s] = model->predict(features[s]);
                if (in_training[c][s])
                    residual = std::max(residual,
                                        std::abs(result.predictions[c][s] - prev[c][s]));
            }
            result.models[c] = std::move(model);
        }
        result.residual = residual;
        result.sweeps = sweep + 1;
        if (residual <= cfg.convergence_tol) {
            result.converged = true;
            break;
        }
    }
    return result;
}

/// Fitted hierarchical training along the same bottom-up order as hqi.
inline FittedHierarchicalQ fitted_hqi(const TaskDag& dag, const Dataset& data,
                                      const Domain& domain, const RegressorFactory& factory,
                                      const FeatureEncoder& encoder,
                                      const FittedLearnerConfig& cfg) {
    auto report = dag.validate(domain.states, domain.actions, domain.predicates);
    if (!report.ok()) throw ContractError("fitted_hqi: invalid DAG");
    if (data.empty()) throw ContractError("fitted_hqi: empty dataset");
    FittedHierarchicalQ hq;
    for (int id : dag.training_order())
        hq.tables[id] = fitted_sqi(dag.at(id), data, dag, domain, hq, factory, encoder, cfg);
    return hq;
}

}  // namespace hrl
