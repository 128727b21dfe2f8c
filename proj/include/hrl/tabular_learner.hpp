#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "hrl/dataset.hpp"
#include "hrl/hierarchy.hpp"
#include "hrl/tabular_model.hpp"

namespace hrl {

struct LearnerConfig {
    // Constant learning rate, used when count_decay_alpha is off.
    double alpha = 1.0;
    // alpha = 1/(1+n(s,u)) with per-(s,u) visit counts reset every sweep, so a
    // synchronous sweep applies the empirical Bellman operator exactly.
    bool count_decay_alpha = true;
    int max_iter = 500;
    double convergence_tol = 1e-6;
    double gamma = 0.99;
    // Apply the greedy-consistency filter in the terminal branch as well.
    // Off reproduces the literal update, which also credits children that did
    // not take the observed action.
    bool terminal_consistency_check = true;
    // Sanity corridor asserted after every sweep; [R_min,R_max]/(1-gamma).
    double q_lower = -std::numeric_limits<double>::infinity();
    double q_upper = std::numeric_limits<double>::infinity();

    void validate() const {
        if (alpha <= 0.0 || alpha > 1.0) throw ContractError("LearnerConfig: alpha outside (0,1]");
        if (gamma <= 0.0 || gamma > 1.0) throw ContractError("LearnerConfig: gamma outside (0,1]");
        if (convergence_tol < 0.0) throw ContractError("LearnerConfig: negative tolerance");
        if (max_iter <= 0) throw ContractError("LearnerConfig: max_iter must be positive");
    }
};

struct SubtaskQ {
    QTable table;
    Abstraction abstraction;

    double value(std::int64_t full_state, int child) const {
        return table.at(abstraction(full_state), child);
    }
    int greedy(std::int64_t full_state) const { return table.greedy(abstraction(full_state)); }
};

/// One independent Q table per subtask, indexed by the subtask's abstraction.
struct HierarchicalQ {
    std::map<int, SubtaskQ> tables;

    const SubtaskQ& at(int subtask_id) const {
        auto it = tables.find(subtask_id);
        if (it == tables.end()) throw ContractError("HierarchicalQ: no table for subtask");
        return it->second;
    }
};

/// Recursive greedy descent to a primitive action. At every level the argmax
/// is restricted to selectable children: primitives always, subtask children
/// only where their own termination is false (a terminated child would exit
/// immediately without acting). Ties break toward the lowest child index.
/// `beta` holds the termination table of every subtask (tabulate_terminations).
inline int greedy_policy(Child u, std::int64_t s, const TaskDag& dag, const HierarchicalQ& hq,
                         const std::map<int, std::vector<char>>& beta) {
    while (u.kind == Child::kSubtask) {
        const Subtask& st = dag.at(u.index);
        const SubtaskQ& q = hq.at(u.index);
        int best = -1;
        for (int c = 0; c < static_cast<int>(st.children.size()); ++c) {
            const Child& ch = st.children[c];
            if (ch.kind == Child::kSubtask && beta.at(ch.index)[s] != 0) continue;
            if (best < 0 || q.value(s, c) > q.value(s, best)) best = c;
        }
        // Degenerate hierarchies can leave no selectable child; fall back to
        // the unrestricted argmax rather than failing mid-episode.
        if (best < 0) best = q.greedy(s);
        u = st.children[best];
    }
    return u.index;
}

inline int greedy_policy(Child u, std::int64_t s, const TaskDag& dag, const Domain& domain,
                         const HierarchicalQ& hq) {
    return greedy_policy(u, s, dag, hq, tabulate_terminations(dag, domain));
}

namespace detail {

/// Per-child data resolved once per SQI call: the action the child's frozen
/// greedy policy takes in every state, and the child's termination table.
struct ChildContext {
    std::vector<int> greedy_action;  // indexed by full state
    std::vector<char> beta;          // beta_u per full state; primitives omit it (always 1)
    bool is_primitive = true;
};

inline std::vector<ChildContext> resolve_children(const Subtask& subtask, const TaskDag& dag,
                                                  const Domain& domain,
                                                  const HierarchicalQ& hq) {
    auto beta = tabulate_terminations(dag, domain);
    std::vector<ChildContext> ctx;
    for (const auto& child : subtask.children) {
        ChildContext c;
        if (child.kind == Child::kPrimitive) {
            c.is_primitive = true;
            c.greedy_action.assign(domain.states.size(), child.index);
        } else {
            c.is_primitive = false;
            c.beta = beta.at(child.index);
            c.greedy_action.resize(domain.states.size());
            for (std::int64_t s = 0; s < domain.states.size(); ++s)
                c.greedy_action[s] = greedy_policy(child, s, dag, hq, beta);
        }
        ctx.push_back(std::move(c));
    }
    return ctx;
}

}  // namespace detail

/// Intra-option backup target for one (experience, child) pair, or nothing
/// when the sample is inconsistent with the child's greedy behavior. A
/// subtask child terminated at exp.s cannot have produced the sample at all
/// (it would have exited without acting), so such pairs are inconsistent by
/// definition. `siblings`, when provided, restricts the continuation argmax
/// after a child exit to the children selectable at exp.s_next; when empty,
/// all children are considered.
inline std::optional<double> backup_target(const Experience& exp, int child_idx,
                                           const Subtask& subtask,
                                           const detail::ChildContext& child,
                                           const std::vector<char>& beta_i,
                                           const SubtaskQ& q_prev, const LearnerConfig& cfg,
                                           std::span<const detail::ChildContext> siblings = {}) {
    bool selectable = child.is_primitive || child.beta[exp.s] == 0;
    bool consistent = selectable && child.greedy_action[exp.s] == exp.a;
    bool next_terminal = exp.terminal || beta_i[exp.s_next] != 0;
    if (next_terminal) {
        if (cfg.terminal_consistency_check && !consistent) return std::nullopt;
        return exp.r;
    }
    if (!consistent) return std::nullopt;
    double beta_u = child.is_primitive ? 1.0 : (child.beta[exp.s_next] ? 1.0 : 0.0);
    std::int64_t as = q_prev.abstraction(exp.s_next);
    double cont;
    if (beta_u == 0.0) {
        cont = q_prev.table.at(as, child_idx);
    } else {
        double vmax = 0.0;
        bool any = false;
        for (int c2 = 0; c2 < static_cast<int>(siblings.size()); ++c2) {
            const auto& sib = siblings[c2];
            if (!sib.is_primitive && sib.beta[exp.s_next] != 0) continue;
            double v = q_prev.table.at(as, c2);
            if (!any || v > vmax) vmax = v;
            any = true;
        }
        cont = any ? vmax : q_prev.table.state_value(as);
    }
    return exp.r + cfg.gamma * cont;
}

/// Subtask Q-value iteration: synchronous sweeps over the batch until the
/// max-norm change falls under the tolerance or the sweep cap is hit.
/// Requires converged tables for all subtask children in hq.
inline SubtaskQ sqi(const Subtask& subtask, const Dataset& data, const TaskDag& dag,
                    const Domain& domain, const HierarchicalQ& hq, const LearnerConfig& cfg) {
    cfg.validate();
    if (data.empty()) throw ContractError("sqi: empty dataset");
    auto children = detail::resolve_children(subtask, dag, domain, hq);
    auto beta_i = domain.predicates.tabulate(subtask.termination, domain.states);

    SubtaskQ result{QTable(0, static_cast<int>(subtask.children.size())),
                    Abstraction(domain.states, subtask.abstraction)};
    result.table = QTable(result.abstraction.size(), static_cast<int>(subtask.children.size()));
    QTable& q = result.table;

    SubtaskQ prev = result;
    std::vector<std::int64_t> visits(q.values.size(), 0);
    for (int sweep = 0; sweep < cfg.max_iter; ++sweep) {
        prev.table.values = q.values;
        if (cfg.count_decay_alpha) std::fill(visits.begin(), visits.end(), 0);
        for (const auto& exp : data.items) {
            if (beta_i[exp.s] != 0) continue;  // Q_i is defined on active states only
            std::int64_t as = result.abstraction(exp.s);
            for (int c = 0; c < q.n_children; ++c) {
                auto y = backup_target(exp, c, subtask, children[c], beta_i, prev, cfg, children);
                if (!y) continue;
                std::size_t cell = as * q.n_children + c;
                double alpha =
                    cfg.count_decay_alpha ? 1.0 / (1.0 + visits[cell]++) : cfg.alpha;
                q.values[cell] = (1.0 - alpha) * q.values[cell] + alpha * *y;
            }
        }
        double residual = 0.0;
        for (std::size_t i = 0; i < q.values.size(); ++i) {
            residual = std::max(residual, std::abs(q.values[i] - prev.table.values[i]));
            if (q.values[i] < cfg.q_lower || q.values[i] > cfg.q_upper)
                throw ContractError("sqi: Q value left its sanity corridor");
        }
        q.residual = residual;
        q.sweeps = sweep + 1;
        if (residual <= cfg.convergence_tol) {
            q.converged = true;
            break;
        }
    }
    return result;
}

/// Trains every subtask bottom-up along training_order.
inline HierarchicalQ hqi(const TaskDag& dag, const Dataset& data, const Domain& domain,
                         const LearnerConfig& cfg) {
    auto report = dag.validate(domain.states, domain.actions, domain.predicates);
    if (!report.ok()) {
        std::string msg = "hqi: invalid DAG:";
        for (const auto& v : report.violations) msg += " [" + v + "]";
        throw ContractError(msg);
    }
    if (data.empty()) throw ContractError("hqi: empty dataset");
    HierarchicalQ hq;
    for (int id : dag.training_order())
        hq.tables[id] = sqi(dag.at(id), data, dag, domain, hq, cfg);
    return hq;
}

/// Builds the single-root DAG over every primitive action.
inline TaskDag make_flat_dag(const ActionSpace& actions) {
    TaskDag dag;
    dag.root = 0;
    Subtask root{0, "root", {}, "never", {}};
    for (int a = 0; a < actions.size(); ++a) root.children.push_back({Child::kPrimitive, a});
    dag.subtasks = {root};
    return dag;
}

/// Domain wrapper for flat problems; registers the always-active predicate.
inline Domain make_basic_domain(StateSpace states, ActionSpace actions) {
    Domain d{std::move(states), std::move(actions), {}};
    d.predicates.add("never", [](std::span<const int>) { return false; });
    return d;
}

/// Flat batch Q-value iteration: hqi on the single-root hierarchy.
inline SubtaskQ fqi_flat(const Dataset& data, const Domain& domain, const LearnerConfig& cfg) {
    TaskDag flat = make_flat_dag(domain.actions);
    auto hq = hqi(flat, data, domain, cfg);
    return hq.tables.at(0);
}

}  // namespace hrl
