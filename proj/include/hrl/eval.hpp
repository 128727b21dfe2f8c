#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hrl/dataset.hpp"
#include "hrl/env.hpp"
#include "hrl/hierarchy.hpp"
#include "hrl/tabular_learner.hpp"

namespace hrl {

/// Deterministic per-state action map, or the uniform-random marker used as
/// the behavior policy.
struct FlatPolicy {
    bool uniform_random = true;
    std::vector<int> actions;

    static FlatPolicy uniform() { return {}; }

    static FlatPolicy greedy_from(const QTable& q) {
        FlatPolicy p;
        p.uniform_random = false;
        p.actions.resize(q.n_states);
        for (std::int64_t s = 0; s < q.n_states; ++s) p.actions[s] = q.greedy(s);
        return p;
    }
};

struct CollectionSpec {
    std::int64_t n_samples = 0;
    int episode_cap = 500;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_samples <= 0) throw ContractError("CollectionSpec: n_samples must be positive");
        if (episode_cap <= 0) throw ContractError("CollectionSpec: episode cap must be positive");
    }
};

/// Uniform-random rollouts, resetting on terminal or at the episode cap,
/// until exactly n_samples transitions are recorded.
inline Dataset collect(const Env& env, const CollectionSpec& spec) {
    spec.validate();
    Dataset data{env.states(), env.actions(), {}};
    data.items.reserve(spec.n_samples);
    Rng rng = make_rng(spec.seed);
    std::uniform_int_distribution<int> pick(0, env.actions().size() - 1);
    std::int64_t s = env.reset(rng);
    int steps_in_episode = 0;
    while (static_cast<std::int64_t>(data.items.size()) < spec.n_samples) {
        int a = pick(rng);
        auto out = env.step(s, a, rng);
        data.items.push_back({s, a, out.r, out.s_next, out.terminal});
        ++steps_in_episode;
        if (out.terminal || steps_in_episode >= spec.episode_cap) {
            s = env.reset(rng);
            steps_in_episode = 0;
        } else {
            s = out.s_next;
        }
    }
    return data;
}

/// Greedy child choice per subtask; implemented by tabular tables and by the
/// fitted models. `selectable` flags which child indices may be chosen at the
/// current state (at least one is set; an empty span means no restriction) —
/// the executor masks out subtask children whose own termination holds, since
/// entering one would exit immediately without acting.
class HierarchicalPolicy {
  public:
    virtual ~HierarchicalPolicy() = default;
    virtual int greedy_child_index(int subtask_id, std::int64_t s,
                                   std::span<const char> selectable = {}) const = 0;
};

class TabularPolicy final : public HierarchicalPolicy {
  public:
    explicit TabularPolicy(const HierarchicalQ& hq) : hq_(&hq) {}
    int greedy_child_index(int subtask_id, std::int64_t s,
                           std::span<const char> selectable = {}) const override {
        const SubtaskQ& q = hq_->at(subtask_id);
        if (selectable.empty()) return q.greedy(s);
        int best = -1;
        for (int c = 0; c < static_cast<int>(selectable.size()); ++c) {
            if (!selectable[c]) continue;
            if (best < 0 || q.value(s, c) > q.value(s, best)) best = c;
        }
        return best;
    }

  private:
    const HierarchicalQ* hq_;
};

struct ExecutionResult {
    double discounted_return = 0.0;
    int steps = 0;
    bool truncated = false;
};

/// Call-and-return execution with ancestor interrupts: after every primitive
/// step the shallowest terminated subtask on the stack is popped together
/// with everything beneath it, and control re-descends from the new top.
inline ExecutionResult execute_hierarchical(const HierarchicalPolicy& policy, const TaskDag& dag,
                                            const Domain& domain, const Env& env, Rng& rng,
                                            int max_steps = 1000, double gamma = 0.99) {
    auto beta = tabulate_terminations(dag, domain);

    std::int64_t s = env.reset(rng);
    std::vector<int> stack{dag.root};
    std::vector<char> selectable;
    ExecutionResult result;
    double discount = 1.0;
    while (result.steps < max_steps) {
        // Descend greedily from the stack top to a primitive, considering only
        // children that would not terminate on entry.
        Child next{Child::kSubtask, stack.back()};
        while (next.kind == Child::kSubtask) {
            if (next.index != stack.back()) stack.push_back(next.index);
            const Subtask& st = dag.at(next.index);
            selectable.assign(st.children.size(), 0);
            bool any = false;
            for (std::size_t c = 0; c < st.children.size(); ++c) {
                const Child& ch = st.children[c];
                selectable[c] = ch.kind == Child::kPrimitive || beta[ch.index][s] == 0;
                any = any || selectable[c] != 0;
            }
            // Degenerate hierarchies can leave no selectable child; fall back
            // to the unrestricted argmax rather than failing mid-episode.
            if (!any) selectable.assign(st.children.size(), 1);
            next = st.children[policy.greedy_child_index(next.index, s, selectable)];
            if (stack.size() > dag.subtasks.size())
                throw ContractError("execute_hierarchical: call stack exceeds subtask count");
        }
        auto out = env.step(s, next.index, rng);
        result.discounted_return += discount * out.r;
        discount *= gamma;
        ++result.steps;
        if (out.terminal) return result;
        s = out.s_next;
        // Shallowest terminated subtask pops with its whole subtree.
        for (std::size_t i = 0; i < stack.size(); ++i) {
            if (beta[stack[i]][s] != 0) {
                if (i == 0) return result;  // root termination ends the episode
                stack.resize(i);
                break;
            }
        }
    }
    result.truncated = true;
    return result;
}

struct EvaluationResult {
    double mean_return = 0.0;
    int episodes = 0;
    int truncations = 0;
};

/// Mean discounted return over independently seeded greedy episodes.
inline EvaluationResult evaluate(const HierarchicalPolicy& policy, const TaskDag& dag,
                                 const Domain& domain, const Env& env, int n_episodes,
                                 double gamma, std::uint64_t seed, int max_steps = 1000) {
    EvaluationResult result;
    result.episodes = n_episodes;
    for (int ep = 0; ep < n_episodes; ++ep) {
        Rng rng = make_rng(derive_seed(seed, 0x9e3779b9u, ep));
        auto run = execute_hierarchical(policy, dag, domain, env, rng, max_steps, gamma);
        result.mean_return += run.discounted_return;
        if (run.truncated) ++result.truncations;
    }
    if (n_episodes > 0) result.mean_return /= n_episodes;
    return result;
}

}  // namespace hrl
