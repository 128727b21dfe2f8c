#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hrl/state_space.hpp"
#include "hrl/taxi.hpp"

namespace hrl {

/// Named, deterministic, total predicate over decoded state-variable tuples.
using Predicate = std::function<bool(std::span<const int>)>;

/// Termination predicates are referenced by name from DAG configs and
/// resolved against a registry, keeping the config files declarative.
class PredicateRegistry {
  public:
    void add(const std::string& name, Predicate pred) { preds_[name] = std::move(pred); }

    bool contains(const std::string& name) const { return preds_.contains(name); }

    const Predicate& get(const std::string& name) const {
        auto it = preds_.find(name);
        if (it == preds_.end()) throw ContractError("unknown termination predicate: " + name);
        return it->second;
    }

    /// Tabulates beta over every state of a small enumerable space.
    std::vector<char> tabulate(const std::string& name, const StateSpace& space) const {
        const auto& pred = get(name);
        std::vector<char> table(space.size(), 0);
        for (std::int64_t s = 0; s < space.size(); ++s)
            table[s] = pred(space.decode(s)) ? 1 : 0;
        return table;
    }

  private:
    std::map<std::string, Predicate> preds_;
};

/// A child is either a primitive action or another subtask.
struct Child {
    enum Kind { kPrimitive, kSubtask } kind = kPrimitive;
    int index = 0;  // action index or subtask id
    bool operator==(const Child&) const = default;
};

struct Subtask {
    int id = 0;
    std::string name;
    std::vector<Child> children;  // order fixes the argmax tie-break
    std::string termination;
    std::vector<std::string> abstraction;  // masked variable names; empty = full state
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

struct TaskDag {
    std::vector<Subtask> subtasks;
    int root = 0;

    const Subtask& at(int id) const {
        for (const auto& st : subtasks)
            if (st.id == id) return st;
        throw ContractError("TaskDag: unknown subtask id");
    }

    ValidationReport validate(const StateSpace& space, const ActionSpace& actions,
                              const PredicateRegistry& preds) const {
        ValidationReport report;
        std::map<int, const Subtask*> by_id;
        for (const auto& st : subtasks) {
            if (by_id.contains(st.id))
                report.violations.push_back("duplicate subtask id " + std::to_string(st.id));
            by_id[st.id] = &st;
        }
        if (!by_id.contains(root)) {
            report.violations.push_back("root id not present");
            return report;
        }
        for (const auto& st : subtasks) {
            if (st.children.empty())
                report.violations.push_back(st.name + ": children must be nonempty");
            for (const auto& c : st.children) {
                if (c.kind == Child::kPrimitive) {
                    if (c.index < 0 || c.index >= actions.size())
                        report.violations.push_back(st.name + ": bad primitive index");
                } else if (!by_id.contains(c.index)) {
                    report.violations.push_back(st.name + ": child subtask id not found");
                }
            }
            if (!preds.contains(st.termination))
                report.violations.push_back(st.name + ": unresolvable predicate '" +
                                            st.termination + "'");
            for (const auto& var : st.abstraction) {
                bool found = false;
                for (const auto& v : space.variables()) found = found || v.name == var;
                if (!found)
                    report.violations.push_back(st.name + ": abstraction variable '" + var +
                                                "' not in state space");
            }
        }
        // Cycle check via DFS over subtask-to-subtask edges.
        std::map<int, int> color;  // 0 white, 1 gray, 2 black
        std::function<bool(int)> dfs = [&](int id) {
            color[id] = 1;
            for (const auto& c : at(id).children) {
                if (c.kind != Child::kSubtask) continue;
                if (!by_id.contains(c.index)) continue;
                if (color[c.index] == 1) return true;
                if (color[c.index] == 0 && dfs(c.index)) return true;
            }
            color[id] = 2;
            return false;
        };
        bool has_bad_child = false;
        for (const auto& st : subtasks)
            for (const auto& c : st.children)
                if (c.kind == Child::kSubtask && !by_id.contains(c.index)) has_bad_child = true;
        if (!has_bad_child && dfs(root)) report.violations.push_back("cycle in subtask graph");
        if (!has_bad_child) {
            for (const auto& st : subtasks)
                if (color[st.id] == 0)
                    report.violations.push_back(st.name + ": unreachable from root");
        }
        return report;
    }

    /// Topological order of the child-to-parent reversed graph: every subtask
    /// appears after all of its subtask children. Ties break by ascending id.
    std::vector<int> training_order() const {
        std::map<int, int> pending;  // subtask id -> unfinished subtask children
        std::map<int, std::vector<int>> parents;
        for (const auto& st : subtasks) {
            pending[st.id] = 0;
            for (const auto& c : st.children)
                if (c.kind == Child::kSubtask) {
                    pending[st.id] += 1;
                    parents[c.index].push_back(st.id);
                }
        }
        std::priority_queue<int, std::vector<int>, std::greater<>> ready;
        for (const auto& [id, deps] : pending)
            if (deps == 0) ready.push(id);
        std::vector<int> order;
        while (!ready.empty()) {
            int id = ready.top();
            ready.pop();
            order.push_back(id);
            for (int p : parents[id])
                if (--pending[p] == 0) ready.push(p);
        }
        if (order.size() != subtasks.size())
            throw ContractError("training_order: cycle in subtask graph");
        return order;
    }
};

/// Spaces plus the predicate registry a DAG resolves against.
struct Domain {
    StateSpace states;
    ActionSpace actions;
    PredicateRegistry predicates;
};

/// Termination tables for every subtask, keyed by id. A subtask entered in a
/// state where its own beta is true exits immediately without acting, so a
/// parent may only select children whose beta is false; greedy argmaxes and
/// sample filters use these tables to restrict the choice accordingly.
inline std::map<int, std::vector<char>> tabulate_terminations(const TaskDag& dag,
                                                              const Domain& domain) {
    std::map<int, std::vector<char>> beta;
    for (const auto& st : dag.subtasks)
        beta[st.id] = domain.predicates.tabulate(st.termination, domain.states);
    return beta;
}

namespace taxi {

inline Domain make_domain(const TaxiConfig& cfg = {}) {
    Domain d{make_state_space(cfg), make_action_space(), {}};
    auto landmarks = cfg.landmarks;
    // Variable order is [dest, pass, x, y].
    d.predicates.add("never", [](std::span<const int>) { return false; });
    d.predicates.add("passenger_in_taxi",
                     [](std::span<const int> v) { return v[1] == kInTaxi; });
    d.predicates.add("passenger_outside_taxi",
                     [](std::span<const int> v) { return v[1] != kInTaxi; });
    d.predicates.add("at_passenger_landmark", [landmarks](std::span<const int> v) {
        if (v[1] == kInTaxi) return true;  // nothing left to navigate to
        return v[2] == landmarks[v[1]].x && v[3] == landmarks[v[1]].y;
    });
    d.predicates.add("at_destination_landmark", [landmarks](std::span<const int> v) {
        return v[2] == landmarks[v[0]].x && v[3] == landmarks[v[0]].y;
    });
    // Current goal: the passenger's landmark before pickup, the destination after.
    d.predicates.add("at_goal_landmark", [landmarks](std::span<const int> v) {
        const Cell& goal = v[1] == kInTaxi ? landmarks[v[0]] : landmarks[v[1]];
        return v[2] == goal.x && v[3] == goal.y;
    });
    return d;
}

/// The get/put decomposition with navigation leaves. Abstractions: root [pass],
/// get/navi_get [pass,x,y], put/navi_put [dest,x,y].
inline TaskDag dag1() {
    TaskDag dag;
    dag.root = 0;
    dag.subtasks = {
        {0, "root", {{Child::kSubtask, 1}, {Child::kSubtask, 2}}, "never", {"pass"}},
        {1,
         "get",
         {{Child::kPrimitive, kPickup}, {Child::kSubtask, 3}},
         "passenger_in_taxi",
         {"pass", "x", "y"}},
        // put is active only while the passenger rides along. Letting it train
        // on pre-pickup states would be fatal under the [dest,x,y] mask: those
        // states alias the in-taxi ones, and their illegal putdowns (-10)
        // would dilute the +20 dropoff value at the destination.
        {2,
         "put",
         {{Child::kPrimitive, kPutdown}, {Child::kSubtask, 4}},
         "passenger_outside_taxi",
         {"dest", "x", "y"}},
        {3,
         "navi_get",
         {{Child::kPrimitive, kNorth},
          {Child::kPrimitive, kSouth},
          {Child::kPrimitive, kEast},
          {Child::kPrimitive, kWest}},
         "at_passenger_landmark",
         {"pass", "x", "y"}},
        {4,
         "navi_put",
         {{Child::kPrimitive, kNorth},
          {Child::kPrimitive, kSouth},
          {Child::kPrimitive, kEast},
          {Child::kPrimitive, kWest}},
         "at_destination_landmark",
         {"dest", "x", "y"}},
    };
    return dag;
}

/// Variant of dag1 without state abstraction; every subtask sees the full state.
inline TaskDag dag1_no_abstraction() {
    TaskDag dag = dag1();
    for (auto& st : dag.subtasks) st.abstraction.clear();
    return dag;
}

/// Reconstruction: pickup/putdown sit next to the move actions inside the
/// navigation-level subtasks instead of being isolated higher up.
inline TaskDag dag2() {
    TaskDag dag;
    dag.root = 0;
    std::vector<Child> moves = {{Child::kPrimitive, kNorth},
                                {Child::kPrimitive, kSouth},
                                {Child::kPrimitive, kEast},
                                {Child::kPrimitive, kWest}};
    auto with = [&](int action) {
        auto children = moves;
        children.push_back({Child::kPrimitive, action});
        return children;
    };
    dag.subtasks = {
        {0, "root", {{Child::kSubtask, 1}, {Child::kSubtask, 2}}, "never", {}},
        {1, "fetch", with(kPickup), "passenger_in_taxi", {}},
        {2, "deliver", with(kPutdown), "never", {}},
    };
    return dag;
}

/// Reconstruction: pickup/putdown stay at the top level and share one
/// navigation subtask that heads for the current goal landmark.
inline TaskDag dag3() {
    TaskDag dag;
    dag.root = 0;
    dag.subtasks = {
        {0,
         "root",
         {{Child::kPrimitive, kPickup}, {Child::kPrimitive, kPutdown}, {Child::kSubtask, 1}},
         "never",
         {}},
        {1,
         "navigate",
         {{Child::kPrimitive, kNorth},
          {Child::kPrimitive, kSouth},
          {Child::kPrimitive, kEast},
          {Child::kPrimitive, kWest}},
         "at_goal_landmark",
         {}},
    };
    return dag;
}

/// Single root over all six primitives; trains exactly like flat batch
/// Q-value iteration.
inline TaskDag flat_dag() {
    TaskDag dag;
    dag.root = 0;
    Subtask root{0, "root", {}, "never", {}};
    for (int a = 0; a < 6; ++a) root.children.push_back({Child::kPrimitive, a});
    dag.subtasks = {root};
    return dag;
}

inline std::map<std::string, TaskDag> builtin_dags() {
    return {{"dag1", dag1()},
            {"dag1_no_sa", dag1_no_abstraction()},
            {"dag2", dag2()},
            {"dag3", dag3()},
            {"flat", flat_dag()}};
}

}  // namespace taxi
}  // namespace hrl
