#pragma once

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hrl/dataset.hpp"
#include "hrl/fitted_learner.hpp"
#include "hrl/hierarchy.hpp"
#include "hrl/random_forest.hpp"
#include "hrl/tabular_learner.hpp"
#include "hrl/taxi.hpp"

namespace hrl::io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// atomic file writing

inline void write_atomic(const std::string& path, const std::string& content) {
    std::filesystem::path target(path);
    auto tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
}

inline std::string read_all(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::uint64_t content_hash(const std::string& content) {
    // FNV-1a
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : content) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// dataset: line-oriented, one experience per line

inline constexpr const char* kDatasetFormat = "hrl-dataset-v1";

inline void save_dataset(const std::string& path, const Dataset& data) {
    std::ostringstream out;
    out << kDatasetFormat << "\n";
    out << "vars";
    for (const auto& v : data.states.variables()) out << ' ' << v.name << ':' << v.cardinality;
    out << "\nactions";
    for (const auto& a : data.actions.actions) out << ' ' << a;
    out << "\n";
    char buf[64];
    for (const auto& e : data.items) {
        for (int v : data.states.decode(e.s)) out << v << ' ';
        out << data.actions.actions[e.a] << ' ';
        std::snprintf(buf, sizeof(buf), "%.17g", e.r);
        out << buf << ' ';
        for (int v : data.states.decode(e.s_next)) out << v << ' ';
        out << (e.terminal ? 1 : 0) << "\n";
    }
    write_atomic(path, out.str());
}

/// Loads a dataset; when `expected` is given the header must match it.
inline Dataset load_dataset(const std::string& path, const StateSpace* expected = nullptr) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& what) {
        throw IoError(path + ":" + std::to_string(lineno) + ": " + what);
    };
    if (!std::getline(in, line) || (++lineno, line != kDatasetFormat))
        fail("bad dataset header, expected " + std::string(kDatasetFormat));

    if (!std::getline(in, line)) fail("missing vars line");
    ++lineno;
    std::istringstream vs(line);
    std::string tok;
    vs >> tok;
    if (tok != "vars") fail("expected vars line");
    std::vector<Variable> vars;
    while (vs >> tok) {
        auto colon = tok.find(':');
        if (colon == std::string::npos) fail("malformed variable spec " + tok);
        vars.push_back({tok.substr(0, colon), std::stoi(tok.substr(colon + 1))});
    }
    StateSpace states(vars);
    if (expected && !(states == *expected)) fail("state-space header mismatch");

    if (!std::getline(in, line)) fail("missing actions line");
    ++lineno;
    std::istringstream as(line);
    as >> tok;
    if (tok != "actions") fail("expected actions line");
    ActionSpace actions;
    while (as >> tok) actions.actions.push_back(tok);
    actions.validate();

    Dataset data{states, actions, {}};
    std::vector<int> v(vars.size());
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        try {
            for (auto& x : v)
                if (!(ls >> x)) fail("malformed state");
            Experience e;
            e.s = states.encode(v);
            std::string action;
            if (!(ls >> action)) fail("missing action");
            e.a = actions.index_of(action);
            if (!(ls >> e.r)) fail("missing reward");
            for (auto& x : v)
                if (!(ls >> x)) fail("malformed next state");
            e.s_next = states.encode(v);
            int term = 0;
            if (!(ls >> term)) fail("missing terminal flag");
            e.terminal = term != 0;
            data.items.push_back(e);
        } catch (const ContractError& ex) {
            fail(ex.what());  // out-of-range value or unknown action name
        }
    }
    return data;
}

// ---------------------------------------------------------------------------
// DAG config

inline json dag_to_json(const TaskDag& dag, const ActionSpace& actions) {
    json subtasks = json::array();
    for (const auto& st : dag.subtasks) {
        json children = json::array();
        for (const auto& c : st.children)
            children.push_back(c.kind == Child::kPrimitive ? actions.actions[c.index]
                                                           : dag.at(c.index).name);
        subtasks.push_back({{"name", st.name},
                            {"children", children},
                            {"termination", st.termination},
                            {"abstraction", st.abstraction}});
    }
    return {{"format", "hrl-dag-v1"}, {"root", dag.at(dag.root).name}, {"subtasks", subtasks}};
}

/// Children are named: primitive action names take precedence, the rest must
/// be subtask names. Ids are assigned by listing order.
inline TaskDag dag_from_json(const json& j, const ActionSpace& actions) {
    if (j.value("format", "") != "hrl-dag-v1") throw IoError("dag config: bad format tag");
    TaskDag dag;
    std::map<std::string, int> ids;
    int next_id = 0;
    for (const auto& st : j.at("subtasks")) ids[st.at("name").get<std::string>()] = next_id++;
    for (const auto& stj : j.at("subtasks")) {
        Subtask st;
        st.name = stj.at("name").get<std::string>();
        st.id = ids.at(st.name);
        st.termination = stj.at("termination").get<std::string>();
        if (stj.contains("abstraction"))
            st.abstraction = stj.at("abstraction").get<std::vector<std::string>>();
        for (const auto& cj : stj.at("children")) {
            auto name = cj.get<std::string>();
            bool primitive = false;
            for (int a = 0; a < actions.size(); ++a)
                if (actions.actions[a] == name) {
                    st.children.push_back({Child::kPrimitive, a});
                    primitive = true;
                    break;
                }
            if (!primitive) {
                auto it = ids.find(name);
                if (it == ids.end()) throw IoError("dag config: unknown child " + name);
                st.children.push_back({Child::kSubtask, it->second});
            }
        }
        dag.subtasks.push_back(std::move(st));
    }
    auto root_name = j.at("root").get<std::string>();
    auto it = ids.find(root_name);
    if (it == ids.end()) throw IoError("dag config: unknown root " + root_name);
    dag.root = it->second;
    return dag;
}

// ---------------------------------------------------------------------------
// taxi env config

inline json taxi_config_to_json(const taxi::TaxiConfig& cfg) {
    json landmarks = json::array();
    for (const auto& lm : cfg.landmarks) landmarks.push_back({lm.x, lm.y});
    json walls = json::array();
    for (const auto& [a, b] : cfg.walls) walls.push_back({{a.x, a.y}, {b.x, b.y}});
    return {{"format", "hrl-taxi-v1"},
            {"width", cfg.width},
            {"height", cfg.height},
            {"landmarks", landmarks},
            {"walls", walls},
            {"slip", cfg.slip},
            {"slip_mode",
             cfg.slip_mode == taxi::SlipMode::kAllOther ? "all_other" : "perpendicular"},
            {"step_reward", cfg.step_reward},
            {"illegal_reward", cfg.illegal_reward},
            {"success_reward", cfg.success_reward},
            {"gamma", cfg.gamma},
            {"episode_cap", cfg.episode_cap},
            {"allow_passenger_at_destination", cfg.allow_passenger_at_destination}};
}

inline taxi::TaxiConfig taxi_config_from_json(const json& j) {
    if (j.value("format", "") != "hrl-taxi-v1") throw IoError("taxi config: bad format tag");
    taxi::TaxiConfig cfg;
    cfg.width = j.value("width", cfg.width);
    cfg.height = j.value("height", cfg.height);
    if (j.contains("landmarks")) {
        cfg.landmarks.clear();
        for (const auto& lm : j.at("landmarks"))
            cfg.landmarks.push_back({lm.at(0).get<int>(), lm.at(1).get<int>()});
    }
    if (j.contains("walls")) {
        cfg.walls.clear();
        for (const auto& w : j.at("walls"))
            cfg.walls.push_back({{w.at(0).at(0).get<int>(), w.at(0).at(1).get<int>()},
                                 {w.at(1).at(0).get<int>(), w.at(1).at(1).get<int>()}});
    }
    cfg.slip = j.value("slip", cfg.slip);
    if (j.contains("slip_mode")) {
        auto mode = j.at("slip_mode").get<std::string>();
        if (mode == "all_other")
            cfg.slip_mode = taxi::SlipMode::kAllOther;
        else if (mode == "perpendicular")
            cfg.slip_mode = taxi::SlipMode::kPerpendicular;
        else
            throw IoError("taxi config: unknown slip_mode " + mode);
    }
    cfg.step_reward = j.value("step_reward", cfg.step_reward);
    cfg.illegal_reward = j.value("illegal_reward", cfg.illegal_reward);
    cfg.success_reward = j.value("success_reward", cfg.success_reward);
    cfg.gamma = j.value("gamma", cfg.gamma);
    cfg.episode_cap = j.value("episode_cap", cfg.episode_cap);
    cfg.allow_passenger_at_destination =
        j.value("allow_passenger_at_destination", cfg.allow_passenger_at_destination);
    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------------
// learner configs

inline json learner_config_to_json(const LearnerConfig& cfg) {
    json j{{"alpha", cfg.alpha},
           {"count_decay_alpha", cfg.count_decay_alpha},
           {"max_iter", cfg.max_iter},
           {"convergence_tol", cfg.convergence_tol},
           {"gamma", cfg.gamma},
           {"terminal_consistency_check", cfg.terminal_consistency_check}};
    if (std::isfinite(cfg.q_lower)) j["q_lower"] = cfg.q_lower;
    if (std::isfinite(cfg.q_upper)) j["q_upper"] = cfg.q_upper;
    return j;
}

inline LearnerConfig learner_config_from_json(const json& j) {
    LearnerConfig cfg;
    cfg.alpha = j.value("alpha", cfg.alpha);
    cfg.count_decay_alpha = j.value("count_decay_alpha", cfg.count_decay_alpha);
    cfg.max_iter = j.value("max_iter", cfg.max_iter);
    cfg.convergence_tol = j.value("convergence_tol", cfg.convergence_tol);
    cfg.gamma = j.value("gamma", cfg.gamma);
    cfg.terminal_consistency_check =
        j.value("terminal_consistency_check", cfg.terminal_consistency_check);
    if (j.contains("q_lower")) cfg.q_lower = j.at("q_lower").get<double>();
    if (j.contains("q_upper")) cfg.q_upper = j.at("q_upper").get<double>();
    cfg.validate();
    return cfg;
}

inline json forest_config_to_json(const TreeEnsembleConfig& cfg) {
    return {{"n_trees", cfg.n_trees},
            {"max_depth", cfg.max_depth},
            {"min_samples_leaf", cfg.min_samples_leaf},
            {"feature_fraction", cfg.feature_fraction},
            {"seed", cfg.seed}};
}

inline TreeEnsembleConfig forest_config_from_json(const json& j) {
    TreeEnsembleConfig cfg;
    cfg.n_trees = j.value("n_trees", cfg.n_trees);
    cfg.max_depth = j.value("max_depth", cfg.max_depth);
    cfg.min_samples_leaf = j.value("min_samples_leaf", cfg.min_samples_leaf);
    cfg.feature_fraction = j.value("feature_fraction", cfg.feature_fraction);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.validate();
    return cfg;
}

inline json fitted_config_to_json(const FittedLearnerConfig& cfg) {
    return {{"max_iter", cfg.max_iter},
            {"convergence_tol", cfg.convergence_tol},
            {"gamma", cfg.gamma},
            {"terminal_consistency_check", cfg.terminal_consistency_check},
            {"seed", cfg.seed}};
}

inline FittedLearnerConfig fitted_config_from_json(const json& j) {
    FittedLearnerConfig cfg;
    cfg.max_iter = j.value("max_iter", cfg.max_iter);
    cfg.convergence_tol = j.value("convergence_tol", cfg.convergence_tol);
    cfg.gamma = j.value("gamma", cfg.gamma);
    cfg.terminal_consistency_check =
        j.value("terminal_consistency_check", cfg.terminal_consistency_check);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------------
// learned policies

inline constexpr const char* kPolicyFormat = "hrl-qtables-v1";

inline json hq_to_json(const HierarchicalQ& hq, const TaskDag& dag, const ActionSpace& actions) {
    json tables = json::object();
    for (const auto& [id, sq] : hq.tables) {
        const Subtask& st = dag.at(id);
        json children = json::array();
        for (const auto& c : st.children)
            children.push_back(c.kind == Child::kPrimitive ? actions.actions[c.index]
                                                           : dag.at(c.index).name);
        tables[st.name] = {{"abstraction", st.abstraction},
                           {"children", children},
                           {"values", sq.table.values},
                           {"converged", sq.table.converged},
                           {"residual", sq.table.residual},
                           {"sweeps", sq.table.sweeps}};
    }
    return {{"format", kPolicyFormat},
            {"kind", "tabular"},
            {"dag", dag_to_json(dag, actions)},
            {"tables", tables}};
}

inline HierarchicalQ hq_from_json(const json& j, const TaskDag& dag, const Domain& domain) {
    if (j.value("format", "") != kPolicyFormat) throw IoError("policy file: bad format tag");
    if (j.value("kind", "") != "tabular") throw IoError("policy file: not a tabular policy");
    // Structural guard: the stored DAG must match the one we are loading for.
    if (j.at("dag") != dag_to_json(dag, domain.actions))
        throw IoError("policy file: DAG mismatch");
    HierarchicalQ hq;
    for (const auto& st : dag.subtasks) {
        const auto& tj = j.at("tables").at(st.name);
        if (tj.at("abstraction").get<std::vector<std::string>>() != st.abstraction)
            throw IoError("policy file: abstraction mismatch for " + st.name);
        SubtaskQ sq;
        sq.abstraction = Abstraction(domain.states, st.abstraction);
        sq.table = QTable(sq.abstraction.size(), static_cast<int>(st.children.size()));
        auto values = tj.at("values").get<std::vector<double>>();
        if (values.size() != sq.table.values.size())
            throw IoError("policy file: table size mismatch for " + st.name);
        sq.table.values = std::move(values);
        sq.table.converged = tj.value("converged", false);
        sq.table.residual = tj.value("residual", 0.0);
        sq.table.sweeps = tj.value("sweeps", 0);
        hq.tables[st.id] = std::move(sq);
    }
    return hq;
}

inline json fitted_to_json(const FittedHierarchicalQ& hq, const TaskDag& dag,
                           const ActionSpace& actions) {
    json tables = json::object();
    for (const auto& [id, sq] : hq.tables) {
        json models = json::array();
        for (const auto& m : sq.models) models.push_back(m ? m->to_json() : json(nullptr));
        tables[dag.at(id).name] = {{"models", models}};
    }
    return {{"format", kPolicyFormat},
            {"kind", "fitted"},
            {"dag", dag_to_json(dag, actions)},
            {"tables", tables}};
}

inline FittedHierarchicalQ fitted_from_json(const json& j, const TaskDag& dag,
                                            const Domain& domain,
                                            const FeatureEncoder& encoder) {
    if (j.value("format", "") != kPolicyFormat) throw IoError("policy file: bad format tag");
    if (j.value("kind", "") != "fitted") throw IoError("policy file: not a fitted policy");
    if (j.at("dag") != dag_to_json(dag, domain.actions))
        throw IoError("policy file: DAG mismatch");
    auto features = encoder.encode_all();
    FittedHierarchicalQ hq;
    for (const auto& st : dag.subtasks) {
        const auto& tj = j.at("tables").at(st.name);
        FittedSubtaskQ sq;
        for (const auto& mj : tj.at("models"))
            sq.models.push_back(mj.is_null() ? nullptr : regressor_from_json(mj));
        sq.predictions.assign(sq.models.size(),
                              std::vector<double>(domain.states.size(), 0.0));
        for (std::size_t c = 0; c < sq.models.size(); ++c) {
            if (!sq.models[c]) continue;
            for (std::int64_t s = 0; s < domain.states.size(); ++s)
                sq.predictions[c][s] = sq.models[c]->predict(features[s]);
        }
        hq.tables[st.id] = std::move(sq);
    }
    return hq;
}

// ---------------------------------------------------------------------------
// run manifest

inline json make_manifest(const std::string& command, const json& effective_config,
                          std::uint64_t seed) {
    char stamp[32];
    std::time_t now = std::time(nullptr);
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return {{"format", "hrl-manifest-v1"},
            {"command", command},
            {"seed", seed},
            {"config_hash", content_hash(effective_config.dump())},
            {"config", effective_config},
            {"file_formats",
             {{"dataset", kDatasetFormat},
              {"policy", kPolicyFormat},
              {"dag", "hrl-dag-v1"},
              {"taxi", "hrl-taxi-v1"}}},
            {"timestamp", stamp}};
}

}  // namespace hrl::io
