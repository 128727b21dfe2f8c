#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hrl/eval.hpp"
#include "hrl/fitted_learner.hpp"
#include "hrl/io.hpp"
#include "hrl/random_forest.hpp"
#include "hrl/tabular_learner.hpp"
#include "hrl/taxi.hpp"

namespace hrl {

struct LearnerSetup {
    std::string name;          // row label in the report
    std::string dag;           // builtin dag id or path to a dag config file
    bool fitted = false;       // tree-ensemble fitted learner instead of tabular
};

struct ExperimentSpec {
    taxi::TaxiConfig env;
    std::vector<LearnerSetup> learners;
    std::vector<std::int64_t> checkpoints = {5000,  10000, 15000, 20000, 25000, 30000,
                                             35000, 40000, 45000, 50000, 55000, 60000};
    int repeats = 5;
    int eval_episodes = 100;
    int eval_max_steps = 1000;
    std::uint64_t seed = 0;
    LearnerConfig learner;
    FittedLearnerConfig fitted;
    TreeEnsembleConfig forest;

    void validate() const {
        if (learners.empty()) throw ContractError("ExperimentSpec: no learners");
        if (repeats < 1) throw ContractError("ExperimentSpec: repeats must be >= 1");
        if (checkpoints.empty()) throw ContractError("ExperimentSpec: no checkpoints");
        for (std::size_t i = 1; i < checkpoints.size(); ++i)
            if (checkpoints[i] <= checkpoints[i - 1])
                throw ContractError("ExperimentSpec: checkpoints must ascend");
    }
};

/// The reproduction setup: flat baseline, hierarchy without abstraction, and
/// hierarchy with per-subtask abstraction, all on the same datasets.
inline ExperimentSpec benchmark_experiment_spec() {
    ExperimentSpec spec;
    spec.learners = {{"fqi", "flat", false},
                     {"hqi", "dag1_no_sa", false},
                     {"hqi_sa", "dag1", false}};
    spec.learner.gamma = spec.env.gamma;
    spec.learner.q_lower = spec.env.illegal_reward / (1.0 - spec.env.gamma);
    spec.learner.q_upper = spec.env.success_reward / (1.0 - spec.env.gamma);
    spec.fitted.gamma = spec.env.gamma;
    return spec;
}

struct EvalCell {
    std::string learner;
    std::string dag;
    std::int64_t checkpoint = 0;
    int seed_index = 0;
    double mean_return = 0.0;
    int episodes = 0;
    int truncations = 0;
    std::string error;  // nonempty when this cell failed
};

struct AggregateRow {
    std::string learner;
    std::string dag;
    std::int64_t checkpoint = 0;
    double mean = 0.0;
    double stddev = 0.0;
    double best = 0.0;
    int cells = 0;
};

struct EvalReport {
    std::vector<EvalCell> cells;

    std::vector<AggregateRow> aggregate() const {
        std::map<std::tuple<std::string, std::string, std::int64_t>, std::vector<double>> groups;
        for (const auto& c : cells)
            if (c.error.empty()) groups[{c.learner, c.dag, c.checkpoint}].push_back(c.mean_return);
        std::vector<AggregateRow> rows;
        for (const auto& [key, values] : groups) {
            AggregateRow row{std::get<0>(key), std::get<1>(key), std::get<2>(key)};
            row.cells = static_cast<int>(values.size());
            double sum = 0.0;
            row.best = values.front();
            for (double v : values) {
                sum += v;
                row.best = std::max(row.best, v);
            }
            row.mean = sum / values.size();
            double sq = 0.0;
            for (double v : values) sq += (v - row.mean) * (v - row.mean);
            row.stddev = values.size() > 1 ? std::sqrt(sq / (values.size() - 1)) : 0.0;
            rows.push_back(row);
        }
        return rows;
    }

    double seed_mean(const std::string& learner, std::int64_t checkpoint) const {
        for (const auto& row : aggregate())
            if (row.learner == learner && row.checkpoint == checkpoint) return row.mean;
        throw ContractError("EvalReport: no such aggregate cell");
    }
};

inline std::string results_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "dag,learner,checkpoint,seed,mean_return,episodes,truncations,error\n";
    for (const auto& c : report.cells)
        out << c.dag << ',' << c.learner << ',' << c.checkpoint << ',' << c.seed_index << ','
            << c.mean_return << ',' << c.episodes << ',' << c.truncations << ',' << c.error
            << "\n";
    return out.str();
}

inline std::string aggregate_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "dag,learner,checkpoint,mean_return,stddev,best,cells\n";
    for (const auto& row : report.aggregate())
        out << row.dag << ',' << row.learner << ',' << row.checkpoint << ',' << row.mean << ','
            << row.stddev << ',' << row.best << ',' << row.cells << "\n";
    return out.str();
}

inline TaskDag resolve_dag(const std::string& id, const ActionSpace& actions) {
    auto builtins = taxi::builtin_dags();
    auto it = builtins.find(id);
    if (it != builtins.end()) return it->second;
    if (id.ends_with(".json"))
        return io::dag_from_json(nlohmann::json::parse(io::read_all(id)), actions);
    throw ContractError("unknown dag id: " + id);
}

/// Per seed: collect one dataset at the largest checkpoint, train every
/// learner from scratch on each prefix, evaluate greedily. Failed cells are
/// recorded and the run continues.
inline EvalReport run_experiment(const ExperimentSpec& spec,
                                 const std::function<void(const std::string&)>& log = {}) {
    spec.validate();
    taxi::TaxiEnv env(spec.env);
    Domain domain = taxi::make_domain(spec.env);
    FeatureEncoder encoder = taxi::make_encoder(domain.states);

    EvalReport report;
    for (int seed_idx = 0; seed_idx < spec.repeats; ++seed_idx) {
        CollectionSpec cspec{spec.checkpoints.back(), spec.env.episode_cap,
                             derive_seed(spec.seed, 0xc011ecu, seed_idx)};
        Dataset full = collect(env, cspec);
        for (std::int64_t checkpoint : spec.checkpoints) {
            Dataset data = full.prefix(checkpoint);
            for (const auto& setup : spec.learners) {
                EvalCell cell{setup.name, setup.dag, checkpoint, seed_idx};
                try {
                    TaskDag dag = resolve_dag(setup.dag, domain.actions);
                    std::uint64_t eval_seed = derive_seed(spec.seed, 0xe7a1u, seed_idx);
                    EvaluationResult eval;
                    if (setup.fitted) {
                        FittedLearnerConfig fcfg = spec.fitted;
                        fcfg.seed = derive_seed(spec.seed, 0xf17u, seed_idx, checkpoint);
                        auto hq = fitted_hqi(dag, data, domain,
                                             RandomForestRegressor::factory(spec.forest),
                                             encoder, fcfg);
                        eval = evaluate(FittedPolicy(hq), dag, domain, env, spec.eval_episodes,
                                        spec.env.gamma, eval_seed, spec.eval_max_steps);
                    } else {
                        auto hq = hqi(dag, data, domain, spec.learner);
                        eval = evaluate(TabularPolicy(hq), dag, domain, env, spec.eval_episodes,
                                        spec.env.gamma, eval_seed, spec.eval_max_steps);
                    }
                    cell.mean_return = eval.mean_return;
                    cell.episodes = eval.episodes;
                    cell.truncations = eval.truncations;
                } catch (const std::exception& ex) {
                    cell.error = ex.what();
                }
                if (log) {
                    std::ostringstream msg;
                    msg << "seed " << seed_idx << " checkpoint " << checkpoint << " "
                        << setup.name;
                    if (cell.error.empty())
                        msg << " mean_return " << cell.mean_return;
                    else
                        msg << " FAILED: " << cell.error;
                    log(msg.str());
                }
                report.cells.push_back(std::move(cell));
            }
        }
    }
    return report;
}

namespace io {

inline nlohmann::json experiment_spec_to_json(const ExperimentSpec& spec) {
    nlohmann::json learners = nlohmann::json::array();
    for (const auto& l : spec.learners)
        learners.push_back({{"name", l.name}, {"dag", l.dag}, {"fitted", l.fitted}});
    return {{"format", "hrl-experiment-v1"},
            {"env", hrl::io::taxi_config_to_json(spec.env)},
            {"learners", learners},
            {"checkpoints", spec.checkpoints},
            {"repeats", spec.repeats},
            {"eval_episodes", spec.eval_episodes},
            {"eval_max_steps", spec.eval_max_steps},
            {"seed", spec.seed},
            {"learner", hrl::io::learner_config_to_json(spec.learner)},
            {"fitted", hrl::io::fitted_config_to_json(spec.fitted)},
            {"forest", hrl::io::forest_config_to_json(spec.forest)}};
}

inline ExperimentSpec experiment_spec_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "hrl-experiment-v1")
        throw IoError("experiment spec: bad format tag");
    ExperimentSpec spec = benchmark_experiment_spec();
    if (j.contains("env")) spec.env = hrl::io::taxi_config_from_json(j.at("env"));
    if (j.contains("learners")) {
        spec.learners.clear();
        for (const auto& lj : j.at("learners"))
            spec.learners.push_back({lj.at("name").get<std::string>(),
                                     lj.at("dag").get<std::string>(),
                                     lj.value("fitted", false)});
    }
    if (j.contains("checkpoints"))
        spec.checkpoints = j.at("checkpoints").get<std::vector<std::int64_t>>();
    spec.repeats = j.value("repeats", spec.repeats);
    spec.eval_episodes = j.value("eval_episodes", spec.eval_episodes);
    spec.eval_max_steps = j.value("eval_max_steps", spec.eval_max_steps);
    spec.seed = j.value("seed", spec.seed);
    if (j.contains("learner")) spec.learner = hrl::io::learner_config_from_json(j.at("learner"));
    if (j.contains("fitted")) spec.fitted = hrl::io::fitted_config_from_json(j.at("fitted"));
    if (j.contains("forest")) spec.forest = hrl::io::forest_config_from_json(j.at("forest"));
    spec.validate();
    return spec;
}

}  // namespace io
}  // namespace hrl
