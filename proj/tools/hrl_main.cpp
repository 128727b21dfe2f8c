// Command-line front end: data collection, training, evaluation, experiment
// runs, DAG validation, and the exact DP baseline.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hrl/hrl.hpp"

namespace {

using nlohmann::json;

hrl::taxi::TaxiConfig load_env(const std::string& path) {
    if (path.empty()) return {};
    return hrl::io::taxi_config_from_json(json::parse(hrl::io::read_all(path)));
}

void write_manifest(const std::string& path, const std::string& command,
                    const json& effective_config, std::uint64_t seed) {
    hrl::io::write_atomic(path,
                          hrl::io::make_manifest(command, effective_config, seed).dump(2) + "\n");
}

std::string manifest_path(const std::string& out, const std::string& command) {
    if (!out.empty()) return out + ".manifest.json";
    return command + ".manifest.json";
}

int run(int argc, char** argv) {
    CLI::App app{"Batch hierarchical Q-value iteration toolkit"};
    app.require_subcommand(1);
    app.set_config("--config");

    std::string env_path, out, data_path, dag_id = "dag1", learner_path, forest_path,
                policy_path, spec_path, out_dir = ".";
    std::uint64_t seed = 0;
    std::int64_t n_samples = 60000;
    int episodes = 100, max_steps = 1000;
    double tol = 1e-8;
    bool fitted = false;

    auto* collect_cmd = app.add_subcommand("collect", "Collect uniform-random transitions");
    collect_cmd->add_option("--env", env_path, "taxi env config (json)");
    collect_cmd->add_option("--n", n_samples, "number of transitions")->required();
    collect_cmd->add_option("--seed", seed, "collection seed");
    collect_cmd->add_option("--out", out, "output dataset path")->required();

    auto* train_cmd = app.add_subcommand("train", "Train a hierarchical policy from a dataset");
    train_cmd->add_option("--env", env_path, "taxi env config (json)");
    train_cmd->add_option("--data", data_path, "dataset path")->required();
    train_cmd->add_option("--dag", dag_id, "builtin dag id or dag config path");
    train_cmd->add_option("--learner", learner_path, "learner config (json)");
    train_cmd->add_flag("--fitted", fitted, "use the tree-ensemble fitted learner");
    train_cmd->add_option("--forest", forest_path, "tree-ensemble config (json)");
    train_cmd->add_option("--seed", seed, "training seed (fitted mode)");
    train_cmd->add_option("--out", out, "output policy path")->required();

    auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a stored policy greedily");
    eval_cmd->add_option("--env", env_path, "taxi env config (json)");
    eval_cmd->add_option("--policy", policy_path, "policy path")->required();
    eval_cmd->add_option("--dag", dag_id, "builtin dag id or dag config path");
    eval_cmd->add_option("--episodes", episodes, "number of evaluation episodes");
    eval_cmd->add_option("--seed", seed, "evaluation seed");
    eval_cmd->add_option("--max-steps", max_steps, "per-episode step cap");

    auto* exp_cmd = app.add_subcommand("experiment", "Run a full experiment spec");
    exp_cmd->add_option("--spec", spec_path, "experiment spec (json)");
    exp_cmd->add_option("--out-dir", out_dir, "directory for result CSVs");

    auto* validate_cmd = app.add_subcommand("validate-dag", "Validate a DAG config");
    validate_cmd->add_option("--env", env_path, "taxi env config (json)");
    validate_cmd->add_option("--dag", dag_id, "builtin dag id or dag config path")->required();

    auto* oracle_cmd = app.add_subcommand("oracle", "Exact DP solution of the true model");
    oracle_cmd->add_option("--env", env_path, "taxi env config (json)");
    oracle_cmd->add_option("--tol", tol, "Bellman residual tolerance");
    oracle_cmd->add_option("--episodes", episodes, "greedy evaluation episodes");
    oracle_cmd->add_option("--seed", seed, "evaluation seed");
    oracle_cmd->add_option("--out", out, "optional output policy path");

    CLI11_PARSE(app, argc, argv);

    auto cfg = load_env(env_path);
    hrl::taxi::TaxiEnv env(cfg);
    hrl::Domain domain = hrl::taxi::make_domain(cfg);

    if (collect_cmd->parsed()) {
        hrl::CollectionSpec spec{n_samples, cfg.episode_cap, seed};
        auto data = hrl::collect(env, spec);
        hrl::io::save_dataset(out, data);
        json effective{{"env", hrl::io::taxi_config_to_json(cfg)},
                       {"n", n_samples},
                       {"seed", seed},
                       {"out", out}};
        write_manifest(manifest_path(out, "collect"), "collect", effective, seed);
        std::cout << "wrote " << data.size() << " experiences to " << out << "\n";
        return 0;
    }

    if (train_cmd->parsed()) {
        auto data = hrl::io::load_dataset(data_path, &domain.states);
        auto dag = hrl::resolve_dag(dag_id, domain.actions);
        json effective{{"env", hrl::io::taxi_config_to_json(cfg)},
                       {"data", data_path},
                       {"dag", dag_id},
                       {"fitted", fitted},
                       {"seed", seed},
                       {"out", out}};
        if (fitted) {
            hrl::FittedLearnerConfig fcfg;
            fcfg.gamma = cfg.gamma;
            if (!learner_path.empty())
                fcfg = hrl::io::fitted_config_from_json(json::parse(hrl::io::read_all(learner_path)));
            fcfg.seed = seed;
            hrl::TreeEnsembleConfig forest;
            if (!forest_path.empty())
                forest = hrl::io::forest_config_from_json(json::parse(hrl::io::read_all(forest_path)));
            auto encoder = hrl::taxi::make_encoder(domain.states);
            auto hq = hrl::fitted_hqi(dag, data, domain,
                                      hrl::RandomForestRegressor::factory(forest), encoder, fcfg);
            hrl::io::write_atomic(out, hrl::io::fitted_to_json(hq, dag, domain.actions).dump() + "\n");
            effective["learner"] = hrl::io::fitted_config_to_json(fcfg);
            effective["forest"] = hrl::io::forest_config_to_json(forest);
        } else {
            hrl::LearnerConfig lcfg;
            lcfg.gamma = cfg.gamma;
            lcfg.q_lower = cfg.illegal_reward / (1.0 - cfg.gamma);
            lcfg.q_upper = cfg.success_reward / (1.0 - cfg.gamma);
            if (!learner_path.empty())
                lcfg = hrl::io::learner_config_from_json(json::parse(hrl::io::read_all(learner_path)));
            auto hq = hrl::hqi(dag, data, domain, lcfg);
            hrl::io::write_atomic(out, hrl::io::hq_to_json(hq, dag, domain.actions).dump() + "\n");
            effective["learner"] = hrl::io::learner_config_to_json(lcfg);
        }
        write_manifest(manifest_path(out, "train"), "train", effective, seed);
        std::cout << "wrote policy to " << out << "\n";
        return 0;
    }

    if (eval_cmd->parsed()) {
        auto dag = hrl::resolve_dag(dag_id, domain.actions);
        auto pj = json::parse(hrl::io::read_all(policy_path));
        hrl::EvaluationResult result;
        if (pj.value("kind", "") == "fitted") {
            auto encoder = hrl::taxi::make_encoder(domain.states);
            auto hq = hrl::io::fitted_from_json(pj, dag, domain, encoder);
            result = hrl::evaluate(hrl::FittedPolicy(hq), dag, domain, env, episodes, cfg.gamma,
                                   seed, max_steps);
        } else {
            auto hq = hrl::io::hq_from_json(pj, dag, domain);
            result = hrl::evaluate(hrl::TabularPolicy(hq), dag, domain, env, episodes, cfg.gamma,
                                   seed, max_steps);
        }
        json effective{{"env", hrl::io::taxi_config_to_json(cfg)},
                       {"policy", policy_path},
                       {"dag", dag_id},
                       {"episodes", episodes},
                       {"seed", seed}};
        write_manifest(manifest_path("", "evaluate"), "evaluate", effective, seed);
        std::cout << "mean_discounted_return " << result.mean_return << "\n"
                  << "episodes " << result.episodes << "\n"
                  << "truncations " << result.truncations << "\n";
        return 0;
    }

    if (exp_cmd->parsed()) {
        hrl::ExperimentSpec spec = spec_path.empty()
                                       ? hrl::benchmark_experiment_spec()
                                       : hrl::io::experiment_spec_from_json(
                                             json::parse(hrl::io::read_all(spec_path)));
        auto report = hrl::run_experiment(spec, [](const std::string& msg) {
            std::cout << msg << "\n" << std::flush;
        });
        std::filesystem::create_directories(out_dir);
        hrl::io::write_atomic(out_dir + "/results.csv", hrl::results_csv(report));
        hrl::io::write_atomic(out_dir + "/aggregate.csv", hrl::aggregate_csv(report));
        write_manifest(out_dir + "/experiment.manifest.json", "experiment",
                       hrl::io::experiment_spec_to_json(spec), spec.seed);
        std::cout << "wrote " << out_dir << "/results.csv and aggregate.csv\n";
        return 0;
    }

    if (validate_cmd->parsed()) {
        auto dag = hrl::resolve_dag(dag_id, domain.actions);
        auto report = dag.validate(domain.states, domain.actions, domain.predicates);
        if (!report.ok()) {
            for (const auto& v : report.violations) std::cerr << "violation: " << v << "\n";
            return 1;
        }
        std::cout << "valid\ntraining order:";
        for (int id : dag.training_order()) std::cout << ' ' << dag.at(id).name;
        std::cout << "\n";
        json effective{{"env", hrl::io::taxi_config_to_json(cfg)}, {"dag", dag_id}};
        write_manifest(manifest_path("", "validate-dag"), "validate-dag", effective, 0);
        return 0;
    }

    if (oracle_cmd->parsed()) {
        auto model = env.true_model();
        auto q = hrl::value_iteration(model, tol);
        hrl::HierarchicalQ hq;
        hrl::SubtaskQ flat;
        flat.abstraction = hrl::Abstraction(domain.states, {"dest", "pass", "x", "y"});
        flat.table = q;
        hq.tables[0] = std::move(flat);
        auto dag = hrl::taxi::flat_dag();
        auto result = hrl::evaluate(hrl::TabularPolicy(hq), dag, domain, env, episodes,
                                    cfg.gamma, seed, max_steps);
        if (!out.empty())
            hrl::io::write_atomic(out, hrl::io::hq_to_json(hq, dag, domain.actions).dump() + "\n");
        json effective{{"env", hrl::io::taxi_config_to_json(cfg)},
                       {"tol", tol},
                       {"episodes", episodes},
                       {"seed", seed}};
        write_manifest(manifest_path(out, "oracle"), "oracle", effective, seed);
        std::cout << "bellman_residual " << q.residual << "\n"
                  << "mean_discounted_return " << result.mean_return << "\n"
                  << "episodes " << result.episodes << "\n";
        return 0;
    }

    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const hrl::IoError& ex) {
        std::cerr << "io error: " << ex.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& ex) {
        std::cerr << "io error: " << ex.what() << "\n";
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
}
