#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <sys/wait.h>

#include "hrl/experiment.hpp"

using namespace hrl;
namespace fs = std::filesystem;

namespace {

const char* kCli = HRL_CLI_PATH;

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

/// Runs the CLI in `dir` with output captured to files.
RunResult run_cli(const fs::path& dir, const std::string& args) {
    fs::create_directories(dir);
    auto out_path = dir / "stdout.txt";
    auto err_path = dir / "stderr.txt";
    std::string cmd = "cd " + dir.string() + " && " + std::string(kCli) + " " + args + " > " +
                      out_path.string() + " 2> " + err_path.string();
    int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = io::read_all(out_path.string());
    r.err = io::read_all(err_path.string());
    return r;
}

fs::path work_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("hrl_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("collect writes a loadable dataset plus a manifest, reproducibly") {
    auto dir = work_dir("collect");
    auto r = run_cli(dir, "collect --n 300 --seed 5 --out data_a.txt");
    INFO(r.err);
    CHECK(r.exit_code == 0);
    auto data = io::load_dataset((dir / "data_a.txt").string());
    CHECK(data.items.size() == 300);
    CHECK(fs::exists(dir / "data_a.txt.manifest.json"));
    auto manifest = nlohmann::json::parse(io::read_all((dir / "data_a.txt.manifest.json").string()));
    CHECK(manifest.at("command") == "collect");
    CHECK(manifest.at("seed") == 5);

    // Same seed, same bytes; different seed, different data.
    CHECK(run_cli(dir, "collect --n 300 --seed 5 --out data_b.txt").exit_code == 0);
    CHECK(run_cli(dir, "collect --n 300 --seed 6 --out data_c.txt").exit_code == 0);
    CHECK(io::read_all((dir / "data_a.txt").string()) ==
          io::read_all((dir / "data_b.txt").string()));
    CHECK(io::read_all((dir / "data_a.txt").string()) !=
          io::read_all((dir / "data_c.txt").string()));
}

TEST_CASE("collect-train-evaluate pipeline produces a sane greedy return") {
    auto dir = work_dir("pipeline");
    REQUIRE(run_cli(dir, "collect --n 20000 --seed 1 --out data.txt").exit_code == 0);
    auto train = run_cli(dir, "train --data data.txt --dag dag1 --out policy.json");
    INFO(train.err);
    REQUIRE(train.exit_code == 0);
    CHECK(fs::exists(dir / "policy.json"));
    CHECK(fs::exists(dir / "policy.json.manifest.json"));

    auto eval = run_cli(dir, "evaluate --policy policy.json --dag dag1 --episodes 40 --seed 2");
    INFO(eval.err);
    REQUIRE(eval.exit_code == 0);
    CHECK(eval.out.find("mean_discounted_return ") != std::string::npos);
    double mean = std::stod(eval.out.substr(eval.out.find("mean_discounted_return ") + 23));
    // 20k samples train a competent policy; random walks score far below -5.
    CHECK(mean > -5.0);
    CHECK(mean < 20.0);

    // Loading the policy against the wrong hierarchy must fail loudly.
    auto wrong = run_cli(dir, "evaluate --policy policy.json --dag dag2 --episodes 5");
    CHECK(wrong.exit_code == 2);
    CHECK(wrong.err.find("mismatch") != std::string::npos);
}

TEST_CASE("validate-dag accepts builtins and reports violations for bad configs") {
    auto dir = work_dir("validate");
    auto ok = run_cli(dir, "validate-dag --dag dag1");
    CHECK(ok.exit_code == 0);
    CHECK(ok.out.find("valid") != std::string::npos);
    CHECK(ok.out.find("training order:") != std::string::npos);

    nlohmann::json bad{{"format", "hrl-dag-v1"},
                       {"root", "root"},
                       {"subtasks",
                        {{{"name", "root"},
                          {"children", {"north"}},
                          {"termination", "no_such_predicate"}}}}};
    std::ofstream(dir / "bad_dag.json") << bad.dump();
    auto res = run_cli(dir, "validate-dag --dag " + (dir / "bad_dag.json").string());
    CHECK(res.exit_code == 1);
    CHECK(res.err.find("unresolvable predicate") != std::string::npos);
}

TEST_CASE("oracle reports the DP residual and a believable mean return") {
    auto dir = work_dir("oracle");
    auto r = run_cli(dir, "oracle --tol 1e-8 --episodes 50 --seed 3");
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("bellman_residual ") != std::string::npos);
    double residual = std::stod(r.out.substr(r.out.find("bellman_residual ") + 17));
    CHECK(residual <= 1e-8);
    double mean = std::stod(r.out.substr(r.out.find("mean_discounted_return ") + 23));
    CHECK(mean > 0.0);
    CHECK(mean < 5.0);
}

TEST_CASE("missing inputs exit with the io status code") {
    auto dir = work_dir("errors");
    CHECK(run_cli(dir, "train --data nope.txt --out p.json").exit_code == 2);
    CHECK(run_cli(dir, "evaluate --policy nope.json").exit_code == 2);
    // Usage errors from the argument parser are not io errors.
    CHECK(run_cli(dir, "no-such-command").exit_code != 0);
    CHECK(run_cli(dir, "collect --out x.txt").exit_code != 0);  // --n is required
}

TEST_CASE("experiment specs round-trip and reject malformed content") {
    auto spec = benchmark_experiment_spec();
    spec.checkpoints = {100, 200};
    spec.repeats = 2;
    spec.seed = 9;
    auto j = io::experiment_spec_to_json(spec);
    auto back = io::experiment_spec_from_json(j);
    CHECK(back.checkpoints == spec.checkpoints);
    CHECK(back.repeats == 2);
    CHECK(back.seed == 9);
    REQUIRE(back.learners.size() == 3);
    CHECK(back.learners[1].dag == "dag1_no_sa");
    CHECK(back.learner.q_upper == spec.learner.q_upper);

    j["checkpoints"] = {200, 100};  // must ascend
    CHECK_THROWS_AS((void)io::experiment_spec_from_json(j), ContractError);
    j = io::experiment_spec_to_json(spec);
    j["format"] = "csv";
    CHECK_THROWS_AS((void)io::experiment_spec_from_json(j), IoError);
}

TEST_CASE("experiment runs record failures per cell and keep going") {
    ExperimentSpec spec;
    spec.learners = {{"good", "flat", false}, {"broken", "no_such_dag", false}};
    spec.checkpoints = {400, 800};
    spec.repeats = 2;
    spec.eval_episodes = 5;
    spec.eval_max_steps = 100;
    spec.learner.max_iter = 60;
    spec.learner.convergence_tol = 1e-3;
    auto report = run_experiment(spec);
    REQUIRE(report.cells.size() == 8);  // 2 learners x 2 checkpoints x 2 seeds
    int failed = 0;
    for (const auto& c : report.cells) {
        if (!c.error.empty()) {
            ++failed;
            CHECK(c.learner == "broken");
        }
    }
    CHECK(failed == 4);
    auto agg = report.aggregate();
    CHECK(agg.size() == 2);  // only the good learner aggregates
    for (const auto& row : agg) CHECK(row.cells == 2);
    CHECK_NOTHROW((void)report.seed_mean("good", 400));
    CHECK_THROWS_AS((void)report.seed_mean("broken", 400), ContractError);
    // The CSVs carry one line per cell / aggregate row plus headers.
    auto lines = [](const std::string& s) { return std::count(s.begin(), s.end(), '\n'); };
    CHECK(lines(results_csv(report)) == 9);
    CHECK(lines(aggregate_csv(report)) == 3);
}

TEST_CASE("the experiment subcommand writes result and aggregate tables") {
    auto dir = work_dir("experiment");
    ExperimentSpec spec;
    spec.learners = {{"fqi", "flat", false}};
    spec.checkpoints = {500};
    spec.repeats = 1;
    spec.eval_episodes = 5;
    spec.eval_max_steps = 100;
    spec.learner.max_iter = 80;
    spec.learner.convergence_tol = 1e-3;
    std::ofstream(dir / "spec.json") << io::experiment_spec_to_json(spec).dump();
    auto r = run_cli(dir, "experiment --spec spec.json --out-dir results");
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    CHECK(io::read_all((dir / "results/results.csv").string())
              .starts_with("dag,learner,checkpoint,seed"));
    CHECK(io::read_all((dir / "results/aggregate.csv").string())
              .starts_with("dag,learner,checkpoint,mean_return"));
    CHECK(fs::exists(dir / "results/experiment.manifest.json"));
}
