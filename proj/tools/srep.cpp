// Command line front end: task generation, single solves, bilevel training,
// representation scoring, experiment sweeps, and the acceptance self test.
#include <srep/experiments.hpp>
#include <srep/io.hpp>
#include <srep/metrics.hpp>
#include <srep/taskgen.hpp>

#include "checks/acceptance.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

namespace {

using srep::Index;
using srep::Matrix;

std::string read_config(const std::string& path) { return srep::read_text_file(path); }

struct ExpArgs {
    std::string id;
    std::string config_path;
    std::uint64_t seed = 7;
    Index jobs = 1;
    std::string out;
    bool seed_set = false;
    bool jobs_set = false;
};

int run_exp(const ExpArgs& args) {
    srep::ExperimentConfig cfg;
    if (!args.config_path.empty()) {
        cfg = srep::parse_experiment_config(read_config(args.config_path));
        const std::string from_flag = srep::resolve_experiment_id(args.id);
        srep::require(cfg.id == from_flag,
                      "exp: config id " + cfg.id + " does not match requested " + from_flag);
    } else {
        cfg.id = srep::resolve_experiment_id(args.id);
    }
    if (args.seed_set) cfg.seed = args.seed;
    if (args.jobs_set) cfg.jobs = args.jobs;
    cfg.validate();

    std::string out = args.out;
    if (out.empty()) out = cfg.out_dir;
    if (out.empty()) out = "results/" + cfg.id;

    std::vector<srep::ResultRow> rows;
    if (cfg.id == "E1_generalization") {
        rows = srep::run_e1(cfg);
    } else if (cfg.id == "E2_bilevel") {
        rows = srep::run_e2(cfg);
    } else if (cfg.id == "E3_violation") {
        rows = srep::run_e3(cfg);
    } else if (cfg.id == "E4_svm_fewshot") {
        rows = srep::run_e4(cfg);
    } else {
        srep::checks::AcceptanceOptions options;
        options.seed = cfg.seed;
        options.jobs = cfg.jobs;
        options.on_result = [](const srep::checks::CriterionResult& res) {
            std::printf("%s %2d %-28s (%7.2fs) %s\n", res.pass ? "PASS" : "FAIL", res.id,
                        res.name.c_str(), res.seconds, res.detail.c_str());
            std::fflush(stdout);
        };
        rows = srep::checks::unit_oracle_rows(options);
    }
    srep::emit(rows, cfg, out);
    std::printf("%s: %zu rows -> %s/results.csv\n", cfg.id.c_str(), rows.size(), out.c_str());
    return 0;
}

int run_metrics(const std::string& theta_path, const std::string& bundle_dir,
                const std::string& out) {
    const Matrix Theta = srep::load_matrix_csv(theta_path);
    const srep::TaskBundle bundle = srep::load_bundle(bundle_dir);
    srep::require(!bundle.tasks.empty(), "metrics: bundle holds no tasks");

    Index total = 0;
    for (const srep::TaskDataset& task : bundle.tasks) {
        srep::require(task.d() == Theta.cols(),
                      "metrics: representation width does not match the bundle observations");
        srep::require(task.m() == bundle.tasks.front().m(),
                      "metrics: tasks disagree on the latent dimension");
        total += task.n();
    }
    Matrix Z_true(total, bundle.tasks.front().m());
    Matrix X(total, Theta.cols());
    Index at = 0;
    for (const srep::TaskDataset& task : bundle.tasks) {
        Z_true.middleRows(at, task.n()) = task.F_true;
        X.middleRows(at, task.n()) = task.X;
        at += task.n();
    }
    const Matrix learned = X * Theta.transpose();
    const srep::MetricsReport report = srep::evaluate_representation(Z_true, learned);

    nlohmann::json j;
    j["mcc"] = report.mcc;
    j["r"] = report.r;
    j["dci_disentanglement"] = report.dci_disentanglement;
    j["dci_completeness"] = report.dci_completeness;
    j["samples"] = total;
    j["tasks"] = bundle.tasks.size();
    std::printf("%s\n", j.dump(2).c_str());
    if (!out.empty()) {
        std::filesystem::create_directories(out);
        srep::write_text_file(out + "/metrics.json", j.dump(2) + "\n");
    }
    return 0;
}

int run_selftest(const std::string& only, std::uint64_t seed, Index jobs,
                 const std::string& scratch) {
    srep::checks::AcceptanceOptions options;
    options.seed = seed;
    options.jobs = jobs;
    options.filter = only;
    options.scratch_dir = scratch;
    options.on_result = [](const srep::checks::CriterionResult& res) {
        std::printf("%s %2d %-28s (%7.2fs) %s%s\n", res.pass ? "PASS" : "FAIL", res.id,
                    res.name.c_str(), res.seconds, res.detail.c_str(),
                    !res.pass && res.known_red ? " [documented limitation]" : "");
        std::fflush(stdout);
    };
    const auto results = srep::checks::run_acceptance(options);
    int failed = 0;
    for (const auto& res : results) failed += res.pass ? 0 : 1;
    // Unlike the test-suite runner, selftest reports every threshold miss in
    // its exit status, documented or not.
    std::printf("%zu criteria run, %d failed\n", results.size(), failed);
    return failed == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse multi-task representation toolkit"};
    app.require_subcommand(1);

    // gen ---------------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "Generate a synthetic task bundle");
    std::string gen_config, gen_out = "srep-out/gen";
    std::uint64_t gen_seed = 7;
    gen->add_option("--config", gen_config, "JSON generator config")->check(CLI::ExistingFile);
    gen->add_option("--seed", gen_seed, "Root random seed");
    gen->add_option("--out", gen_out, "Output bundle directory");

    // solve ---------------------------------------------------------------
    auto* solve = app.add_subcommand("solve", "Fit one task from a bundle");
    std::string solve_config, solve_out = "srep-out/solve", solve_bundle;
    Index solve_task = -1;
    solve->add_option("--config", solve_config, "JSON solver config")->check(CLI::ExistingFile);
    solve->add_option("--bundle", solve_bundle, "Bundle directory (overrides config)");
    solve->add_option("--task", solve_task, "Task index (overrides config)");
    solve->add_option("--out", solve_out, "Output directory");

    // train ---------------------------------------------------------------
    auto* train = app.add_subcommand("train", "Train a linear representation");
    std::string train_config, train_out = "srep-out/train";
    std::uint64_t train_seed = 7;
    train->add_option("--config", train_config, "JSON trainer config")->check(CLI::ExistingFile);
    train->add_option("--seed", train_seed, "Root random seed");
    train->add_option("--out", train_out, "Output directory");

    // metrics ---------------------------------------------------------------
    auto* metrics = app.add_subcommand("metrics", "Score a representation against a bundle");
    std::string metrics_theta, metrics_bundle, metrics_out;
    metrics->add_option("--theta", metrics_theta, "Representation matrix CSV")
        ->required()
        ->check(CLI::ExistingFile);
    metrics->add_option("--bundle", metrics_bundle, "Bundle directory")->required();
    metrics->add_option("--out", metrics_out, "Optional directory for metrics.json");

    // exp ---------------------------------------------------------------
    auto* exp = app.add_subcommand("exp", "Run an experiment sweep");
    ExpArgs exp_args;
    exp->add_option("id", exp_args.id, "Experiment id (E1..E4 or full name, unit_oracles)")
        ->required();
    exp->add_option("--config", exp_args.config_path, "JSON experiment config")
        ->check(CLI::ExistingFile);
    auto* exp_seed = exp->add_option("--seed", exp_args.seed, "Root random seed");
    auto* exp_jobs = exp->add_option("--jobs", exp_args.jobs, "Worker threads");
    exp->add_option("--out", exp_args.out, "Output directory");

    // selftest ---------------------------------------------------------------
    auto* selftest = app.add_subcommand("selftest", "Run the acceptance criteria");
    std::string st_only, st_scratch;
    std::uint64_t st_seed = 7;
    Index st_jobs = 1;
    selftest->add_option("--only", st_only, "Filter by criterion id or name substring");
    selftest->add_option("--seed", st_seed, "Root random seed");
    selftest->add_option("--jobs", st_jobs, "Worker threads");
    selftest->add_option("--scratch", st_scratch, "Scratch directory for experiment output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (gen->parsed()) {
            srep::GenConfig cfg;
            if (!gen_config.empty()) cfg = srep::parse_gen_config(read_config(gen_config));
            srep::run_gen(cfg, gen_seed, gen_out);
            std::printf("bundle -> %s\n", gen_out.c_str());
            return 0;
        }
        if (solve->parsed()) {
            srep::require(!solve_config.empty() || !solve_bundle.empty(),
                          "solve: provide --config or --bundle");
            srep::SolveConfig cfg;
            if (!solve_config.empty()) cfg = srep::parse_solve_config(read_config(solve_config));
            if (!solve_bundle.empty()) cfg.bundle_dir = solve_bundle;
            if (solve_task >= 0) cfg.task_index = solve_task;
            srep::run_solve(cfg, solve_out);
            std::printf("report -> %s/report.json\n", solve_out.c_str());
            return 0;
        }
        if (train->parsed()) {
            srep::TrainConfig cfg;
            if (!train_config.empty()) cfg = srep::parse_train_config(read_config(train_config));
            srep::run_train(cfg, train_seed, train_out);
            std::printf("trained representation -> %s\n", train_out.c_str());
            return 0;
        }
        if (metrics->parsed()) return run_metrics(metrics_theta, metrics_bundle, metrics_out);
        if (exp->parsed()) {
            exp_args.seed_set = exp_seed->count() > 0;
            exp_args.jobs_set = exp_jobs->count() > 0;
            return run_exp(exp_args);
        }
        if (selftest->parsed()) return run_selftest(st_only, st_seed, st_jobs, st_scratch);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
