#pragma once

#include <srep/bilevel.hpp>
#include <srep/common.hpp>
#include <srep/taskgen.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace srep {

// One measurement. Grid coordinates that do not apply stay at their
// defaults; lambda_rel is the penalty relative to the experiment's lambda_max
// anchor and must land in [0, 2].
struct ResultRow {
    std::string experiment;
    std::string arm;
    std::uint64_t seed = 0;
    double n = 0.0;
    double lambda_rel = 0.0;
    std::string metric;
    double value = 0.0;
};

// Experiment selector plus size overrides; zero or empty means default.
struct ExperimentConfig {
    std::string id;  // E1_generalization, E2_bilevel, E3_violation, E4_svm_fewshot, unit_oracles
    std::uint64_t seed = 7;
    Index jobs = 1;

    Index seeds = 0;            // replicate count
    Index lambda_points = 0;    // penalty grid size
    std::vector<double> lambda_grid;  // relative grid override, strictly positive ascending
    std::string out_dir;        // optional output directory carried in config files
    std::vector<Index> n_grid;  // E1 sample size grid
    std::vector<double> support_fractions;  // E1 active fraction grid
    std::vector<double> rho_grid;           // E2 correlation grid
    Index outer_steps = 0;      // E2 / E3 trainer steps
    Index tasks_per_step = 0;   // E2 / E3 tasks per trainer step
    Index ways = 0;             // E4 classes per task
    Index shots = 0;            // E4 train samples per class

    void validate() const;
    [[nodiscard]] std::string canonical_json() const;
};

[[nodiscard]] ExperimentConfig parse_experiment_config(const std::string& json_text);

// Canonical experiment ids accept short aliases E1..E4.
[[nodiscard]] std::string resolve_experiment_id(const std::string& id);

// Sparse-vs-dense single task generalization sweep on long-memory Gaussian
// latents: arms {disentangled, entangled} x {lasso, ridge}, penalties chosen
// by 5-fold cross validation, scored by test R^2.
[[nodiscard]] std::vector<ResultRow> run_e1(const ExperimentConfig& cfg);

// Bilevel representation learning on the correlated factor grid: inner-lasso
// vs inner-ridge over a shared penalty grid, scored by MCC and R against the
// generating factors.
[[nodiscard]] std::vector<ResultRow> run_e2(const ExperimentConfig& cfg);

// Assumption-violation sweeps for the bilevel learner: block supports of
// width 2 / 3 / 6 and dense Laplace task weights, inner-lasso only.
[[nodiscard]] std::vector<ResultRow> run_e3(const ExperimentConfig& cfg);

// Few-shot multiclass SVM on synthetic tasks with sparse informative
// features: accuracy, sparsity, and feature usage along the lambda1 grid.
[[nodiscard]] std::vector<ResultRow> run_e4(const ExperimentConfig& cfg);

// results.csv (RFC 4180, sorted rows) and summary.json (per-group mean and
// standard error, config echo, content hash) under out_dir.
void emit(const std::vector<ResultRow>& rows, const ExperimentConfig& cfg,
          const std::string& out_dir);

// ---- command line front ends -------------------------------------------

struct GenConfig {
    LatentSpec latent = LatentSpec::ar(8, 0.9);
    SupportSpec support = SupportSpec::bernoulli(0.5);
    Index tasks = 8;
    Index n = 50;
    double noise_sigma = 0.1;
    bool entangle_orthogonal = false;
    Index classes = 0;     // > 0 switches to classification tasks
    Index per_class = 0;   // classification samples per class
    double mean_scale = 1.0;
    Index informative = 0;  // classification: informative feature count (0 = all)
};

[[nodiscard]] GenConfig parse_gen_config(const std::string& json_text);
void run_gen(const GenConfig& cfg, std::uint64_t seed, const std::string& out_dir);

struct SolveConfig {
    std::string bundle_dir;
    Index task_index = 0;
    std::string solver = "lasso";  // lasso | group_lasso | ridge | svm_dual
    double lambda = 0.0;
    double lambda_rel = -1.0;  // when >= 0, lambda = lambda_rel * lambda_max
    double l2_lambda = 0.0;
    double lambda1 = 0.0;  // svm
    double lambda2 = 1.0;  // svm
    double tol = 1e-8;
    Index max_sweeps = 100000;
};

[[nodiscard]] SolveConfig parse_solve_config(const std::string& json_text);
void run_solve(const SolveConfig& cfg, const std::string& out_dir);

struct TrainConfig {
    BilevelConfig bilevel;
    LatentSpec latent = LatentSpec::shapes_grid(0.0, 1.0);
    SupportSpec support = SupportSpec::bernoulli(0.5);
    double noise_sigma = 0.1;
    Index n_per_task = 50;
    double lambda_rel = 0.1;  // relative to the pilot lambda_max anchor
    bool entangle_orthogonal = true;
    Index eval_samples = 8192;
    Index pilot_tasks = 32;
};

[[nodiscard]] TrainConfig parse_train_config(const std::string& json_text);
void run_train(const TrainConfig& cfg, std::uint64_t seed, const std::string& out_dir);

}  // namespace srep
