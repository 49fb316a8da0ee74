// Microbenchmarks for the hot solver paths: coordinate descent, the SVM dual,
// simplex projection, assignment search, and the implicit outer gradient.
#include <srep/assignment.hpp>
#include <srep/bilevel.hpp>
#include <srep/linalg.hpp>
#include <srep/regression.hpp>
#include <srep/rng.hpp>
#include <srep/svm.hpp>
#include <srep/taskgen.hpp>

#include <benchmark/benchmark.h>

namespace {

using srep::Index;
using srep::Matrix;
using srep::RngStream;
using srep::Vector;

Matrix random_matrix(Index rows, Index cols, RngStream& rng) {
    Matrix out(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) out(i, j) = rng.normal();
    return out;
}

srep::RegressionProblem regression_instance(Index n, Index m, Index k, std::uint64_t seed) {
    RngStream rng(seed);
    srep::RegressionProblem problem;
    problem.F = random_matrix(n, m, rng);
    Matrix W = Matrix::Zero(k, m);
    for (Index j = 0; j < std::min<Index>(m, 8); ++j)
        for (Index l = 0; l < k; ++l) W(l, j) = rng.normal();
    problem.Y = problem.F * W.transpose() + 0.1 * random_matrix(n, k, rng);
    const double anchor =
        srep::lambda_max(problem, k == 1 ? srep::PenaltyKind::lasso : srep::PenaltyKind::group_lasso);
    problem.lambda = 0.1 * anchor;
    return problem;
}

void bm_lasso_cd(benchmark::State& state) {
    const auto problem = regression_instance(state.range(0), state.range(1), 1, 11);
    for (auto _ : state) {
        auto fit = srep::lasso_cd(problem);
        benchmark::DoNotOptimize(fit.weights.W);
    }
}
BENCHMARK(bm_lasso_cd)->Args({500, 50})->Args({2000, 200})->Unit(benchmark::kMicrosecond);

void bm_group_lasso_cd(benchmark::State& state) {
    const auto problem = regression_instance(state.range(0), state.range(1), 5, 13);
    for (auto _ : state) {
        auto fit = srep::group_lasso_cd(problem);
        benchmark::DoNotOptimize(fit.weights.W);
    }
}
BENCHMARK(bm_group_lasso_cd)->Args({500, 50})->Args({2000, 200})->Unit(benchmark::kMicrosecond);

void bm_svm_dual(benchmark::State& state) {
    RngStream rng(17);
    const Index n = state.range(0);
    const Index m = 20;
    const Index k = 5;
    srep::SvmProblem problem;
    problem.F = random_matrix(n, m, rng);
    problem.Y = Matrix::Zero(n, k);
    for (Index i = 0; i < n; ++i) problem.Y(i, rng.uniform_int(k)) = 1.0;
    problem.lambda1 = 0.1;
    problem.lambda2 = 1.0;
    for (auto _ : state) {
        auto fit = srep::solve_dual(problem);
        benchmark::DoNotOptimize(fit.gap);
    }
}
BENCHMARK(bm_svm_dual)->Arg(50)->Arg(200)->Unit(benchmark::kMicrosecond);

void bm_project_simplex(benchmark::State& state) {
    RngStream rng(19);
    Vector v(state.range(0));
    for (Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
    for (auto _ : state) {
        Vector p = srep::project_simplex(v);
        benchmark::DoNotOptimize(p);
    }
}
BENCHMARK(bm_project_simplex)->Arg(5)->Arg(50)->Unit(benchmark::kNanosecond);

void bm_best_assignment(benchmark::State& state) {
    RngStream rng(23);
    const Matrix scores = random_matrix(state.range(0), state.range(0), rng).cwiseAbs();
    for (auto _ : state) {
        auto result = srep::best_assignment(scores);
        benchmark::DoNotOptimize(result.value);
    }
}
BENCHMARK(bm_best_assignment)->Arg(8)->Arg(32)->Unit(benchmark::kMicrosecond);

void bm_hypergradient(benchmark::State& state) {
    const Index m = 20;
    RngStream rng(29);
    const auto latents = srep::LatentSpec::ar(m, 0.6);
    const auto support = srep::SupportSpec::fixed_size(3);
    const srep::TaskDataset task = srep::make_task(latents, support, 200, 0.1, rng);
    srep::BilevelConfig cfg;
    cfg.m = m;
    cfg.d = m;
    cfg.lambda = 0.05;
    srep::LinearRepresentation rep{Matrix::Identity(m, m) + 0.01 * random_matrix(m, m, rng)};
    for (auto _ : state) {
        auto grad = srep::hypergradient(rep, task, cfg.lambda, srep::InnerKind::lasso, cfg);
        benchmark::DoNotOptimize(grad.grad);
    }
}
BENCHMARK(bm_hypergradient)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
