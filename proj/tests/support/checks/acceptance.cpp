#include "checks/acceptance.hpp"

#include "checks/oracles.hpp"

#include <srep/bilevel.hpp>
#include <srep/identifiability.hpp>
#include <srep/io.hpp>
#include <srep/linalg.hpp>
#include <srep/metrics.hpp>
#include <srep/prox.hpp>
#include <srep/regression.hpp>
#include <srep/svm.hpp>
#include <srep/taskgen.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace srep::checks {

namespace {

// Subset-oracle recovery count at the default seed, measured once and pinned.
// -1 means not yet pinned (only the >= 9 bound is enforced).
constexpr int kPinnedSubsetRecovery = 10;

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", x);
    return buf;
}

struct Ctx {
    const AcceptanceOptions* opts = nullptr;
    std::vector<ResultRow> e1_rows;  // cached by the generalization criterion
    bool have_e1 = false;
};

void add(CriterionResult& res, const std::string& name, double value) {
    res.measured.emplace_back(name, value);
}

ExperimentConfig base_config(const Ctx& ctx, const std::string& id) {
    ExperimentConfig cfg;
    cfg.id = id;
    cfg.seed = ctx.opts->seed;
    cfg.jobs = ctx.opts->jobs;
    return cfg;
}

// Seeds report penalties as per-task averaged ratios, so their grids differ
// numerically; seeds are aligned by the rank of lambda_rel within each
// seed's own positive grid (assumption rows sit at the 0 sentinel).
struct RankMeans {
    std::vector<double> mean;
    std::vector<int> count;
};

RankMeans rank_means(const std::vector<ResultRow>& rows, const std::string& arm,
                     const std::string& metric) {
    std::map<std::uint64_t, std::vector<double>> grids;
    for (const ResultRow& r : rows) {
        if (r.arm == arm && r.lambda_rel > 0.0 && r.metric.rfind("assumption", 0) != 0) {
            grids[r.seed].push_back(r.lambda_rel);
        }
    }
    for (auto& [seed, grid] : grids) {
        std::sort(grid.begin(), grid.end());
        grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    }
    RankMeans out;
    for (const ResultRow& r : rows) {
        if (r.arm != arm || r.metric != metric || r.lambda_rel <= 0.0) continue;
        const auto& grid = grids[r.seed];
        const auto it = std::lower_bound(grid.begin(), grid.end(), r.lambda_rel);
        const auto rank = static_cast<std::size_t>(it - grid.begin());
        if (out.mean.size() <= rank) {
            out.mean.resize(rank + 1, 0.0);
            out.count.resize(rank + 1, 0);
        }
        out.mean[rank] += r.value;
        out.count[rank] += 1;
    }
    for (std::size_t i = 0; i < out.mean.size(); ++i) {
        if (out.count[i] > 0) out.mean[i] /= out.count[i];
    }
    return out;
}

int best_rank(const RankMeans& rm) {
    int best = -1;
    for (std::size_t i = 0; i < rm.mean.size(); ++i) {
        if (rm.count[i] > 0 && (best < 0 || rm.mean[i] > rm.mean[static_cast<std::size_t>(best)]))
            best = static_cast<int>(i);
    }
    return best;
}

double best_mean(const RankMeans& rm) {
    const int rank = best_rank(rm);
    require(rank >= 0, "acceptance: no rows for requested arm/metric");
    return rm.mean[static_cast<std::size_t>(rank)];
}

double mean_where(const std::vector<ResultRow>& rows, const std::string& arm, double n,
                  const std::string& metric) {
    double total = 0.0;
    int count = 0;
    for (const ResultRow& r : rows) {
        if (r.arm == arm && r.n == n && r.metric == metric) {
            total += r.value;
            ++count;
        }
    }
    require(count > 0, "acceptance: no rows for " + arm + " at n=" + num(n));
    return total / count;
}

// ---------------------------------------------------------------------------
// 1. Prediction invariance of the unregularized fit under invertible mixing.

void c_invariance(Ctx& ctx, CriterionResult& res) {
    const Index n = 200;
    const Index m = 20;
    const LatentSpec latent = LatentSpec::ar(m, 0.6);
    RngStream rng(mix64(ctx.opts->seed, 0xC1));

    double worst_mixed = 0.0;
    double worst_ill = 0.0;
    for (int i = 0; i < 100; ++i) {
        RngStream task_rng = rng.child(static_cast<std::uint64_t>(2 * i));
        const TaskDataset task =
            make_task(latent, SupportSpec::bernoulli(0.5), n, 0.2, task_rng);
        RngStream l_rng = rng.child(static_cast<std::uint64_t>(2 * i + 1));
        Matrix L(m, m);
        for (Index a = 0; a < m; ++a)
            for (Index b = 0; b < m; ++b) L(a, b) = l_rng.normal();
        const InvarianceReport rep = verify_mle_invariance(task, L);
        worst_mixed = std::max(worst_mixed, rep.max_pred_diff / rep.scale);
    }
    for (int i = 0; i < 100; ++i) {
        RngStream task_rng = rng.child(static_cast<std::uint64_t>(1000 + 2 * i));
        const TaskDataset task =
            make_task(latent, SupportSpec::bernoulli(0.5), n, 0.2, task_rng);
        RngStream l_rng = rng.child(static_cast<std::uint64_t>(1000 + 2 * i + 1));
        const Matrix U = sample_orthogonal(m, l_rng);
        const Matrix V = sample_orthogonal(m, l_rng);
        Vector s(m);
        for (Index a = 0; a < m; ++a)
            s(a) = std::pow(10.0, -6.0 * static_cast<double>(a) / static_cast<double>(m - 1));
        const Matrix L = U * s.asDiagonal() * V.transpose();
        const InvarianceReport rep = verify_mle_invariance(task, L);
        worst_ill = std::max(worst_ill, rep.max_pred_diff / rep.scale);
    }
    add(res, "mixed_rel_discrepancy", worst_mixed);
    add(res, "illcond_rel_discrepancy", worst_ill);
    res.pass = worst_mixed <= 1e-8 && worst_ill <= 1e-6;
    res.detail = "mixed " + num(worst_mixed) + " (tol 1e-8), cond-1e6 " + num(worst_ill) +
                 " (tol 1e-6) over 100 pairs each";
}

// ---------------------------------------------------------------------------
// 2. Large-sample ridge fits recover the inverse-mixed weights.

void c_population(Ctx& ctx, CriterionResult& res) {
    const Index m = 10;
    const Index n = 100000;
    RngStream rng(mix64(ctx.opts->seed, 0xC2));
    std::vector<TaskDataset> tasks;
    for (int t = 0; t < 5; ++t) {
        RngStream task_rng = rng.child(static_cast<std::uint64_t>(t));
        tasks.push_back(
            make_task(LatentSpec::ar(m, 0.6), SupportSpec::bernoulli(0.5), n, 0.2, task_rng));
    }
    RngStream l_rng = rng.child(100);
    const Matrix U = sample_orthogonal(m, l_rng);
    const Matrix V = sample_orthogonal(m, l_rng);
    Vector s(m);
    for (Index a = 0; a < m; ++a) s(a) = 0.5 + 1.5 * l_rng.uniform01();
    const Matrix L = U * s.asDiagonal() * V.transpose();
    const PopulationCheckReport rep = population_mle_check(tasks, L, 1e-8);
    const double ratio = rep.error_norm / rep.weight_norm;
    add(res, "weight_error_ratio", ratio);
    res.pass = ratio <= 0.02;
    res.detail = "||What - W L^-1|| / ||W|| = " + num(ratio) + " (tol 0.02) at n=1e5";
}

// ---------------------------------------------------------------------------
// 3. Closed-form conjugate matches independent grid suprema.

void c_conjugate(Ctx& ctx, CriterionResult& res) {
    RngStream rng(mix64(ctx.opts->seed, 0xC3));
    double worst_radial = 0.0;
    double worst_direct = 0.0;
    int direct_instances = 0;
    for (int i = 0; i < 50; ++i) {
        RngStream r = rng.child(static_cast<std::uint64_t>(i));
        const Index k = 1 + (i % 3);
        Vector v(k);
        for (Index a = 0; a < k; ++a) v(a) = 0.6 * r.normal();
        const double lambda1 = 0.05 + 0.55 * r.uniform01();
        const double lambda2 = 0.8 + 1.2 * r.uniform01();
        const double closed = g_conj(v, lambda1, lambda2);
        const double radial = conjugate_sup_radial(v, lambda1, lambda2);
        worst_radial = std::max(worst_radial, std::abs(closed - radial));
        if (k <= 2) {
            const double direct = conjugate_sup_direct(v, lambda1, lambda2, 2e-4);
            worst_direct = std::max(worst_direct, std::abs(closed - direct));
            ++direct_instances;
        }
    }
    add(res, "radial_max_abs_err", worst_radial);
    add(res, "direct_max_abs_err", worst_direct);
    add(res, "direct_instances", direct_instances);
    res.pass = worst_radial <= 1e-3 && worst_direct <= 1e-3;
    res.detail = "radial sup |err| " + num(worst_radial) + " over 50, direct sup |err| " +
                 num(worst_direct) + " over " + std::to_string(direct_instances) + " (tol 1e-3)";
}

// ---------------------------------------------------------------------------
// Shared generator for small multiclass problems.

SvmProblem random_svm(RngStream& r) {
    const auto n = static_cast<Index>(5 + r.uniform_int(16));
    const auto k = static_cast<Index>(2 + r.uniform_int(4));
    const auto m = static_cast<Index>(3 + r.uniform_int(28));
    SvmProblem p;
    p.F = Matrix(n, m);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < m; ++j) p.F(i, j) = r.normal();
    p.Y = Matrix::Zero(n, k);
    for (Index i = 0; i < n; ++i) p.Y(i, static_cast<Index>(r.uniform_int(k))) = 1.0;
    p.lambda1 = 0.02 + 0.3 * r.uniform01();
    p.lambda2 = 0.5 + 1.5 * r.uniform01();
    return p;
}

// 4. Duality gap certificate from independently recomputed objectives.

void c_duality_gap(Ctx& ctx, CriterionResult& res) {
    RngStream rng(mix64(ctx.opts->seed, 0xC4));
    double worst_ratio = -std::numeric_limits<double>::infinity();
    double most_negative = 0.0;
    for (int i = 0; i < 50; ++i) {
        RngStream r = rng.child(static_cast<std::uint64_t>(i));
        const SvmProblem p = random_svm(r);
        SvmSettings settings;
        settings.tol = 1e-7;
        const SvmFitResult fit = solve_dual(p, settings);
        const double n = static_cast<double>(p.n());
        const double gap =
            primal_objective(p, fit.weights.W) - (n - dual_objective(p, fit.dual));
        worst_ratio = std::max(worst_ratio, gap / n);
        most_negative = std::min(most_negative, gap / n);
    }
    add(res, "max_gap_over_n", worst_ratio);
    add(res, "min_gap_over_n", most_negative);
    res.pass = worst_ratio <= 1e-6 && most_negative >= -1e-9;
    res.detail = "recomputed gap/n in [" + num(most_negative) + ", " + num(worst_ratio) +
                 "] over 50 instances (tol 1e-6)";
}

// 5. Weights reported by the dual solver equal the dual-to-primal map
//    bit-for-bit, and column supports obey the thresholding rule.

void c_primal_dual_link(Ctx& ctx, CriterionResult& res) {
    RngStream rng(mix64(ctx.opts->seed, 0xC5));
    int weight_mismatches = 0;
    int support_mismatches = 0;
    for (int i = 0; i < 50; ++i) {
        RngStream r = rng.child(static_cast<std::uint64_t>(i));
        const SvmProblem p = random_svm(r);
        const SvmFitResult fit = solve_dual(p);
        const Matrix mapped = primal_from_dual(p, fit.dual);
        const Matrix& W = fit.weights.W;
        const bool same_bits =
            W.rows() == mapped.rows() && W.cols() == mapped.cols() &&
            std::memcmp(W.data(), mapped.data(),
                        sizeof(double) * static_cast<std::size_t>(W.size())) == 0;
        if (!same_bits) ++weight_mismatches;

        const Matrix C = (p.Y - fit.dual.Lambda).transpose() * p.F;
        bool supports_ok = fit.weights.support == support_of(W);
        for (Index j = 0; j < p.m(); ++j) {
            const bool rule_active = C.col(j).norm() > p.lambda1;
            const bool col_active = (W.col(j).array() != 0.0).any();
            if (rule_active != col_active) supports_ok = false;
        }
        if (!supports_ok) ++support_mismatches;
    }
    add(res, "weight_bit_mismatches", weight_mismatches);
    add(res, "support_rule_mismatches", support_mismatches);
    res.pass = weight_mismatches == 0 && support_mismatches == 0;
    res.detail = std::to_string(weight_mismatches) + " bitwise weight mismatches, " +
                 std::to_string(support_mismatches) + " threshold-rule mismatches over 50";
}

// ---------------------------------------------------------------------------
// 6. Penalties at or above the activation ceiling give exact zeros.

void c_ceiling_zeros(Ctx& ctx, CriterionResult& res) {
    RngStream rng(mix64(ctx.opts->seed, 0xC6));
    int nonzero_solutions = 0;
    for (int i = 0; i < 100; ++i) {
        RngStream r = rng.child(static_cast<std::uint64_t>(i));
        const Index k = 1 + (i % 3);
        const auto n = static_cast<Index>(15 + r.uniform_int(25));
        const auto m = static_cast<Index>(4 + r.uniform_int(20));
        RegressionProblem p;
        p.F = Matrix(n, m);
        p.Y = Matrix(n, k);
        for (Index a = 0; a < n; ++a)
            for (Index b = 0; b < m; ++b) p.F(a, b) = r.normal();
        const double y_scale = 0.5 + r.uniform01();
        for (Index a = 0; a < n; ++a)
            for (Index b = 0; b < k; ++b) p.Y(a, b) = y_scale * r.normal();
        const PenaltyKind kind = k == 1 ? PenaltyKind::lasso : PenaltyKind::group_lasso;
        const double ceiling = lambda_max(p, kind);
        p.lambda = i % 4 == 0 ? ceiling : ceiling * (1.0 + r.uniform01());
        const FitResult fit = k == 1 ? lasso_cd(p) : group_lasso_cd(p);
        const bool zero =
            (fit.weights.W.array() == 0.0).all() && fit.weights.support.empty();
        if (!zero) ++nonzero_solutions;
    }
    add(res, "nonzero_solutions", nonzero_solutions);
    res.pass = nonzero_solutions == 0;
    res.detail = std::to_string(nonzero_solutions) +
                 " of 100 ceiling-level solves were not exactly zero (every fourth at the exact "
                 "ceiling)";
}

// ---------------------------------------------------------------------------
// 7. Coordinate descent matches an accelerated proximal-gradient reference.

void c_solver_reference(Ctx& ctx, CriterionResult& res) {
    RngStream rng(mix64(ctx.opts->seed, 0xC7));
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        RngStream r = rng.child(static_cast<std::uint64_t>(i));
        const Index k = 1 + (i % 3);
        const auto m = static_cast<Index>(5 + r.uniform_int(21));
        const auto n = static_cast<Index>(2 * m + 10 + r.uniform_int(20));
        RegressionProblem p;
        p.F = Matrix(n, m);
        for (Index a = 0; a < n; ++a)
            for (Index b = 0; b < m; ++b) p.F(a, b) = r.normal();
        Matrix W0 = Matrix::Zero(k, m);
        for (Index b = 0; b < m; ++b) {
            if (r.uniform01() < 0.4) {
                for (Index a = 0; a < k; ++a) W0(a, b) = r.normal();
            }
        }
        p.Y = p.F * W0.transpose();
        for (Index a = 0; a < n; ++a)
            for (Index b = 0; b < k; ++b) p.Y(a, b) += 0.1 * r.normal();
        const PenaltyKind kind = k == 1 ? PenaltyKind::lasso : PenaltyKind::group_lasso;
        const double rel = 0.05 + 0.75 * r.uniform01();
        p.lambda = rel * lambda_max(p, kind);
        if (i % 3 == 1) p.l2_lambda = 0.1 * r.uniform01();

        SolverSettings settings;
        settings.tol = 1e-12;
        const FitResult fit = k == 1 ? lasso_cd(p, settings) : group_lasso_cd(p, settings);
        const double obj_cd = regression_objective(p, fit.weights.W);
        double obj_ref = 0.0;
        (void)proximal_reference(p, &obj_ref);
        const double diff = std::abs(obj_cd - obj_ref) / std::max(1.0, std::abs(obj_ref));
        worst = std::max(worst, diff);
    }
    add(res, "max_objective_rel_diff", worst);
    res.pass = worst <= 1e-9;
    res.detail = "max relative objective difference " + num(worst) + " over 100 (tol 1e-9)";
}

// ---------------------------------------------------------------------------
// 8. Implicit-differentiation gradients match central finite differences on
//    instances whose inner support and signs are locally stable.

void c_hypergradient(Ctx& ctx, CriterionResult& res) {
    RngStream rng(mix64(ctx.opts->seed, 0xC8));
    const Index n = 40;
    int found = 0;
    int attempts = 0;
    double worst = 0.0;
    while (found < 20 && attempts < 300) {
        RngStream r = rng.child(static_cast<std::uint64_t>(attempts++));
        const auto m = static_cast<Index>(2 + r.uniform_int(7));
        const auto d = static_cast<Index>(2 + r.uniform_int(7));
        const TaskDataset task =
            make_task(LatentSpec::ar(d, 0.5), SupportSpec::bernoulli(0.5), n, 0.1, r);
        LinearRepresentation rep;
        rep.Theta = Matrix(m, d);
        for (Index a = 0; a < m; ++a)
            for (Index b = 0; b < d; ++b)
                rep.Theta(a, b) = r.normal() / std::sqrt(static_cast<double>(d));

        BilevelConfig cfg;
        cfg.m = m;
        cfg.d = d;
        cfg.holdout = 0.5;
        cfg.inner_tol = 1e-13;
        cfg.inner_max_sweeps = 200000;

        RegressionProblem probe;
        probe.F = (task.X * rep.Theta.transpose()).topRows(n / 2);
        probe.Y = task.y.head(n / 2);
        const double lambda =
            (0.15 + 0.35 * r.uniform01()) * lambda_max(probe, PenaltyKind::lasso);

        const TaskGrad tg = hypergradient(rep, task, lambda, InnerKind::lasso, cfg);
        if (tg.skipped || tg.support_size == 0 || tg.grad.norm() < 1e-3) continue;
        Matrix fd;
        if (!fd_outer_gradient(rep, task, lambda, InnerKind::lasso, cfg, 5e-5, fd)) continue;
        const double rel = (tg.grad - fd).norm() / tg.grad.norm();
        worst = std::max(worst, rel);
        ++found;
    }
    add(res, "max_rel_err", worst);
    add(res, "instances", found);
    add(res, "attempts", attempts);
    res.pass = found == 20 && worst <= 1e-4;
    res.detail = "max relative gradient error " + num(worst) + " over " + std::to_string(found) +
                 " stable instances from " + std::to_string(attempts) + " draws (tol 1e-4)";
}

// ---------------------------------------------------------------------------
// 9. Generalization experiment: sparse fits on the ground-truth features beat
//    every other arm at small n and the gap closes at large n.

void c_generalization(Ctx& ctx, CriterionResult& res) {
    const ExperimentConfig cfg = base_config(ctx, "E1_generalization");
    const std::vector<ResultRow> rows = run_e1(cfg);
    ctx.e1_rows = rows;
    ctx.have_e1 = true;

    const std::string frac = "/frac=" + format_double(0.05);
    const double dis_lasso = mean_where(rows, "dis-lasso" + frac, 25.0, "r2_test");
    const double dis_ridge = mean_where(rows, "dis-ridge" + frac, 25.0, "r2_test");
    const double ent_lasso = mean_where(rows, "ent-lasso" + frac, 25.0, "r2_test");
    const double ent_ridge = mean_where(rows, "ent-ridge" + frac, 25.0, "r2_test");
    double lo150 = std::numeric_limits<double>::infinity();
    double hi150 = -lo150;
    for (const char* arm : {"dis-lasso", "dis-ridge", "ent-lasso", "ent-ridge"}) {
        const double v = mean_where(rows, arm + frac, 150.0, "r2_test");
        lo150 = std::min(lo150, v);
        hi150 = std::max(hi150, v);
    }
    add(res, "dis_lasso_n25", dis_lasso);
    add(res, "dis_ridge_n25", dis_ridge);
    add(res, "ent_lasso_n25", ent_lasso);
    add(res, "ent_ridge_n25", ent_ridge);
    add(res, "spread_n150", hi150 - lo150);
    const bool others_low = dis_ridge < 0.2 && ent_lasso < 0.2 && ent_ridge < 0.2;
    const bool ridge_pair = std::abs(dis_ridge - ent_ridge) <= 0.02;
    res.pass = dis_lasso > 0.5 && others_low && ridge_pair && hi150 - lo150 <= 0.05;
    // On this design family the top covariance eigenvalue carries most of the
    // signal energy, so a per-fold tuned ridge reaches R^2 well above 0.2 at
    // n=25, and its predictions are invariant under the orthogonal mixing.
    // The baseline ceiling is therefore unreachable for faithfully tuned
    // arms (see the README's test section); when every other clause holds,
    // the failure is flagged as that documented limitation.
    res.known_red = !res.pass && dis_lasso > 0.5 && ridge_pair && hi150 - lo150 <= 0.05;
    res.detail = "n=25 R2: dis-lasso " + num(dis_lasso) + " (>0.5), dis-ridge " + num(dis_ridge) +
                 ", ent-lasso " + num(ent_lasso) + ", ent-ridge " + num(ent_ridge) +
                 " (<0.2, ridge pair gap " + num(std::abs(dis_ridge - ent_ridge)) +
                 " <=0.02); n=150 spread " + num(hi150 - lo150) + " (<=0.05)";
}

// ---------------------------------------------------------------------------
// 10. Representation recovery: sparse inner solver identifies the latents,
//     beats the quadratic inner solver, and survives latent correlation.

void c_recovery(Ctx& ctx, CriterionResult& res) {
    const ExperimentConfig cfg = base_config(ctx, "E2_bilevel");
    const std::vector<ResultRow> rows = run_e2(cfg);

    int support_rows = 0;
    int support_holds = 0;
    for (const ResultRow& r : rows) {
        if (r.metric == "assumption_support_holds" && r.arm.rfind("lasso/", 0) == 0) {
            ++support_rows;
            support_holds += r.value == 1.0 ? 1 : 0;
        }
    }
    const double best_lasso_rho0 = best_mean(rank_means(rows, "lasso/rho=0", "mcc"));
    const double best_ridge_rho0 = best_mean(rank_means(rows, "ridge/rho=0", "mcc"));
    const double best_lasso_rho9 = best_mean(rank_means(rows, "lasso/rho=0.9", "mcc"));
    const double degradation = best_lasso_rho0 - best_lasso_rho9;

    add(res, "best_lasso_mcc_rho0", best_lasso_rho0);
    add(res, "best_ridge_mcc_rho0", best_ridge_rho0);
    add(res, "best_lasso_mcc_rho09", best_lasso_rho9);
    add(res, "support_check_fraction",
        support_rows == 0 ? 0.0 : static_cast<double>(support_holds) / support_rows);
    res.pass = support_rows > 0 && support_holds == support_rows && best_lasso_rho0 >= 0.95 &&
               best_lasso_rho0 >= best_ridge_rho0 + 0.05 && degradation <= 0.05;
    res.detail = "support family check " + std::to_string(support_holds) + "/" +
                 std::to_string(support_rows) + "; best MCC lasso " + num(best_lasso_rho0) +
                 " (>=0.95) vs ridge " + num(best_ridge_rho0) + " (+0.05 margin); rho=0.9 drop " +
                 num(degradation) + " (<=0.05)";
}

// ---------------------------------------------------------------------------
// 11. Assumption violation: wide shared support blocks break feature-level
//     recovery while linear identification persists; heavy-tailed dense
//     weights do not.

void c_violation(Ctx& ctx, CriterionResult& res) {
    const ExperimentConfig cfg = base_config(ctx, "E3_violation");
    const std::vector<ResultRow> rows = run_e3(cfg);

    const double best_bernoulli = best_mean(rank_means(rows, "bernoulli/rho=0", "mcc"));
    const RankMeans block6_mcc = rank_means(rows, "block6/rho=0", "mcc");
    const int rank6 = best_rank(block6_mcc);
    require(rank6 >= 0, "acceptance: no block6 rows");
    const double best_block6 = block6_mcc.mean[static_cast<std::size_t>(rank6)];
    const RankMeans block6_r = rank_means(rows, "block6/rho=0", "r");
    require(static_cast<int>(block6_r.mean.size()) > rank6 &&
                block6_r.count[static_cast<std::size_t>(rank6)] > 0,
            "acceptance: no block6 r rows at the best rank");
    const double r_at_best = block6_r.mean[static_cast<std::size_t>(rank6)];
    const double best_laplace = best_mean(rank_means(rows, "laplace/rho=0", "mcc"));
    const double best_block2 = best_mean(rank_means(rows, "block2/rho=0", "mcc"));
    const double best_block3 = best_mean(rank_means(rows, "block3/rho=0", "mcc"));

    add(res, "best_bernoulli_mcc", best_bernoulli);
    add(res, "best_block6_mcc", best_block6);
    add(res, "block6_r_at_best", r_at_best);
    add(res, "best_laplace_mcc", best_laplace);
    add(res, "best_block2_mcc", best_block2);
    add(res, "best_block3_mcc", best_block3);
    res.pass = best_bernoulli - best_block6 >= 0.1 && r_at_best >= 0.95 &&
               std::abs(best_laplace - best_bernoulli) <= 0.05;
    res.detail = "best MCC bernoulli " + num(best_bernoulli) + ", block6 " + num(best_block6) +
                 " (drop >=0.1) with R " + num(r_at_best) + " (>=0.95); laplace " +
                 num(best_laplace) + " (within 0.05)";
}

// ---------------------------------------------------------------------------
// 12. Exhaustive subset-search oracle recovers planted supports.

void c_subset_oracle(Ctx& ctx, CriterionResult& res) {
    RngStream rng(mix64(ctx.opts->seed, 0xCC));
    int recovered = 0;
    for (int s = 0; s < 10; ++s) {
        RngStream r = rng.child(static_cast<std::uint64_t>(s));
        const TaskDataset task =
            make_task(LatentSpec::ar(8, 0.5), SupportSpec::fixed_size(3), 1000, 0.2, r);
        const OracleFit fit = l20_mle_oracle(task, 3);
        if (fit.support == task.support_true) ++recovered;
    }
    add(res, "recovered_of_10", recovered);
    res.pass = recovered >= 9;
    if (ctx.opts->seed == 7 && kPinnedSubsetRecovery >= 0) {
        res.pass = res.pass && recovered == kPinnedSubsetRecovery;
        res.detail = std::to_string(recovered) + "/10 supports recovered (bound 9, pinned " +
                     std::to_string(kPinnedSubsetRecovery) + ")";
    } else {
        res.detail = std::to_string(recovered) + "/10 supports recovered (bound 9)";
    }
}

// ---------------------------------------------------------------------------
// 13. Metric identities: assignment optimality, exactness under scaled
//     permutations, ordering against the regression score, closed DCI cases.

void c_metric_identities(Ctx& ctx, CriterionResult& res) {
    RngStream rng(mix64(ctx.opts->seed, 0xCD));
    const Index n = 25;

    double assignment_max_diff = 0.0;
    for (int i = 0; i < 200; ++i) {
        RngStream r = rng.child(static_cast<std::uint64_t>(i));
        const Index m = 2 + (i % 6);
        Matrix Z_true(n, m);
        for (Index a = 0; a < n; ++a)
            for (Index b = 0; b < m; ++b) Z_true(a, b) = r.normal();
        Matrix A(m, m);
        for (Index a = 0; a < m; ++a)
            for (Index b = 0; b < m; ++b) A(a, b) = r.normal();
        Matrix Z_learned = Z_true * A;
        for (Index a = 0; a < n; ++a)
            for (Index b = 0; b < m; ++b) Z_learned(a, b) += 0.3 * r.normal();
        const double fast = mcc(Z_true, Z_learned).value;
        const double brute = brute_force_mcc(Z_true, Z_learned);
        assignment_max_diff = std::max(assignment_max_diff, std::abs(fast - brute));
    }

    // Scaled permutations with power-of-two scales commute with rounding, so
    // the score must hit 1 exactly; arbitrary scales are reported as a
    // measured near-1 worst case.
    double dp_min = 1.0;
    double dp_general_min = 1.0;
    for (int i = 0; i < 20; ++i) {
        RngStream r = rng.child(static_cast<std::uint64_t>(1000 + i));
        const auto m = static_cast<Index>(2 + r.uniform_int(7));
        Matrix Z_true(n, m);
        for (Index a = 0; a < n; ++a)
            for (Index b = 0; b < m; ++b) Z_true(a, b) = r.normal();
        std::vector<Index> perm(static_cast<std::size_t>(m));
        std::iota(perm.begin(), perm.end(), Index(0));
        for (Index a = m - 1; a > 0; --a) {
            const auto b = static_cast<Index>(r.uniform_int(static_cast<std::uint64_t>(a + 1)));
            std::swap(perm[static_cast<std::size_t>(a)], perm[static_cast<std::size_t>(b)]);
        }
        const double pow2[] = {0.25, 0.5, 1.0, 2.0, 4.0};
        Matrix Z_dp(n, m);
        Matrix Z_gen(n, m);
        for (Index b = 0; b < m; ++b) {
            const double sign = r.uniform_int(2) == 0 ? 1.0 : -1.0;
            const double scale2 = sign * pow2[r.uniform_int(5)];
            const double scale_any = sign * (0.3 + 2.0 * r.uniform01());
            Z_dp.col(b) = scale2 * Z_true.col(perm[static_cast<std::size_t>(b)]);
            Z_gen.col(b) = scale_any * Z_true.col(perm[static_cast<std::size_t>(b)]);
        }
        dp_min = std::min(dp_min, mcc(Z_true, Z_dp).value);
        dp_general_min = std::min(dp_general_min, mcc(Z_true, Z_gen).value);
    }

    double worst_excess = -1.0;
    for (int i = 0; i < 50; ++i) {
        RngStream r = rng.child(static_cast<std::uint64_t>(2000 + i));
        const auto m = static_cast<Index>(2 + r.uniform_int(7));
        Matrix Z_true(n, m);
        for (Index a = 0; a < n; ++a)
            for (Index b = 0; b < m; ++b) Z_true(a, b) = r.normal();
        Matrix Z_learned(n, m);
        if (i % 3 == 0) {
            for (Index a = 0; a < n; ++a)
                for (Index b = 0; b < m; ++b) Z_learned(a, b) = r.normal();
        } else {
            Matrix A(m, m);
            for (Index a = 0; a < m; ++a)
                for (Index b = 0; b < m; ++b) A(a, b) = r.normal();
            Z_learned = Z_true * A;
            if (i % 3 == 1) {
                for (Index a = 0; a < n; ++a)
                    for (Index b = 0; b < m; ++b) Z_learned(a, b) += 0.2 * r.normal();
            }
        }
        worst_excess =
            std::max(worst_excess, mcc(Z_true, Z_learned).value - r_score(Z_true, Z_learned));
    }

    bool dci_ok = true;
    for (const Index m : {Index(2), Index(3), Index(4), Index(6), Index(8)}) {
        const DciResult ident = dci_from_importance(Matrix::Identity(m, m));
        const DciResult flat = dci_from_importance(Matrix::Ones(m, m));
        dci_ok = dci_ok && ident.disentanglement == 1.0 && ident.completeness == 1.0 &&
                 flat.disentanglement == 0.0 && flat.completeness == 0.0;
    }
    const DciResult rect = dci_from_importance(Matrix::Ones(3, 5));
    dci_ok = dci_ok && rect.disentanglement == 0.0 && rect.completeness == 0.0;

    add(res, "assignment_max_diff", assignment_max_diff);
    add(res, "dp_pow2_min_mcc", dp_min);
    add(res, "dp_general_min_mcc", dp_general_min);
    add(res, "max_mcc_minus_r", worst_excess);
    add(res, "dci_closed_cases_ok", dci_ok ? 1.0 : 0.0);
    res.pass = assignment_max_diff == 0.0 && dp_min == 1.0 && worst_excess <= 1e-10 && dci_ok &&
               dp_general_min >= 1.0 - 1e-12;
    res.detail = "assignment vs brute force diff " + num(assignment_max_diff) +
                 " (==0); scaled-permutation MCC min " + num(dp_min) + " (==1), general scales " +
                 num(dp_general_min) + "; max mcc - r " + num(worst_excess) +
                 " (<=1e-10); closed DCI cases " + (dci_ok ? "exact" : "WRONG");
}

// ---------------------------------------------------------------------------
// 14. Re-running the generalization experiment reproduces results.csv
//     byte for byte.

void c_determinism(Ctx& ctx, CriterionResult& res) {
    namespace fs = std::filesystem;
    const ExperimentConfig cfg = base_config(ctx, "E1_generalization");
    const std::vector<ResultRow> rows_a = ctx.have_e1 ? ctx.e1_rows : run_e1(cfg);
    const std::vector<ResultRow> rows_b = run_e1(cfg);

    fs::path root = ctx.opts->scratch_dir.empty()
                        ? fs::temp_directory_path() / "srep-acceptance"
                        : fs::path(ctx.opts->scratch_dir);
    const fs::path dir_a = root / "determinism-a";
    const fs::path dir_b = root / "determinism-b";
    emit(rows_a, cfg, dir_a.string());
    emit(rows_b, cfg, dir_b.string());

    const std::string csv_a = read_text_file((dir_a / "results.csv").string());
    const std::string csv_b = read_text_file((dir_b / "results.csv").string());
    const std::string sum_a = read_text_file((dir_a / "summary.json").string());
    const std::string sum_b = read_text_file((dir_b / "summary.json").string());
    const bool csv_equal = csv_a == csv_b;
    const bool summary_equal = sum_a == sum_b;

    add(res, "csv_equal", csv_equal ? 1.0 : 0.0);
    add(res, "summary_equal", summary_equal ? 1.0 : 0.0);
    add(res, "row_count", static_cast<double>(rows_b.size()));
    res.pass = csv_equal && !csv_a.empty();
    res.detail = std::string("results.csv ") + (csv_equal ? "byte-identical" : "DIFFERS") +
                 " across two runs (" + std::to_string(csv_a.size()) + " bytes); summary.json " +
                 (summary_equal ? "matches" : "differs");
}

// ---------------------------------------------------------------------------

struct CriterionSpec {
    int id;
    const char* name;
    void (*body)(Ctx&, CriterionResult&);
    double time_budget;  // seconds; 0 = unbounded
};

constexpr CriterionSpec kCriteria[] = {
    {1, "prediction-invariance", c_invariance, 10.0},
    {2, "population-weight-recovery", c_population, 30.0},
    {3, "conjugate-grid-sup", c_conjugate, 0.0},
    {4, "duality-gap", c_duality_gap, 60.0},
    {5, "primal-dual-link", c_primal_dual_link, 0.0},
    {6, "penalty-ceiling-zeros", c_ceiling_zeros, 0.0},
    {7, "solver-objective-reference", c_solver_reference, 0.0},
    {8, "hypergradient-finite-diff", c_hypergradient, 0.0},
    {9, "generalization-experiment", c_generalization, 300.0},
    {10, "recovery-experiment", c_recovery, 600.0},
    {11, "violation-experiment", c_violation, 0.0},
    {12, "subset-oracle-recovery", c_subset_oracle, 0.0},
    {13, "metric-identities", c_metric_identities, 0.0},
    {14, "experiment-determinism", c_determinism, 0.0},
};

bool selected(const std::string& filter, const CriterionSpec& spec) {
    if (filter.empty()) return true;
    if (std::to_string(spec.id) == filter) return true;
    return std::string(spec.name).find(filter) != std::string::npos;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options) {
    Ctx ctx;
    ctx.opts = &options;
    std::vector<CriterionResult> out;
    for (const CriterionSpec& spec : kCriteria) {
        if (!selected(options.filter, spec)) continue;
        CriterionResult res;
        res.id = spec.id;
        res.name = spec.name;
        const auto start = std::chrono::steady_clock::now();
        try {
            spec.body(ctx, res);
        } catch (const std::exception& e) {
            res.pass = false;
            res.detail = std::string("exception: ") + e.what();
        }
        res.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (spec.time_budget > 0.0) {
            add(res, "seconds_budget", spec.time_budget);
            if (res.seconds > spec.time_budget) {
                res.pass = false;
                res.known_red = false;  // a blown budget is never the documented limitation
                res.detail += "; exceeded " + num(spec.time_budget) + "s budget (" +
                              num(res.seconds) + "s)";
            }
        }
        if (options.on_result) options.on_result(res);
        out.push_back(std::move(res));
    }
    return out;
}

std::vector<ResultRow> unit_oracle_rows(const AcceptanceOptions& options) {
    std::vector<ResultRow> rows;
    for (const CriterionResult& res : run_acceptance(options)) {
        ResultRow base;
        base.experiment = "unit_oracles";
        base.arm = res.name;
        base.seed = options.seed;
        base.n = res.id;
        base.lambda_rel = 0.0;
        base.metric = "pass";
        base.value = res.pass ? 1.0 : 0.0;
        rows.push_back(base);
        base.metric = "seconds";
        base.value = res.seconds;
        rows.push_back(base);
        for (const auto& [name, value] : res.measured) {
            if (!std::isfinite(value)) continue;
            base.metric = name;
            base.value = value;
            rows.push_back(base);
        }
    }
    return rows;
}

}  // namespace srep::checks
