#include <srep/svm.hpp>

#include <srep/linalg.hpp>
#include <srep/prox.hpp>

#include <cmath>
#include <string>

namespace srep {

void SvmProblem::validate() const {
    require(F.rows() > 0 && F.cols() > 0, "SvmProblem: empty features");
    require(Y.rows() == F.rows(), "SvmProblem: F and Y row counts differ");
    require(Y.cols() >= 2, "SvmProblem: need at least two classes");
    require(lambda1 >= 0.0, "SvmProblem: lambda1 must be nonnegative");
    require(lambda2 > 0.0, "SvmProblem: lambda2 must be positive");
    require_finite(F, "SvmProblem: F");
    for (Index i = 0; i < Y.rows(); ++i) {
        Index ones = 0;
        for (Index l = 0; l < Y.cols(); ++l) {
            const double v = Y(i, l);
            require(v == 0.0 || v == 1.0, "SvmProblem: labels must be exactly one-hot");
            if (v == 1.0) ++ones;
        }
        require(ones == 1, "SvmProblem: each label row must have exactly one 1");
    }
}

std::vector<Index> SvmProblem::labels() const {
    std::vector<Index> out(static_cast<std::size_t>(n()), 0);
    for (Index i = 0; i < n(); ++i) {
        for (Index l = 0; l < k(); ++l) {
            if (Y(i, l) == 1.0) {
                out[static_cast<std::size_t>(i)] = l;
                break;
            }
        }
    }
    return out;
}

double g_conj(const Vector& v, double lambda1, double lambda2) {
    require(lambda1 >= 0.0, "g_conj: lambda1 must be nonnegative");
    require(lambda2 > 0.0, "g_conj: lambda2 must be positive");
    return bst(v, lambda1).squaredNorm() / (2.0 * lambda2);
}

double primal_objective(const SvmProblem& problem, const Matrix& W) {
    require(W.rows() == problem.k() && W.cols() == problem.m(),
            "primal_objective: W must be k x m");
    const std::vector<Index> y = problem.labels();
    const Matrix scores = problem.F * W.transpose();  // n x k
    double hinge = 0.0;
    for (Index i = 0; i < problem.n(); ++i) {
        const Index yi = y[static_cast<std::size_t>(i)];
        double worst = 0.0;  // l = y_i contributes exactly 0
        for (Index l = 0; l < problem.k(); ++l) {
            const double margin = scores(i, l) - scores(i, yi) + 1.0 - problem.Y(i, l);
            worst = std::max(worst, margin);
        }
        hinge += worst;
    }
    double group = 0.0;
    for (Index j = 0; j < problem.m(); ++j) group += W.col(j).norm();
    return hinge + problem.lambda1 * group + 0.5 * problem.lambda2 * W.squaredNorm();
}

namespace {

void check_feasible(const SvmProblem& problem, const Matrix& Lambda) {
    require(Lambda.rows() == problem.n() && Lambda.cols() == problem.k(),
            "DualVariables: Lambda must be n x k");
    require_finite(Lambda, "DualVariables: Lambda");
    for (Index i = 0; i < Lambda.rows(); ++i) {
        require(Lambda.row(i).minCoeff() >= -1e-12,
                "DualVariables: negative entry in row " + std::to_string(i));
        require(std::abs(Lambda.row(i).sum() - 1.0) <= 1e-8,
                "DualVariables: row " + std::to_string(i) + " does not sum to 1");
    }
}

}  // namespace

double dual_objective(const SvmProblem& problem, const DualVariables& dual) {
    check_feasible(problem, dual.Lambda);
    const Matrix C = (problem.Y - dual.Lambda).transpose() * problem.F;  // k x m
    double smooth = 0.0;
    for (Index j = 0; j < problem.m(); ++j) {
        smooth += g_conj(C.col(j), problem.lambda1, problem.lambda2);
    }
    return smooth + problem.Y.cwiseProduct(dual.Lambda).sum();
}

Matrix primal_from_dual(const SvmProblem& problem, const DualVariables& dual) {
    check_feasible(problem, dual.Lambda);
    const Matrix C = (problem.Y - dual.Lambda).transpose() * problem.F;  // k x m
    Matrix W(problem.k(), problem.m());
    for (Index j = 0; j < problem.m(); ++j) {
        W.col(j) = bst(C.col(j), problem.lambda1) / problem.lambda2;
    }
    return W;
}

SvmFitResult solve_dual(const SvmProblem& problem, const SvmSettings& settings) {
    problem.validate();
    require(settings.tol > 0.0, "SvmSettings: tol must be positive");
    require(settings.max_sweeps > 0, "SvmSettings: max_sweeps must be positive");

    const Index n = problem.n();
    const Index m = problem.m();
    const Index k = problem.k();
    const std::vector<Index> y = problem.labels();

    Matrix Lambda = Matrix::Constant(n, k, 1.0 / static_cast<double>(k));
    Vector lipschitz(n);
    for (Index i = 0; i < n; ++i) lipschitz(i) = problem.F.row(i).squaredNorm() / problem.lambda2;
    for (Index i = 0; i < n; ++i) {
        if (lipschitz(i) == 0.0) {
            // Zero feature row: the dual only sees <Y(i,:), Lambda(i,:)>, so a
            // vertex away from the label is optimal. Pick the first such class.
            Lambda.row(i).setZero();
            Lambda(i, y[static_cast<std::size_t>(i)] == 0 ? 1 : 0) = 1.0;
        }
    }

    Matrix C = (problem.Y - Lambda).transpose() * problem.F;  // k x m, incremental
    Matrix W(k, m);
    auto refresh_w = [&]() {
        for (Index j = 0; j < m; ++j) W.col(j) = bst(C.col(j), problem.lambda1) / problem.lambda2;
    };
    refresh_w();

    const double gap_target = settings.tol * static_cast<double>(n);
    SvmFitResult result;
    for (Index sweep = 1; sweep <= settings.max_sweeps; ++sweep) {
        for (Index i = 0; i < n; ++i) {
            if (lipschitz(i) == 0.0) continue;
            const Vector grad = problem.Y.row(i).transpose() - W * problem.F.row(i).transpose();
            const Vector target = Lambda.row(i).transpose() - grad / lipschitz(i);
            const Vector updated = project_simplex(target);
            const Vector delta = updated - Lambda.row(i).transpose();
            if ((delta.array() != 0.0).any()) {
                Lambda.row(i) = updated.transpose();
                C.noalias() -= delta * problem.F.row(i);
                refresh_w();
            }
        }

        // Certificate pass on a freshly recomputed C to keep drift out of the
        // stopping decision and out of the returned iterates.
        C = (problem.Y - Lambda).transpose() * problem.F;
        DualVariables dual{Lambda};
        const Matrix W_cert = primal_from_dual(problem, dual);
        const double dual_value = dual_objective(problem, dual);
        const double primal_value = primal_objective(problem, W_cert);
        const double gap = primal_value - (static_cast<double>(n) - dual_value);
        result.sweeps = sweep;
        result.gap = gap;
        if (settings.record_objective) result.dual_trace.push_back(dual_value);
        W = W_cert;
        if (gap <= gap_target) {
            result.dual = std::move(dual);
            result.weights.W = std::move(W);
            result.weights.support = support_of(result.weights.W);
            return result;
        }
    }
    throw ConvergenceError(
        "solve_dual: no convergence after " + std::to_string(settings.max_sweeps) +
            " sweeps, duality gap " + std::to_string(result.gap),
        result.gap);
}

}  // namespace srep
