#include <srep/regression.hpp>

#include <srep/linalg.hpp>
#include <srep/prox.hpp>

#include <cmath>
#include <string>

namespace srep {

void RegressionProblem::validate() const {
    require(F.rows() > 0 && F.cols() > 0, "RegressionProblem: empty design");
    require(Y.rows() == F.rows(), "RegressionProblem: F and Y row counts differ");
    require(Y.cols() >= 1, "RegressionProblem: targets must have at least one column");
    require(lambda >= 0.0, "RegressionProblem: lambda must be nonnegative");
    require(l2_lambda >= 0.0, "RegressionProblem: l2_lambda must be nonnegative");
    require_finite(F, "RegressionProblem: F");
    require_finite(Y, "RegressionProblem: Y");
}

std::vector<Index> support_of(const Matrix& W) {
    std::vector<Index> support;
    for (Index j = 0; j < W.cols(); ++j) {
        if ((W.col(j).array() != 0.0).any()) support.push_back(j);
    }
    return support;
}

double regression_objective(const RegressionProblem& problem, const Matrix& W) {
    const double n = static_cast<double>(problem.n());
    const Matrix R = problem.Y - problem.F * W.transpose();
    double penalty = 0.0;
    for (Index j = 0; j < W.cols(); ++j) penalty += W.col(j).norm();
    return R.squaredNorm() / (2.0 * n) + problem.lambda * penalty +
           0.5 * problem.l2_lambda * W.squaredNorm();
}

namespace {

// Stationarity residual of the group objective at W given the residual
// matrix R = Y - F W^T. For active columns the subgradient is unique; for
// zero columns the violation is the excess of ||g_j|| over lambda.
double kkt_residual(const RegressionProblem& p, const Matrix& W, const Matrix& R) {
    const double n = static_cast<double>(p.n());
    const Matrix G = (R.transpose() * p.F) / n;  // k x m correlation of residual
    double worst = 0.0;
    for (Index j = 0; j < p.m(); ++j) {
        const Vector g = G.col(j) - p.l2_lambda * W.col(j);
        double violation = 0.0;
        if ((W.col(j).array() == 0.0).all()) {
            violation = std::max(0.0, g.norm() - p.lambda);
        } else {
            violation = (g - p.lambda * W.col(j).normalized()).norm();
        }
        worst = std::max(worst, violation);
    }
    return worst;
}

}  // namespace

FitResult group_lasso_cd(const RegressionProblem& problem, const SolverSettings& settings) {
    problem.validate();
    require(settings.tol > 0.0, "SolverSettings: tol must be positive");
    require(settings.max_sweeps > 0, "SolverSettings: max_sweeps must be positive");

    const Index n = problem.n();
    const Index m = problem.m();
    const Index k = problem.k();
    const double dn = static_cast<double>(n);

    Matrix W;
    if (settings.warm_start.has_value()) {
        require(settings.warm_start->rows() == k && settings.warm_start->cols() == m,
                "SolverSettings: warm start shape mismatch");
        require_finite(*settings.warm_start, "SolverSettings: warm start");
        W = *settings.warm_start;
    } else {
        W = Matrix::Zero(k, m);
    }

    Vector col_scale(m);  // a_j = ||F(:, j)||^2 / n
    for (Index j = 0; j < m; ++j) col_scale(j) = problem.F.col(j).squaredNorm() / dn;

    Matrix R = problem.Y - problem.F * W.transpose();  // n x k, kept incremental

    FitResult result;
    for (Index sweep = 1; sweep <= settings.max_sweeps; ++sweep) {
        for (Index j = 0; j < m; ++j) {
            // Features with no mass never activate; this also avoids 0/0.
            if (col_scale(j) == 0.0) {
                if ((W.col(j).array() != 0.0).any()) {
                    R += problem.F.col(j) * W.col(j).transpose();
                    W.col(j).setZero();
                }
                continue;
            }
            const Vector c = (R.transpose() * problem.F.col(j)) / dn + col_scale(j) * W.col(j);
            const Vector updated = bst(c, problem.lambda) / (col_scale(j) + problem.l2_lambda);
            if ((updated.array() != W.col(j).array()).any()) {
                R += problem.F.col(j) * (W.col(j) - updated).transpose();
                W.col(j) = updated;
            }
        }
        result.sweeps = sweep;
        result.kkt = kkt_residual(problem, W, R);
        if (settings.record_objective) {
            result.objective_trace.push_back(regression_objective(problem, W));
        }
        if (result.kkt <= settings.tol) {
            result.weights.W = std::move(W);
            result.weights.support = support_of(result.weights.W);
            return result;
        }
    }
    throw ConvergenceError(
        "group_lasso_cd: no convergence after " + std::to_string(settings.max_sweeps) +
            " sweeps, KKT residual " + std::to_string(result.kkt),
        result.kkt);
}

FitResult lasso_cd(const RegressionProblem& problem, const SolverSettings& settings) {
    require(problem.Y.cols() == 1, "lasso_cd: expects a single target column");
    return group_lasso_cd(problem, settings);
}

PrimalWeights ridge_solve(const RegressionProblem& problem) {
    problem.validate();
    require(problem.lambda == 0.0, "ridge_solve: group penalty must be zero");
    const double dn = static_cast<double>(problem.n());
    Matrix G = (problem.F.transpose() * problem.F) / dn;
    G.diagonal().array() += problem.l2_lambda;
    const Matrix B = (problem.F.transpose() * problem.Y) / dn;  // m x k
    PrimalWeights out;
    out.W = solve_psd(G, B).transpose();
    out.support = support_of(out.W);
    return out;
}

double lambda_max(const RegressionProblem& problem, PenaltyKind kind) {
    problem.validate();
    const double dn = static_cast<double>(problem.n());
    switch (kind) {
        case PenaltyKind::lasso:
            require(problem.k() == 1, "lambda_max(lasso): expects a single target column");
            [[fallthrough]];
        case PenaltyKind::group_lasso: {
            // Mirrors the coordinate-descent correlation (divide before the
            // norm), so a solve at exactly lambda_max thresholds every column
            // to an exact zero on the first sweep.
            double worst = 0.0;
            for (Index j = 0; j < problem.m(); ++j) {
                worst = std::max(worst, ((problem.Y.transpose() * problem.F.col(j)) / dn).norm());
            }
            return worst;
        }
        case PenaltyKind::ridge:
            return problem.F.squaredNorm() / dn;
    }
    throw std::invalid_argument("lambda_max: unknown penalty kind");
}

}  // namespace srep
