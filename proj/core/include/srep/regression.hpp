#pragma once

#include <srep/common.hpp>

#include <optional>
#include <vector>

namespace srep {

// Penalized least squares data. All solvers share the objective convention
//   (1 / 2n) ||Y - F W^T||_F^2 + lambda * sum_j ||W(:, j)||_2
//                              + (l2_lambda / 2) ||W||_F^2,
// where F is n x m, Y is n x k, and W is k x m. For k = 1 the group penalty
// is the plain l1 norm.
struct RegressionProblem {
    Matrix F;  // n x m design
    Matrix Y;  // n x k targets; k = 1 for scalar regression
    double lambda = 0.0;     // group / l1 weight
    double l2_lambda = 0.0;  // additional quadratic weight

    [[nodiscard]] Index n() const noexcept { return F.rows(); }
    [[nodiscard]] Index m() const noexcept { return F.cols(); }
    [[nodiscard]] Index k() const noexcept { return Y.cols(); }
    void validate() const;
};

// Coefficients with their exact-zero support. support lists the columns of W
// holding at least one nonzero entry, ascending.
struct PrimalWeights {
    Matrix W;  // k x m
    std::vector<Index> support;
};

[[nodiscard]] std::vector<Index> support_of(const Matrix& W);

struct SolverSettings {
    double tol = 1e-8;        // stationarity sup-norm stopping threshold
    Index max_sweeps = 100000;  // full coordinate passes before ConvergenceError
    std::optional<Matrix> warm_start;  // k x m initial W
    bool record_objective = false;     // fill FitResult::objective_trace per sweep
};

struct FitResult {
    PrimalWeights weights;
    Index sweeps = 0;
    double kkt = 0.0;  // final stationarity residual
    std::vector<double> objective_trace;
};

// Cyclic block coordinate descent over feature columns with incremental
// residual updates. Blocks are set by exact block soft-thresholding, so
// inactive columns hold hard zeros. Throws ConvergenceError carrying the
// last KKT residual when max_sweeps is exhausted.
[[nodiscard]] FitResult group_lasso_cd(const RegressionProblem& problem,
                                       const SolverSettings& settings = {});

// Scalar-target front end; requires k = 1 and shares the group code path, so
// its output is bit-identical to group_lasso_cd on the same data.
[[nodiscard]] FitResult lasso_cd(const RegressionProblem& problem,
                                 const SolverSettings& settings = {});

// Closed-form ridge solve of (F^T F / n + l2_lambda I) W^T = F^T Y / n via
// solve_psd. Requires problem.lambda == 0; l2_lambda may be zero only when
// F^T F is numerically positive definite.
[[nodiscard]] PrimalWeights ridge_solve(const RegressionProblem& problem);

enum class PenaltyKind { lasso, group_lasso, ridge };

// Smallest penalty level that forces W = 0:
//   lasso:       (1/n) ||F^T y||_inf
//   group_lasso: (1/n) max_j ||Y^T F(:, j)||_2
//   ridge:       (1/n) ||F||_F^2  (scale reference; ridge never hits exact 0)
[[nodiscard]] double lambda_max(const RegressionProblem& problem, PenaltyKind kind);

[[nodiscard]] double regression_objective(const RegressionProblem& problem, const Matrix& W);

}  // namespace srep
