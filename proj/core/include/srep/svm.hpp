#pragma once

#include <srep/common.hpp>
#include <srep/regression.hpp>

#include <vector>

namespace srep {

// Multiclass SVM with a row-sparsity penalty, in the unnormalized convention
//   P(W) = sum_i max_l [ (W(l,:) - W(y_i,:)) F(i,:)^T + 1 - Y(i,l) ]
//          + lambda1 * sum_j ||W(:, j)||_2 + (lambda2 / 2) ||W||_F^2,
// where F is n x m, Y is n x k one-hot, and W is k x m. The dual problem is
//   D(L) = sum_j g_conj((Y - L)^T F(:, j)) + <Y, L>,  rows of L on the simplex,
// and strong duality gives min P = n - min D.
struct SvmProblem {
    Matrix F;  // n x m features
    Matrix Y;  // n x k one-hot labels
    double lambda1 = 0.0;  // group sparsity weight, >= 0
    double lambda2 = 1.0;  // quadratic weight, > 0

    [[nodiscard]] Index n() const noexcept { return F.rows(); }
    [[nodiscard]] Index m() const noexcept { return F.cols(); }
    [[nodiscard]] Index k() const noexcept { return Y.cols(); }
    void validate() const;
    [[nodiscard]] std::vector<Index> labels() const;  // class index per sample
};

// Dual variables: one simplex row per sample.
struct DualVariables {
    Matrix Lambda;  // n x k
};

// Fenchel conjugate of g(w) = lambda1 ||w|| + (lambda2 / 2) ||w||^2:
//   g_conj(v) = ||bst(v, lambda1)||^2 / (2 lambda2).
[[nodiscard]] double g_conj(const Vector& v, double lambda1, double lambda2);

[[nodiscard]] double primal_objective(const SvmProblem& problem, const Matrix& W);

// Validates feasibility of Lambda (rows on the simplex up to 1e-8).
[[nodiscard]] double dual_objective(const SvmProblem& problem, const DualVariables& dual);

// Primal-dual link W(:, j) = bst((Y - Lambda)^T F(:, j), lambda1) / lambda2.
// Thresholded columns are exact zeros.
[[nodiscard]] Matrix primal_from_dual(const SvmProblem& problem, const DualVariables& dual);

struct SvmSettings {
    double tol = 1e-8;          // stop when gap <= tol * n
    Index max_sweeps = 200000;  // row passes before ConvergenceError
    bool record_objective = false;  // fill dual_trace per sweep
};

struct SvmFitResult {
    DualVariables dual;
    PrimalWeights weights;  // W recomputed through primal_from_dual at the end
    double gap = 0.0;       // primal - (n - dual) certificate at return
    Index sweeps = 0;
    std::vector<double> dual_trace;
};

// Projected block coordinate descent over dual rows with exact Lipschitz
// steps 1/L_i, L_i = ||F(i,:)||^2 / lambda2. Samples with zero feature rows
// are pinned to a vertex once at initialization. Throws ConvergenceError
// carrying the duality gap when max_sweeps is exhausted.
[[nodiscard]] SvmFitResult solve_dual(const SvmProblem& problem, const SvmSettings& settings = {});

}  // namespace srep
