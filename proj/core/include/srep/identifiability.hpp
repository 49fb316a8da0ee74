#pragma once

#include <srep/assignment.hpp>
#include <srep/common.hpp>
#include <srep/taskgen.hpp>

#include <vector>

namespace srep {

// Family of task supports over m features.
struct SupportFamily {
    Index m = 0;
    std::vector<std::vector<Index>> supports;
};

// Per-task weight matrices (k_t x m) pooled for rank checks.
struct WeightEnsemble {
    Index m = 0;
    std::vector<Matrix> weights;
};

// Does every feature j get covered by supports that exclude j? Required:
// for each j, the union of supports not containing j is [m] \ {j}.
struct SupportCheckReport {
    bool holds = false;
    Index first_violating_feature = -1;  // -1 when holds
    std::vector<Index> missing;          // features never covered while j is excluded
};

[[nodiscard]] SupportCheckReport check_sufficient_support(const SupportFamily& family);

// Do the pooled weight rows span R^m? Greedy rank construction with
// re-orthogonalization; a row joins the basis when its residual exceeds
// tol * max(1, ||row||).
struct VariabilityReport {
    bool holds = false;
    Index rank = 0;
    std::vector<std::pair<Index, Index>> rows_used;  // (task index, row index)
};

[[nodiscard]] VariabilityReport check_task_variability(const WeightEnsemble& ensemble,
                                                       double tol = 1e-10);

// Nearest scaled permutation to an invertible candidate mixing matrix:
// perm(i) = assigned column for row i, scales(i) = L(i, perm(i)). Exact when
// L = diag(scales) * P. Throws when |det L| vanishes or a selected entry is 0.
struct PermutationExtraction {
    Permutation perm;
    Vector scales;

    [[nodiscard]] Matrix to_matrix() const;  // diag(scales) applied to perm rows
};

[[nodiscard]] PermutationExtraction extract_permutation(const Matrix& L);

// Exhaustive L0-constrained least squares: minimizes ||y - F_S w_S||^2 over
// supports |S| <= budget, scanning subsets in lexicographic (prefix DFS)
// order so ties keep the lexicographically smallest support. Supports whose
// Gram fails to factor are skipped; an equivalent smaller or later support
// always covers them. Requires m <= 20.
struct OracleFit {
    Vector w;  // m, hard zeros off support
    std::vector<Index> support;
    double sse = 0.0;
};

[[nodiscard]] OracleFit l20_mle_oracle(const Matrix& F, const Vector& y, Index budget);
[[nodiscard]] OracleFit l20_mle_oracle(const TaskDataset& task, Index budget);

// Max absolute prediction difference between OLS fits on F and on F L^T,
// both solved by column-pivoted QR. scale = max(1, ||predictions||_inf).
struct InvarianceReport {
    double max_pred_diff = 0.0;
    double scale = 1.0;
};

[[nodiscard]] InvarianceReport verify_mle_invariance(const TaskDataset& task, const Matrix& L);

// Large-sample surrogate for the population argmin: per task, ridge with the
// given penalty on the entangled design F_true L^T; rows stacked into W_hat
// and compared against W L^{-1}.
struct PopulationCheckReport {
    double error_norm = 0.0;   // ||W_hat - W L^{-1}||_F
    double weight_norm = 0.0;  // ||W||_F
};

[[nodiscard]] PopulationCheckReport population_mle_check(const std::vector<TaskDataset>& tasks,
                                                         const Matrix& L, double ridge_lambda);

}  // namespace srep
