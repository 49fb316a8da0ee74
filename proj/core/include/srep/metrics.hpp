#pragma once

#include <srep/assignment.hpp>
#include <srep/common.hpp>

namespace srep {

// Pearson correlation, clamped to [-1, 1]; exactly 0 when either input is
// constant. The denominator uses a single sqrt of the variance product so
// that perfectly aligned inputs evaluate to exactly +-1.
[[nodiscard]] double pearson(const Vector& x, const Vector& y);

// Mean correlation coefficient: |Pearson| cross-correlation matrix between
// true and learned columns, maximized over one-to-one matchings. perm maps
// true factor j to its matched learned column.
struct MccResult {
    double value = 0.0;
    Permutation perm;
};

[[nodiscard]] MccResult mcc(const Matrix& Z_true, const Matrix& Z_learned);

// Mean multiple correlation: each true factor regressed on all learned
// features (centered, 1e-10 ridge jitter); the factor's score is the
// correlation between target and fitted values. Never below mcc up to
// numerical slack.
[[nodiscard]] double r_score(const Matrix& Z_true, const Matrix& Z_learned);

// Disentanglement / completeness from an importance matrix I (row i = true
// factor, column j = learned feature, entries >= 0):
//   D = mean_i (1 - H(row_i)),  C = mean_j (1 - H(col_j)),
// with entropies normalized by log of the vector length. All-zero rows or
// columns contribute 0 (maximal ambiguity).
struct DciResult {
    double disentanglement = 0.0;
    double completeness = 0.0;
    Matrix importance;
};

[[nodiscard]] DciResult dci_from_importance(const Matrix& importance);

// Importance from a linear probe: learned features are standardized
// (constant columns stay zero), each true factor is regressed on them with a
// 1e-10 ridge jitter, and |coefficients| form the importance matrix. The
// standardization makes the result invariant to per-feature rescaling.
[[nodiscard]] DciResult dci(const Matrix& Z_true, const Matrix& Z_learned);

// Coefficient of determination 1 - SS_res / SS_tot. Throws when y_true is
// constant.
[[nodiscard]] double r2(const Vector& y_true, const Vector& y_pred);

struct MetricsReport {
    double mcc = 0.0;
    double r = 0.0;
    double dci_disentanglement = 0.0;
    double dci_completeness = 0.0;
    Permutation perm;
};

// Bundled evaluation; enforces mcc <= r + 1e-9.
[[nodiscard]] MetricsReport evaluate_representation(const Matrix& Z_true, const Matrix& Z_learned);

}  // namespace srep
