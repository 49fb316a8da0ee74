#pragma once

#include <srep/common.hpp>
#include <srep/rng.hpp>

namespace srep {

// Solve A X = B for symmetric positive definite A via unpivoted Cholesky.
// Only the lower triangle of A is read. Throws FactorizationError naming the
// first non-positive leading minor when A is not numerically PD.
[[nodiscard]] Matrix solve_psd(const Matrix& A, const Matrix& B);
[[nodiscard]] Vector solve_psd(const Matrix& A, const Vector& b);

// Lower Cholesky factor of a symmetric positive definite matrix; same error
// contract as solve_psd.
[[nodiscard]] Matrix cholesky_lower(const Matrix& A);

// Haar-distributed orthogonal m x m matrix: QR of a standard Gaussian matrix
// with columns signed so that diag(R) > 0. Consumes m*m normal deviates in
// column-major order.
[[nodiscard]] Matrix sample_orthogonal(Index m, RngStream& rng);

// Euclidean projection onto the probability simplex { p >= 0, sum p = 1 }.
[[nodiscard]] Vector project_simplex(const Vector& v);

}  // namespace srep
