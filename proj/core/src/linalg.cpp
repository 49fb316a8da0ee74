#include <srep/linalg.hpp>

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace srep {

Matrix cholesky_lower(const Matrix& A) {
    require(A.rows() == A.cols(), "cholesky_lower: matrix must be square");
    require_finite(A, "cholesky_lower: matrix");
    const Index m = A.rows();
    Matrix L = Matrix::Zero(m, m);
    for (Index k = 0; k < m; ++k) {
        double d = A(k, k);
        for (Index j = 0; j < k; ++j) d -= L(k, j) * L(k, j);
        if (!(d > 0.0)) {
            throw FactorizationError(
                "cholesky_lower: leading minor of order " + std::to_string(k + 1) +
                    " is not positive definite",
                k + 1);
        }
        L(k, k) = std::sqrt(d);
        for (Index i = k + 1; i < m; ++i) {
            double s = A(i, k);
            for (Index j = 0; j < k; ++j) s -= L(i, j) * L(k, j);
            L(i, k) = s / L(k, k);
        }
    }
    return L;
}

Matrix solve_psd(const Matrix& A, const Matrix& B) {
    require(A.rows() == B.rows(), "solve_psd: dimension mismatch");
    const Matrix L = cholesky_lower(A);
    Matrix X = B;
    L.triangularView<Eigen::Lower>().solveInPlace(X);
    L.transpose().triangularView<Eigen::Upper>().solveInPlace(X);
    return X;
}

Vector solve_psd(const Matrix& A, const Vector& b) {
    Matrix x = solve_psd(A, Matrix(b));
    return Vector(x.col(0));
}

Matrix sample_orthogonal(Index m, RngStream& rng) {
    require(m > 0, "sample_orthogonal: dimension must be positive");
    Matrix A(m, m);
    for (Index j = 0; j < m; ++j)
        for (Index i = 0; i < m; ++i) A(i, j) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(A);
    Matrix Q = qr.householderQ() * Matrix::Identity(m, m);
    const Matrix& R = qr.matrixQR();
    for (Index j = 0; j < m; ++j) {
        if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
    }
    return Q;
}

Vector project_simplex(const Vector& v) {
    require(v.size() > 0, "project_simplex: empty input");
    require_finite(v, "project_simplex: input");
    const Index k = v.size();
    std::vector<double> u(v.data(), v.data() + k);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cumsum = 0.0;
    double theta = 0.0;
    Index rho = -1;
    for (Index j = 0; j < k; ++j) {
        cumsum += u[static_cast<std::size_t>(j)];
        const double candidate = (cumsum - 1.0) / static_cast<double>(j + 1);
        if (u[static_cast<std::size_t>(j)] - candidate > 0.0) {
            rho = j;
            theta = candidate;
        }
    }
    // rho >= 0 always: the largest entry u[0] satisfies u[0] - (u[0] - 1) > 0.
    (void)rho;
    return (v.array() - theta).cwiseMax(0.0).matrix();
}

}  // namespace srep
