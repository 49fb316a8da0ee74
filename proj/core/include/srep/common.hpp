#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <utility>

namespace srep {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Direct factorization hit a non-positive pivot. leading_minor() is the
// 1-based order of the first leading principal minor that is not positive,
// matching the LAPACK info convention.
class FactorizationError : public std::runtime_error {
public:
    FactorizationError(const std::string& msg, Index leading_minor)
        : std::runtime_error(msg), leading_minor_(leading_minor) {}

    [[nodiscard]] Index leading_minor() const noexcept { return leading_minor_; }

private:
    Index leading_minor_;
};

// Iterative solver exhausted its iteration budget. residual() is the last
// optimality measure (KKT sup-norm for coordinate descent, duality gap for
// the dual SVM solver).
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& msg, double residual)
        : std::runtime_error(msg), residual_(residual) {}

    [[nodiscard]] double residual() const noexcept { return residual_; }

private:
    double residual_;
};

// Outer training loop aborted because the objective grew past the configured
// divergence factor. step() is the outer step at which the abort fired.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& msg, Index step, double loss)
        : std::runtime_error(msg), step_(step), loss_(loss) {}

    [[nodiscard]] Index step() const noexcept { return step_; }
    [[nodiscard]] double loss() const noexcept { return loss_; }

private:
    Index step_;
    double loss_;
};

inline void require(bool condition, const std::string& msg) {
    if (!condition) throw std::invalid_argument(msg);
}

inline void require_finite(const Matrix& a, const std::string& name) {
    require(a.allFinite(), name + " must be finite");
}

inline void require_finite(const Vector& a, const std::string& name) {
    require(a.allFinite(), name + " must be finite");
}

}  // namespace srep
