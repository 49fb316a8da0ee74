#pragma once

#include <srep/common.hpp>

namespace srep {

// Scalar soft-thresholding: prox of t * |x|. Exact zero on [-t, t].
inline double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

// Block soft-thresholding: prox of tau * ||.||_2,
//   bst(a, tau) = (1 - tau / ||a||)_+ a,
// with an exact zero vector whenever ||a|| <= tau.
inline Vector bst(const Vector& a, double tau) {
    require(tau >= 0.0, "bst: threshold must be nonnegative");
    const double norm = a.norm();
    if (norm <= tau) return Vector::Zero(a.size());
    return (1.0 - tau / norm) * a;
}

}  // namespace srep
