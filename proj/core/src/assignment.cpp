#include <srep/assignment.hpp>

#include <algorithm>
#include <limits>

namespace srep {

bool Permutation::is_valid() const {
    const Index m = size();
    std::vector<bool> seen(static_cast<std::size_t>(m), false);
    for (Index i = 0; i < m; ++i) {
        const Index v = map[static_cast<std::size_t>(i)];
        if (v < 0 || v >= m || seen[static_cast<std::size_t>(v)]) return false;
        seen[static_cast<std::size_t>(v)] = true;
    }
    return true;
}

Permutation Permutation::inverse() const {
    require(is_valid(), "Permutation::inverse: invalid permutation");
    Permutation inv;
    inv.map.assign(map.size(), 0);
    for (Index i = 0; i < size(); ++i) inv.map[static_cast<std::size_t>((*this)(i))] = i;
    return inv;
}

Matrix Permutation::to_matrix() const {
    require(is_valid(), "Permutation::to_matrix: invalid permutation");
    Matrix P = Matrix::Zero(size(), size());
    for (Index i = 0; i < size(); ++i) P(i, (*this)(i)) = 1.0;
    return P;
}

AssignmentResult best_assignment(const Matrix& scores) {
    require(scores.rows() == scores.cols(), "best_assignment: score matrix must be square");
    require(scores.rows() > 0, "best_assignment: empty score matrix");
    require_finite(scores, "best_assignment: scores");
    const Index n = scores.rows();
    const double inf = std::numeric_limits<double>::infinity();

    // Shortest augmenting path assignment on cost = -scores, 1-based arrays.
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<Index> p(static_cast<std::size_t>(n) + 1, 0);
    std::vector<Index> way(static_cast<std::size_t>(n) + 1, 0);
    for (Index i = 1; i <= n; ++i) {
        p[0] = i;
        Index j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
        std::vector<bool> used(static_cast<std::size_t>(n) + 1, false);
        do {
            used[static_cast<std::size_t>(j0)] = true;
            const Index i0 = p[static_cast<std::size_t>(j0)];
            double delta = inf;
            Index j1 = 0;
            for (Index j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur =
                    -scores(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (Index j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const Index j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    AssignmentResult result;
    result.perm.map.assign(static_cast<std::size_t>(n), 0);
    for (Index j = 1; j <= n; ++j) {
        result.perm.map[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
    }
    for (Index i = 0; i < n; ++i) result.value += scores(i, result.perm(i));
    return result;
}

}  // namespace srep
