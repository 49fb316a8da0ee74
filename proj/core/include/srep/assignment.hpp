#pragma once

#include <srep/common.hpp>

#include <vector>

namespace srep {

// Bijection on {0, ..., m-1}; map[i] is the image of i.
struct Permutation {
    std::vector<Index> map;

    [[nodiscard]] Index size() const noexcept { return static_cast<Index>(map.size()); }
    [[nodiscard]] Index operator()(Index i) const { return map[static_cast<std::size_t>(i)]; }
    [[nodiscard]] bool is_valid() const;
    [[nodiscard]] Permutation inverse() const;

    // Matrix P with P(i, map[i]) = 1, so that row i of P picks coordinate map[i].
    [[nodiscard]] Matrix to_matrix() const;
};

struct AssignmentResult {
    Permutation perm;  // row i is assigned to column perm(i)
    double value = 0.0;  // sum of selected scores
};

// Maximum-total-score assignment on a square score matrix, O(m^3) via the
// potential (Jonker-Volgenant style) shortest augmenting path method.
// Scores may include large negative sentinels to forbid cells.
[[nodiscard]] AssignmentResult best_assignment(const Matrix& scores);

}  // namespace srep
