#pragma once

#include <optional>
#include <vector>

#include "mlm/tensor.hpp"

namespace mlm {

/// Orthonormal basis of one mode together with its singular value spectrum.
struct FactorMatrix {
    Matrix u;                  ///< rows = mode extent, cols = retained rank
    Vector singular_values;    ///< non-increasing, one per retained column

    Index rows() const { return u.rows(); }
    Index cols() const { return u.cols(); }
};

/// Per-mode retained ranks. An empty entry means "full": the largest rank the
/// mode unfolding can carry, min(extent, product of the other extents).
struct RankSpec {
    std::vector<std::optional<Index>> ranks;

    static RankSpec full(std::size_t order) { return RankSpec{std::vector<std::optional<Index>>(order)}; }
    static RankSpec of(std::vector<Index> r);

    /// Resolved ranks for a shape; throws DimensionError when a rank is invalid.
    std::vector<Index> resolve(const Shape& shape) const;
};

/// Largest meaningful rank of the mode-k unfolding of a tensor with this shape.
Index max_mode_rank(const Shape& shape, std::size_t mode);

/// Leading left singular vectors of m.
///
/// A dense SVD is used for moderately shaped matrices. When one side exceeds the
/// other by more than 4:1 the basis is read off the Gram matrix of the smaller
/// side instead. Columns are sign-normalized so that their largest-magnitude
/// entry is positive.
FactorMatrix left_singular_vectors(const Matrix& m, Index rank);

/// Flip columns so that each column's largest-magnitude entry is positive.
void normalize_signs(Matrix& u);

struct HosvdResult {
    DenseTensor core;
    std::vector<FactorMatrix> factors;
};

/// Truncated higher-order SVD: per-mode leading left singular vectors and the
/// projected core t x_1 U_1^T x_2 U_2^T ...
HosvdResult hosvd(const DenseTensor& t, const RankSpec& ranks);

/// core x_1 U_1 x_2 U_2 ... x_n U_n
DenseTensor reconstruct(const DenseTensor& core, const std::vector<FactorMatrix>& factors);

/// Normalized cumulative energy sum_{j<=i} s_j^2 / sum_j s_j^2 for every mode.
std::vector<Vector> mode_energy(const std::vector<FactorMatrix>& factors);

} // namespace mlm
