#pragma once

#include <array>
#include <string>
#include <vector>

#include "mlm/dataset.hpp"
#include "mlm/hosvd.hpp"
#include "mlm/labels.hpp"

namespace mlm {

/// Per-coordinate affine map to zero mean and unit variance, and its inverse.
struct Standardizer {
    Vector mean;
    Vector scale;
    /// Coordinates whose variance was zero; their scale is 1.
    std::vector<bool> flagged;

    /// Fit over the columns of `codes` (coordinates x samples). Uses the population variance.
    static Standardizer fit(const Matrix& codes);
    static Standardizer identity(Index n);

    Index size() const { return mean.size(); }
    Vector standardize(const Vector& y) const;
    Vector destandardize(const Vector& y) const;
    Matrix standardize(const Matrix& codes) const;

    bool operator==(const Standardizer&) const = default;
};

/// Parameter subspaces of the model, numbered like the tensor modes.
enum class Subspace : int { Person = 2, Expression = 3, Rotation = 4 };

inline constexpr std::array<Subspace, 3> kSubspaces = {Subspace::Person, Subspace::Expression, Subspace::Rotation};

std::string_view to_string(Subspace k);

/// Person, expression and rotation parameter vectors (the rank-1 parameter tensor
/// is their outer product). Coordinates are unprimed, i.e. in the factor eigenbasis.
struct ParameterSet {
    Vector person;
    Vector expression;
    Vector rotation;

    Vector& operator[](Subspace k);
    const Vector& operator[](Subspace k) const;
};

/// Multilinear latent model for one block of latent coordinates.
struct TensorModel {
    DenseTensor core;                   ///< latent-rank x person-rank x expression-rank x rotation-rank
    std::array<FactorMatrix, 4> factors;
    Standardizer standardizer;
    std::array<std::string, 4> mode_labels{"latent", "person", "expression", "rotation"};
    AxisLabels axes;

    Index latent_dim() const { return factors[0].rows(); }
    Index rank(std::size_t mode) const { return core.extent(mode); }
    Index rank(Subspace k) const { return rank(static_cast<std::size_t>(k)); }
    const FactorMatrix& factor(Subspace k) const { return factors[static_cast<std::size_t>(k) - 1]; }

    /// Throws DimensionError when core, factors and standardizer disagree.
    void check_consistent() const;

    /// Parameters that select training cell (p, e, r): q_k = U_k^T e_k.
    ParameterSet canonical_parameters(Index p, Index e, Index r) const;
};

/// One TensorModel per style, each over `width` latent coordinates.
struct StackedModel {
    std::vector<TensorModel> styles;
    Index width = 0;

    Index style_count() const { return static_cast<Index>(styles.size()); }
    Index latent_dim() const { return style_count() * width; }
    /// Total number of parameters, S times the sum of the subspace ranks.
    Index parameter_count() const;
};

/// Standardize the dataset over all its samples, fold and factorize.
TensorModel fit_vectorized(const LatentDataset& data, const RankSpec& ranks = RankSpec::full(4));

/// Independent vectorized fits of every style block. Requires a style layout.
StackedModel fit_stacked(const LatentDataset& data, const RankSpec& ranks = RankSpec::full(4));

/// Core contracted with the three parameter vectors (length latent rank).
Vector predict_eigenspace(const TensorModel& model, const ParameterSet& params);

/// Prediction in standardized latent coordinates: U_1 times the eigenspace prediction.
Vector predict_standardized(const TensorModel& model, const ParameterSet& params);

/// Prediction in the original latent space.
Vector predict(const TensorModel& model, const ParameterSet& params);

/// Same contract as predict, computed as an explicit index contraction of the
/// core with the rank-1 parameter tensor.
Vector predict_einsum(const TensorModel& model, const ParameterSet& params);

/// Concatenated per-style predictions in style order.
Vector predict_stacked(const StackedModel& model, const std::vector<ParameterSet>& params);

/// Relative Frobenius error of the canonical predictions of every cell of `data`
/// against its codes. Every cell must be a training cell of the model.
double reconstruction_error(const StackedModel& model, const LatentDataset& data);

/// Throws DimensionError unless the parameter lengths match the model ranks.
void check_parameters(const TensorModel& model, const ParameterSet& params);

} // namespace mlm
