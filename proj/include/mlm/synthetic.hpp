#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "mlm/dataset.hpp"
#include "mlm/model.hpp"

namespace mlm {

/// Parameters of a synthetic latent dataset drawn from known multilinear models.
struct SyntheticSpec {
    Index latent_dim = 64;                 ///< N; ignored when `styles` is set
    std::optional<StyleLayout> styles;     ///< N = S * L when present
    Index persons = 10;
    Index expressions = 25;                ///< first E of the canonical expression list
    Index rotations = 2;
    /// Ground-truth core ranks (latent, person, expression, rotation); empty entries mean full.
    RankSpec core_ranks = RankSpec::full(4);
    double noise = 0.0;                    ///< Gaussian noise sigma added to every code
    /// Plant collinear intensity trajectories that meet in a common vertex in the
    /// expression factor.
    bool star = false;
    /// With a style layout: draw an independent ground-truth model per style.
    bool heterogeneous_styles = false;
    /// Add a random per-coordinate offset and scale on top of the multilinear signal.
    bool affine = true;
    /// RMS per coordinate of a fixed random shift added to every right-rotation code;
    /// gives the rotation change a component shared by all persons and expressions.
    double rotation_shift = 0.0;
    std::uint64_t seed = 42;

    void validate() const;
};

/// Rows of an expression subspace with planted star structure.
struct StarRows {
    Matrix rows;                              ///< expressions x dims, canonical expression order
    std::vector<ExpressionLabel> labels;
    Vector vertex;                            ///< common point of all emotion lines
    Vector neutral_offset;                    ///< neutral row minus vertex
};

/// Build star rows: each emotion e gets points vertex + t_i d_e for intensities i,
/// the neutral row is vertex + offset, and every row receives Gaussian noise.
StarRows make_star_rows(const std::vector<ExpressionLabel>& labels, Index dims, double noise, std::mt19937_64& rng);

struct SyntheticTruth {
    /// One model for the whole code, or one per style when styles are heterogeneous.
    std::vector<TensorModel> models;
    bool per_style = false;
    Index style_width = 0;
    Matrix noiseless;                          ///< codes before noise, same column order as the dataset
    Vector rotation_shift;                     ///< planted right-rotation shift, empty when not requested
    /// For star data: vertex and neutral offset in the coordinates of the expression factor rows.
    std::optional<Vector> star_vertex;
    std::optional<Vector> star_neutral_offset;

    /// Ground-truth parameters of cell (p, e, r), per model.
    std::vector<ParameterSet> canonical_parameters(Index p, Index e, Index r) const;
};

struct SyntheticData {
    LatentDataset dataset;
    SyntheticTruth truth;
};

/// Pure function of the spec, seed included.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Random matrix with orthonormal columns, sign-normalized.
Matrix random_orthonormal(Index rows, Index cols, std::mt19937_64& rng);

/// Matrix of independent standard normal draws, filled column by column.
Matrix random_gaussian(Index rows, Index cols, std::mt19937_64& rng);

/// Zero-padded person ids P000, P001, ...
std::vector<std::string> synthetic_person_ids(Index count);

} // namespace mlm
