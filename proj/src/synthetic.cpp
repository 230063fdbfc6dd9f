#include "mlm/synthetic.hpp"

#include <cmath>
#include <string>

#include "mlm/error.hpp"

namespace mlm {

namespace {

constexpr double kIntensityStep = 0.6;
constexpr double kNeutralOffset = 0.5;

struct ModelDraw {
    TensorModel model;
    std::optional<Vector> vertex;
    std::optional<Vector> neutral_offset;
};

Shape data_shape(Index n, const SyntheticSpec& spec) { return {n, spec.persons, spec.expressions, spec.rotations}; }

// Expression factor with planted star rows, orthonormalized: X = Q R, so the rows of
// Q are the rows of X mapped by R^{-1}; lines and their common vertex survive the map.
Matrix star_factor(const std::vector<ExpressionLabel>& labels, Index dims, std::mt19937_64& rng, Vector& vertex,
                   Vector& neutral_offset) {
    StarRows star = make_star_rows(labels, dims, 0.0, rng);
    Eigen::HouseholderQR<Matrix> qr(star.rows);
    const Matrix q = qr.householderQ() * Matrix::Identity(star.rows.rows(), dims);
    const Matrix r = q.transpose() * star.rows;  // upper triangular up to rounding
    const Matrix rinv_t = r.transpose().inverse();
    vertex = rinv_t * star.vertex;
    neutral_offset = rinv_t * star.neutral_offset;
    return q;
}

ModelDraw draw_model(Index n, const SyntheticSpec& spec, const AxisLabels& axes, std::mt19937_64& rng) {
    const Shape shape = data_shape(n, spec);
    const std::vector<Index> ranks = spec.core_ranks.resolve(shape);

    ModelDraw out;
    TensorModel& m = out.model;
    m.axes = axes;
    for (std::size_t k = 0; k < 4; ++k) {
        if (k == 2 && spec.star) {
            Vector v, off;
            m.factors[k].u = star_factor(axes.expressions, ranks[k], rng, v, off);
            out.vertex = std::move(v);
            out.neutral_offset = std::move(off);
        } else {
            m.factors[k].u = random_orthonormal(shape[k], ranks[k], rng);
        }
        m.factors[k].singular_values = Vector::Ones(ranks[k]);
    }
    Matrix core = random_gaussian(ranks[0], ranks[1] * ranks[2] * ranks[3], rng);
    m.core = fold(core, 1, Shape(ranks.begin(), ranks.end()));

    // Normalize so the multilinear signal has unit RMS.
    std::vector<FactorMatrix> factors(m.factors.begin(), m.factors.end());
    const DenseTensor signal = reconstruct(m.core, factors);
    const double rms = signal.frobenius_norm() / std::sqrt(static_cast<double>(signal.size()));
    if (rms > 0.0) {
        for (double& c : m.core.data()) c /= rms;
    }

    if (spec.affine) {
        Vector mean = random_gaussian(n, 1, rng).col(0);
        std::uniform_real_distribution<double> scale_dist(0.5, 2.0);
        Vector scale(n);
        for (Index i = 0; i < n; ++i) scale(i) = scale_dist(rng);
        m.standardizer = Standardizer{std::move(mean), std::move(scale), std::vector<bool>(static_cast<std::size_t>(n), false)};
    } else {
        m.standardizer = Standardizer::identity(n);
    }
    return out;
}

} // namespace

void SyntheticSpec::validate() const {
    if (styles) {
        if (styles->styles < 1 || styles->width < 1) throw InvalidArgument("style layout must be positive");
    } else if (latent_dim < 1) {
        throw InvalidArgument("latent dimension must be positive");
    }
    if (heterogeneous_styles && !styles) throw InvalidArgument("heterogeneous styles need a style layout");
    if (persons < 1) throw InvalidArgument("person count must be positive");
    if (expressions < 1 || expressions > 1 + 6 * kIntensityLevels) {
        throw InvalidArgument("expression count must lie in [1, 25]");
    }
    if (rotations < 1 || rotations > 2) throw InvalidArgument("rotation count must be 1 or 2");
    if (!(noise >= 0.0)) throw InvalidArgument("noise level must be non-negative");
    if (!(rotation_shift >= 0.0)) throw InvalidArgument("rotation shift must be non-negative");
    if (rotation_shift > 0.0 && rotations != 2) throw InvalidArgument("a rotation shift needs two rotations");
    if (star) {
        const Index emotions = (expressions - 1 + kIntensityLevels - 1) / kIntensityLevels;
        const Index n = styles ? styles->width : latent_dim;
        const Index rank_e = core_ranks.resolve(Shape{n, persons, expressions, rotations})[2];
        if (expressions < 3) throw InvalidArgument("star structure needs at least two intensities of one emotion");
        if (rank_e < 2 || rank_e > emotions + 1) {
            throw InvalidArgument("star structure needs an expression rank in [2, emotions + 1]");
        }
    }
}

Matrix random_gaussian(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = g(rng);
    return m;
}

Matrix random_orthonormal(Index rows, Index cols, std::mt19937_64& rng) {
    const Matrix g = random_gaussian(rows, cols, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
    normalize_signs(q);
    return q;
}

std::vector<std::string> synthetic_person_ids(Index count) {
    std::vector<std::string> ids;
    const std::size_t width = std::max<std::size_t>(3, std::to_string(count - 1).size());
    for (Index p = 0; p < count; ++p) {
        const std::string digits = std::to_string(p);
        ids.push_back("P" + std::string(width - digits.size(), '0') + digits);
    }
    return ids;
}

StarRows make_star_rows(const std::vector<ExpressionLabel>& labels, Index dims, double noise, std::mt19937_64& rng) {
    StarRows out;
    out.labels = labels;
    out.vertex = random_gaussian(dims, 1, rng).col(0);
    Vector offset = random_gaussian(dims, 1, rng).col(0);
    out.neutral_offset = kNeutralOffset * offset / offset.norm();

    std::vector<Vector> directions(7);
    for (Emotion e : kBasicEmotions) {
        Vector d = random_gaussian(dims, 1, rng).col(0);
        directions[static_cast<std::size_t>(e)] = d / d.norm();
    }
    out.rows.resize(static_cast<Index>(labels.size()), dims);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto& l = labels[i];
        Vector row = l.is_neutral()
                         ? Vector(out.vertex + out.neutral_offset)
                         : Vector(out.vertex + kIntensityStep * l.intensity * directions[static_cast<std::size_t>(l.emotion)]);
        out.rows.row(static_cast<Index>(i)) = row.transpose();
    }
    if (noise > 0.0) out.rows += noise * random_gaussian(out.rows.rows(), dims, rng);
    return out;
}

std::vector<ParameterSet> SyntheticTruth::canonical_parameters(Index p, Index e, Index r) const {
    std::vector<ParameterSet> out;
    for (const auto& m : models) out.push_back(m.canonical_parameters(p, e, r));
    return out;
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);

    AxisLabels axes;
    axes.persons = synthetic_person_ids(spec.persons);
    const auto all_expressions = canonical_expressions();
    axes.expressions.assign(all_expressions.begin(), all_expressions.begin() + spec.expressions);
    for (Index r = 0; r < spec.rotations; ++r) axes.rotations.push_back(static_cast<Rotation>(r));

    const Index n = spec.styles ? spec.styles->styles * spec.styles->width : spec.latent_dim;
    SyntheticTruth truth;
    truth.per_style = spec.heterogeneous_styles;
    if (spec.heterogeneous_styles) {
        truth.style_width = spec.styles->width;
        for (Index s = 0; s < spec.styles->styles; ++s) {
            ModelDraw d = draw_model(spec.styles->width, spec, axes, rng);
            if (s == 0) {
                truth.star_vertex = d.vertex;
                truth.star_neutral_offset = d.neutral_offset;
            }
            truth.models.push_back(std::move(d.model));
        }
    } else {
        ModelDraw d = draw_model(n, spec, axes, rng);
        truth.star_vertex = d.vertex;
        truth.star_neutral_offset = d.neutral_offset;
        truth.models.push_back(std::move(d.model));
    }

    const Index np = spec.persons, ne = spec.expressions, nr = spec.rotations;
    Matrix codes(n, np * ne * nr);
    std::vector<CellLabel> manifest;
    manifest.reserve(static_cast<std::size_t>(codes.cols()));
    Index col = 0;
    for (Index p = 0; p < np; ++p)
        for (Index e = 0; e < ne; ++e)
            for (Index r = 0; r < nr; ++r, ++col) {
                Index row = 0;
                for (const auto& m : truth.models) {
                    const Vector y = predict(m, m.canonical_parameters(p, e, r));
                    codes.col(col).segment(row, y.size()) = y;
                    row += y.size();
                }
                manifest.push_back(CellLabel{axes.persons[static_cast<std::size_t>(p)],
                                             axes.expressions[static_cast<std::size_t>(e)],
                                             axes.rotations[static_cast<std::size_t>(r)]});
            }
    if (spec.rotation_shift > 0.0) {
        Vector shift = random_gaussian(n, 1, rng).col(0);
        shift *= spec.rotation_shift * std::sqrt(static_cast<double>(n)) / shift.norm();
        for (Index j = 0; j < codes.cols(); ++j) {
            if (manifest[static_cast<std::size_t>(j)].rotation == Rotation::Right) codes.col(j) += shift;
        }
        truth.rotation_shift = std::move(shift);
    }
    truth.noiseless = codes;
    if (spec.noise > 0.0) codes += spec.noise * random_gaussian(codes.rows(), codes.cols(), rng);

    return SyntheticData{LatentDataset(std::move(codes), std::move(manifest), spec.styles), std::move(truth)};
}

} // namespace mlm
