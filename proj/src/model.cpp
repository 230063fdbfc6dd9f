#include "mlm/model.hpp"

#include <cmath>
#include <string>

#include "mlm/error.hpp"

namespace mlm {

namespace {

// Relative threshold below which a coordinate's standard deviation counts as zero.
constexpr double kZeroVariance = 1e-12;

} // namespace

Standardizer Standardizer::fit(const Matrix& codes) {
    const Index n = codes.rows();
    const Index count = codes.cols();
    if (count < 1) throw DimensionError("cannot standardize an empty sample set");
    Standardizer s;
    s.mean.resize(n);
    s.scale.resize(n);
    s.flagged.assign(static_cast<std::size_t>(n), false);
    for (Index i = 0; i < n; ++i) {
        // Shifted accumulation: identical samples give their value back exactly.
        const double pivot = codes(i, 0);
        double acc = 0.0;
        for (Index j = 0; j < count; ++j) acc += codes(i, j) - pivot;
        const double mean = pivot + acc / static_cast<double>(count);
        double ss = 0.0;
        for (Index j = 0; j < count; ++j) {
            const double d = codes(i, j) - mean;
            ss += d * d;
        }
        const double sd = std::sqrt(ss / static_cast<double>(count));
        s.mean(i) = mean;
        if (sd <= kZeroVariance * std::max(1.0, std::abs(mean))) {
            s.scale(i) = 1.0;
            s.flagged[static_cast<std::size_t>(i)] = true;
        } else {
            s.scale(i) = sd;
        }
    }
    return s;
}

Standardizer Standardizer::identity(Index n) {
    return Standardizer{Vector::Zero(n), Vector::Ones(n), std::vector<bool>(static_cast<std::size_t>(n), false)};
}

Vector Standardizer::standardize(const Vector& y) const {
    if (y.size() != size()) {
        throw DimensionError("standardize: vector length " + std::to_string(y.size()) + ", expected " +
                             std::to_string(size()));
    }
    return (y - mean).cwiseQuotient(scale);
}

Vector Standardizer::destandardize(const Vector& y) const {
    if (y.size() != size()) {
        throw DimensionError("destandardize: vector length " + std::to_string(y.size()) + ", expected " +
                             std::to_string(size()));
    }
    return y.cwiseProduct(scale) + mean;
}

Matrix Standardizer::standardize(const Matrix& codes) const {
    if (codes.rows() != size()) {
        throw DimensionError("standardize: matrix has " + std::to_string(codes.rows()) + " rows, expected " +
                             std::to_string(size()));
    }
    return (codes.colwise() - mean).array().colwise() / scale.array();
}

std::string_view to_string(Subspace k) {
    switch (k) {
    case Subspace::Person: return "person";
    case Subspace::Expression: return "expression";
    case Subspace::Rotation: return "rotation";
    }
    return "?";
}

Vector& ParameterSet::operator[](Subspace k) {
    switch (k) {
    case Subspace::Person: return person;
    case Subspace::Expression: return expression;
    case Subspace::Rotation: return rotation;
    }
    throw InvalidArgument("invalid subspace index " + std::to_string(static_cast<int>(k)));
}

const Vector& ParameterSet::operator[](Subspace k) const {
    return const_cast<ParameterSet&>(*this)[k];
}

void TensorModel::check_consistent() const {
    if (core.order() != 4) throw DimensionError("model core must have order 4");
    for (std::size_t k = 0; k < 4; ++k) {
        if (factors[k].cols() != core.shape()[k]) {
            throw DimensionError("factor " + std::to_string(k + 1) + " has " + std::to_string(factors[k].cols()) +
                                 " columns, core extent is " + std::to_string(core.shape()[k]));
        }
        if (factors[k].singular_values.size() != factors[k].cols()) {
            throw DimensionError("factor " + std::to_string(k + 1) + " singular value count mismatch");
        }
    }
    if (standardizer.size() != factors[0].rows() ||
        standardizer.flagged.size() != static_cast<std::size_t>(standardizer.size())) {
        throw DimensionError("standardizer length does not match latent dimension");
    }
    if (!axes.persons.empty() && static_cast<Index>(axes.persons.size()) != factors[1].rows()) {
        throw DimensionError("person labels do not match person factor");
    }
    if (!axes.expressions.empty() && static_cast<Index>(axes.expressions.size()) != factors[2].rows()) {
        throw DimensionError("expression labels do not match expression factor");
    }
    if (!axes.rotations.empty() && static_cast<Index>(axes.rotations.size()) != factors[3].rows()) {
        throw DimensionError("rotation labels do not match rotation factor");
    }
}

ParameterSet TensorModel::canonical_parameters(Index p, Index e, Index r) const {
    auto row = [](const FactorMatrix& f, Index i, const char* what) -> Vector {
        if (i < 0 || i >= f.rows()) throw DimensionError(std::string("canonical ") + what + " index out of range");
        return f.u.row(i).transpose();
    };
    return ParameterSet{row(factors[1], p, "person"), row(factors[2], e, "expression"), row(factors[3], r, "rotation")};
}

Index StackedModel::parameter_count() const {
    Index total = 0;
    for (const auto& m : styles) total += m.rank(Subspace::Person) + m.rank(Subspace::Expression) + m.rank(Subspace::Rotation);
    return total;
}

TensorModel fit_vectorized(const LatentDataset& data, const RankSpec& ranks) {
    TensorModel model;
    model.standardizer = Standardizer::fit(data.codes());
    const Matrix standardized = model.standardizer.standardize(data.codes());

    // Rebuild with standardized columns so the dataset's cell mapping folds them.
    const LatentDataset std_data(standardized, data.manifest());
    HosvdResult h = hosvd(std_data.to_tensor(), ranks);
    model.core = std::move(h.core);
    for (std::size_t k = 0; k < 4; ++k) model.factors[k] = std::move(h.factors[k]);
    model.axes = data.axes();
    return model;
}

StackedModel fit_stacked(const LatentDataset& data, const RankSpec& ranks) {
    if (!data.styles()) throw DimensionError("fit_stacked requires a dataset with a style layout");
    const StyleLayout layout = *data.styles();
    if (layout.styles < 1 || layout.width < 1 || layout.styles * layout.width != data.latent_dim()) {
        throw DimensionError("latent dimension " + std::to_string(data.latent_dim()) + " is not " +
                             std::to_string(layout.styles) + " styles x " + std::to_string(layout.width));
    }
    StackedModel out;
    out.width = layout.width;
    out.styles.reserve(static_cast<std::size_t>(layout.styles));
    for (Index s = 0; s < layout.styles; ++s) {
        out.styles.push_back(fit_vectorized(data.style_slice(s), ranks));
    }
    return out;
}

void check_parameters(const TensorModel& model, const ParameterSet& params) {
    for (Subspace k : kSubspaces) {
        if (params[k].size() != model.rank(k)) {
            throw DimensionError(std::string(to_string(k)) + " parameter has length " +
                                 std::to_string(params[k].size()) + ", model rank is " +
                                 std::to_string(model.rank(k)));
        }
    }
}

Vector predict_eigenspace(const TensorModel& model, const ParameterSet& params) {
    check_parameters(model, params);
    DenseTensor t = mode_product(model.core, params.person, 2);
    t = mode_product(t, params.expression, 3);
    t = mode_product(t, params.rotation, 4);
    return Eigen::Map<const Vector>(t.data().data(), t.size());
}

Vector predict_standardized(const TensorModel& model, const ParameterSet& params) {
    return model.factors[0].u * predict_eigenspace(model, params);
}

Vector predict(const TensorModel& model, const ParameterSet& params) {
    return model.standardizer.destandardize(predict_standardized(model, params));
}

Vector predict_einsum(const TensorModel& model, const ParameterSet& params) {
    check_parameters(model, params);
    const Index nl = model.rank(1), np = model.rank(2), ne = model.rank(3), nr = model.rank(4);
    const auto& c = model.core.data();
    Vector y = Vector::Zero(nl);
    // Y^mu = C^{mu nu rho lambda} Q_{nu rho lambda}, Q = q2 (x) q3 (x) q4
    for (Index mu = 0; mu < nl; ++mu) {
        double acc = 0.0;
        for (Index nu = 0; nu < np; ++nu) {
            for (Index rho = 0; rho < ne; ++rho) {
                for (Index lam = 0; lam < nr; ++lam) {
                    const double q = params.person(nu) * params.expression(rho) * params.rotation(lam);
                    acc += c[static_cast<std::size_t>(((mu * np + nu) * ne + rho) * nr + lam)] * q;
                }
            }
        }
        y(mu) = acc;
    }
    return model.standardizer.destandardize(model.factors[0].u * y);
}

Vector predict_stacked(const StackedModel& model, const std::vector<ParameterSet>& params) {
    if (static_cast<Index>(params.size()) != model.style_count()) {
        throw DimensionError("predict_stacked: got " + std::to_string(params.size()) + " parameter sets for " +
                             std::to_string(model.style_count()) + " styles");
    }
    Vector out(model.latent_dim());
    for (Index s = 0; s < model.style_count(); ++s) {
        out.segment(s * model.width, model.width) = predict(model.styles[static_cast<std::size_t>(s)], params[static_cast<std::size_t>(s)]);
    }
    return out;
}

double reconstruction_error(const StackedModel& model, const LatentDataset& data) {
    if (model.styles.empty()) throw InvalidArgument("reconstruction_error: empty model");
    if (data.latent_dim() != model.latent_dim()) {
        throw DimensionError("reconstruction_error: dataset has " + std::to_string(data.latent_dim()) +
                             " latent coordinates, model expects " + std::to_string(model.latent_dim()));
    }
    const AxisLabels& axes = model.styles.front().axes;
    double err = 0.0;
    for (std::size_t c = 0; c < data.manifest().size(); ++c) {
        const CellLabel& cell = data.manifest()[c];
        const auto p = axes.person_index(cell.person);
        const auto e = axes.expression_index(cell.expression);
        const auto r = axes.rotation_index(cell.rotation);
        if (!p || !e || !r) throw DataError("reconstruction_error: cell " + cell.str() + " is not a training cell");
        std::vector<ParameterSet> params;
        for (const auto& m : model.styles) {
            params.push_back(m.canonical_parameters(static_cast<Index>(*p), static_cast<Index>(*e), static_cast<Index>(*r)));
        }
        err += (predict_stacked(model, params) - data.codes().col(static_cast<Index>(c))).squaredNorm();
    }
    const double total = data.codes().squaredNorm();
    return total > 0.0 ? std::sqrt(err / total) : std::sqrt(err);
}

} // namespace mlm
