#include "mlm/editing.hpp"

#include <string>

#include "mlm/error.hpp"

namespace mlm {

std::string_view to_string(EditMethod m) {
    switch (m) {
    case EditMethod::Tau: return "tau";
    case EditMethod::LinearNormal: return "linear-normal";
    case EditMethod::Pca: return "pca";
    case EditMethod::DirectInterpolation: return "direct-interpolation";
    }
    return "?";
}

Vector edit_linear(const Vector& w, const EditDirection& n, double alpha) {
    if (n.space != EditSpace::Latent) throw InvalidArgument("edit_linear needs a latent-space direction");
    if (w.size() != n.vector.size()) {
        throw DimensionError("edit_linear: code has length " + std::to_string(w.size()) + ", direction has length " +
                             std::to_string(n.vector.size()));
    }
    return w + alpha * n.vector;
}

EditDirection mean_difference_direction(const Matrix& group_a, const Matrix& group_b) {
    if (group_a.cols() == 0 || group_b.cols() == 0) throw InvalidArgument("mean_difference_direction: empty group");
    if (group_a.rows() != group_b.rows()) throw DimensionError("mean_difference_direction: groups differ in dimension");
    Vector d = group_b.rowwise().mean() - group_a.rowwise().mean();
    const double norm = d.norm();
    if (!(norm > 0.0)) throw DataError("mean_difference_direction: group means coincide");
    return EditDirection{EditSpace::Latent, d / norm, EditMethod::LinearNormal};
}

EditDirection rotation_mean_difference(const LatentDataset& data, Rotation from, Rotation to) {
    std::vector<Index> a, b;
    for (std::size_t j = 0; j < data.manifest().size(); ++j) {
        const Rotation r = data.manifest()[j].rotation;
        if (r == from) a.push_back(static_cast<Index>(j));
        if (r == to) b.push_back(static_cast<Index>(j));
    }
    return mean_difference_direction(data.codes()(Eigen::all, a), data.codes()(Eigen::all, b));
}

Matrix principal_directions(const Matrix& codes, Index count) {
    if (codes.cols() < 2) throw InvalidArgument("principal directions need at least two samples");
    if (count < 1 || count > std::min(codes.rows(), codes.cols())) {
        throw InvalidArgument("principal component count " + std::to_string(count) + " out of range");
    }
    const Matrix centered = codes.colwise() - codes.rowwise().mean();
    return left_singular_vectors(centered, count).u;
}

EditDirection pca_direction(const Matrix& codes, Index component, CoordinateRange range) {
    if (range.begin < 0 || range.end > codes.rows() || range.begin >= range.end) {
        throw InvalidArgument("pca_direction: coordinate range [" + std::to_string(range.begin) + ", " +
                              std::to_string(range.end) + ") is invalid for dimension " + std::to_string(codes.rows()));
    }
    if (component < 0 || component >= codes.cols()) {
        throw InvalidArgument("pca_direction: component index " + std::to_string(component) +
                              " must be below the sample count " + std::to_string(codes.cols()));
    }
    const Index width = range.end - range.begin;
    if (component >= width) {
        throw InvalidArgument("pca_direction: component index " + std::to_string(component) +
                              " exceeds the range width " + std::to_string(width));
    }
    const Matrix dirs = principal_directions(codes.middleRows(range.begin, width), component + 1);
    Vector v = Vector::Zero(codes.rows());
    v.segment(range.begin, width) = dirs.col(component);
    return EditDirection{EditSpace::Latent, std::move(v), EditMethod::Pca};
}

void orient(EditDirection& d, const Vector& reference) {
    if (d.vector.dot(reference) < 0.0) d.vector = -d.vector;
}

Vector rotation_shift(const TensorModel& model) {
    const auto left = model.axes.rotation_index(Rotation::Left);
    const auto right = model.axes.rotation_index(Rotation::Right);
    if (!left || !right) throw DataError("rotation edit needs a model with both rotations");
    const Matrix& u = model.factor(Subspace::Rotation).u;
    if (u.cols() < 2) throw DataError("rotation edit needs rotation rank >= 2, model has " + std::to_string(u.cols()));
    return (u.row(static_cast<Index>(*right)) - u.row(static_cast<Index>(*left))).transpose();
}

Vector edit_rotation_tau(const TensorModel& model, const ParameterSet& estimate, double gamma) {
    const Vector m = rotation_shift(model);
    ParameterSet p = estimate;
    check_parameters(model, p);
    p.rotation += gamma * m;
    return predict(model, p);
}

Vector edit_rotation_tau(const StackedModel& model, const std::vector<ParameterSet>& estimate, double gamma) {
    if (estimate.size() != model.styles.size()) throw DimensionError("edit_rotation_tau: one estimate per style required");
    Vector out(model.latent_dim());
    for (Index s = 0; s < model.style_count(); ++s) {
        const auto i = static_cast<std::size_t>(s);
        out.segment(s * model.width, model.width) = edit_rotation_tau(model.styles[i], estimate[i], gamma);
    }
    return out;
}

Vector direct_interpolation(const Vector& w_left, const Vector& w_right, double beta) {
    if (w_left.size() != w_right.size()) throw DimensionError("direct_interpolation: codes differ in length");
    return beta * w_left + (1.0 - beta) * w_right;
}

} // namespace mlm
