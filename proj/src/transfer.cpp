#include "mlm/transfer.hpp"

#include <string>

#include "mlm/error.hpp"

namespace mlm {

namespace {

ParameterSet replaced(const TensorModel& model, const ParameterSet& params, Subspace k, const Vector& new_q) {
    if (new_q.size() != model.rank(k)) {
        throw DimensionError("transfer: new " + std::string(to_string(k)) + " vector has length " +
                             std::to_string(new_q.size()) + ", subspace rank is " + std::to_string(model.rank(k)));
    }
    ParameterSet p = params;
    p[k] = new_q;
    return p;
}

Vector canonical_row(const TensorModel& model, Subspace k, std::size_t index) {
    return model.factor(k).u.row(static_cast<Index>(index)).transpose();
}

} // namespace

Vector transfer(const TensorModel& model, const ParameterSet& params, Subspace k, const Vector& new_q) {
    return predict(model, replaced(model, params, k, new_q));
}

Vector transfer_standardized(const TensorModel& model, const ParameterSet& params, Subspace k, const Vector& new_q) {
    return predict_standardized(model, replaced(model, params, k, new_q));
}

std::vector<TransferCase> transfer_cases(const AxisLabels& model_axes, const LatentDataset& data) {
    const auto& axes = data.axes();
    if (axes.rotations.size() != 2) throw DataError("transfer cases need both rotations in the dataset");
    if (axes.expressions.size() < 2) throw DataError("transfer cases need at least two expressions in the dataset");

    std::vector<TransferCase> out;
    const auto ne = axes.expressions.size();
    for (Index p = 0; p < data.persons(); ++p)
        for (std::size_t e = 0; e < ne; ++e)
            for (std::size_t r = 0; r < 2; ++r) {
                const std::size_t e2 = (e + 1) % ne;
                const std::size_t r2 = 1 - r;
                const auto expr_target = model_axes.expression_index(axes.expressions[e2]);
                const auto rot_target = model_axes.rotation_index(axes.rotations[r2]);
                CellLabel source{axes.persons[static_cast<std::size_t>(p)], axes.expressions[e], axes.rotations[r]};
                if (!expr_target) {
                    throw DataError("missing target cell for " + source.str() + ": model has no expression " +
                                    axes.expressions[e2].str());
                }
                if (!rot_target) {
                    throw DataError("missing target cell for " + source.str() + ": model has no rotation " +
                                    std::string(to_string(axes.rotations[r2])));
                }
                const auto ei = static_cast<Index>(e), e2i = static_cast<Index>(e2);
                const auto ri = static_cast<Index>(r), r2i = static_cast<Index>(r2);
                out.push_back(TransferCase{std::move(source), data.code(p, ei, ri), data.code(p, e2i, ri),
                                           data.code(p, ei, r2i), *expr_target, *rot_target});
            }
    return out;
}

TransferErrors transfer_errors(const StackedModel& model, const TransferCase& c, const std::vector<ParameterSet>& estimate) {
    if (estimate.size() != model.styles.size()) throw DimensionError("transfer_errors: one estimate per style required");
    for (const Vector* v : {&c.y, &c.y_expr, &c.y_rot}) {
        if (v->size() != model.latent_dim()) throw DimensionError("transfer_errors: code length does not match the model");
    }
    TransferErrors err;
    for (Index s = 0; s < model.style_count(); ++s) {
        const TensorModel& m = model.styles[static_cast<std::size_t>(s)];
        const ParameterSet& q = estimate[static_cast<std::size_t>(s)];
        if (c.expr_target >= m.axes.expressions.size() || c.rot_target >= m.axes.rotations.size()) {
            throw DataError("transfer_errors: target index outside the model axes for " + c.source.str());
        }
        const auto block = [&](const Vector& y) { return m.standardizer.standardize(Vector(y.segment(s * model.width, model.width))); };
        err.approx += (predict_standardized(m, q) - block(c.y)).squaredNorm();
        err.expr += (transfer_standardized(m, q, Subspace::Expression, canonical_row(m, Subspace::Expression, c.expr_target)) -
                     block(c.y_expr))
                        .squaredNorm();
        err.rot += (transfer_standardized(m, q, Subspace::Rotation, canonical_row(m, Subspace::Rotation, c.rot_target)) -
                    block(c.y_rot))
                       .squaredNorm();
    }
    return err;
}

TransferErrors transfer_errors(const TensorModel& model, const TransferCase& c, const ParameterSet& estimate) {
    return transfer_errors(StackedModel{{model}, model.latent_dim()}, c, {estimate});
}

std::vector<ParameterSet> estimate_styles(const StackedModel& model, const Vector& y, const AlsConfig& cfg) {
    std::vector<ParameterSet> out;
    for (auto& r : als_estimate_stacked(model, y, cfg)) {
        if (r.diverged) throw ConvergenceError("ALS objective increased during estimation");
        out.push_back(std::move(r.params));
    }
    return out;
}

std::vector<TransferErrors> evaluate_transfer(const StackedModel& model, const std::vector<TransferCase>& cases,
                                              const AlsConfig& cfg) {
    std::vector<TransferErrors> out;
    out.reserve(cases.size());
    for (const auto& c : cases) out.push_back(transfer_errors(model, c, estimate_styles(model, c.y, cfg)));
    return out;
}

} // namespace mlm
