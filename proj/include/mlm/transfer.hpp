#pragma once

#include <vector>

#include "mlm/estimation.hpp"
#include "mlm/model.hpp"

namespace mlm {

/// Squared Euclidean distances in standardized latent coordinates.
struct TransferErrors {
    double approx = 0.0;  ///< reconstruction of the source code
    double expr = 0.0;    ///< expression transfer against the target-expression code
    double rot = 0.0;     ///< rotation transfer against the other-rotation code
};

/// Prediction in original coordinates with parameter k replaced by new_q.
Vector transfer(const TensorModel& model, const ParameterSet& params, Subspace k, const Vector& new_q);

/// Same, in standardized coordinates.
Vector transfer_standardized(const TensorModel& model, const ParameterSet& params, Subspace k, const Vector& new_q);

/// A source cell together with the codes its transfers should reproduce.
///
/// The expression target is the next expression on the dataset's expression axis
/// (cyclically); the rotation target is the other rotation.
struct TransferCase {
    CellLabel source;
    Vector y;
    Vector y_expr;
    Vector y_rot;
    std::size_t expr_target = 0;  ///< index into the model's expression axis
    std::size_t rot_target = 0;   ///< index into the model's rotation axis
};

/// One case per cell of `data`. Throws DataError when a target label is missing
/// from the model axes or the dataset has fewer than two rotations or expressions.
std::vector<TransferCase> transfer_cases(const AxisLabels& model_axes, const LatentDataset& data);

/// Errors of one estimated cell. Target parameters are the model's canonical rows
/// of the target expression and rotation. Each style contributes its own
/// standardized squared distance; the sums are returned.
TransferErrors transfer_errors(const StackedModel& model, const TransferCase& c, const std::vector<ParameterSet>& estimate);
TransferErrors transfer_errors(const TensorModel& model, const TransferCase& c, const ParameterSet& estimate);

/// Estimate every case with `cfg` and evaluate its errors, in case order.
std::vector<TransferErrors> evaluate_transfer(const StackedModel& model, const std::vector<TransferCase>& cases,
                                              const AlsConfig& cfg);

/// Per-style ALS estimates for y (one entry for a single model).
std::vector<ParameterSet> estimate_styles(const StackedModel& model, const Vector& y, const AlsConfig& cfg);

} // namespace mlm
