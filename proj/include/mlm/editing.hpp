#pragma once

#include <string_view>
#include <vector>

#include "mlm/dataset.hpp"
#include "mlm/model.hpp"

namespace mlm {

/// Default strengths used by the strength sweeps of the two latent-space baselines.
inline constexpr double kDefaultLinearStrength = 2.77;
inline constexpr double kDefaultPcaStrength = 1.66;

enum class EditSpace { Latent, Rotation };
enum class EditMethod { Tau, LinearNormal, Pca, DirectInterpolation };

std::string_view to_string(EditMethod m);

struct EditDirection {
    EditSpace space = EditSpace::Latent;
    Vector vector;
    EditMethod method = EditMethod::LinearNormal;
};

/// w + alpha n for a latent-space direction.
Vector edit_linear(const Vector& w, const EditDirection& n, double alpha);

/// Unit vector along mean(group_b) - mean(group_a); groups are columns of latent codes.
EditDirection mean_difference_direction(const Matrix& group_a, const Matrix& group_b);

/// Mean-difference direction from rotation `from` to rotation `to` over all cells of `data`.
EditDirection rotation_mean_difference(const LatentDataset& data, Rotation from, Rotation to);

/// Half-open range of latent coordinates [begin, end).
struct CoordinateRange {
    Index begin = 0;
    Index end = 0;
};

/// Unit principal direction `component` (0-based, by decreasing variance) of the
/// centered codes restricted to `range`, zero outside it. The sign makes the
/// largest-magnitude entry positive.
EditDirection pca_direction(const Matrix& codes, Index component, CoordinateRange range);

/// Leading `count` principal directions over the full coordinate range, as columns.
Matrix principal_directions(const Matrix& codes, Index count);

/// Flip `d` if it points away from `reference`.
void orient(EditDirection& d, const Vector& reference);

/// Rotation parameter shift m = u_right - u_left, the difference of the two rows of U_4.
Vector rotation_shift(const TensorModel& model);

/// Prediction (original coordinates) with the rotation vector moved by gamma * m.
Vector edit_rotation_tau(const TensorModel& model, const ParameterSet& estimate, double gamma);

/// Per-style rotation edit, concatenated.
Vector edit_rotation_tau(const StackedModel& model, const std::vector<ParameterSet>& estimate, double gamma);

/// beta w_left + (1 - beta) w_right
Vector direct_interpolation(const Vector& w_left, const Vector& w_right, double beta);

} // namespace mlm
