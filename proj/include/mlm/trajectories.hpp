#pragma once

#include <optional>
#include <vector>

#include "mlm/model.hpp"

namespace mlm {

/// Total-least-squares line through the intensity points of one emotion.
struct EmotionLine {
    Emotion emotion = Emotion::Anger;
    Vector point;                 ///< centroid of the points
    Vector direction;             ///< unit, oriented from low to high intensity
    std::vector<int> intensities;
    std::vector<double> residuals;  ///< distance of each point to the line, same order as intensities
};

struct TrajectoryFit {
    Index dims = 0;
    bool truncated = false;
    std::vector<EmotionLine> lines;
    /// RMS over emotions of the point-to-line distance, for intensity levels 1..4.
    std::vector<double> level_residuals;
    Vector origin;                ///< least-squares intersection of all lines
    double origin_residual = 0.0;  ///< summed squared distances from origin to the lines
    double condition = 0.0;       ///< condition number of the intersection system
    std::optional<double> neutral_distance;
    double mean_distance = 0.0;   ///< distance from origin to the mean expression coordinate
};

struct TrajectoryOptions {
    /// Keep only the first `truncate` coordinates before fitting (e.g. 3).
    std::optional<Index> truncate;
    /// Intersection systems with more than one line and a larger condition number are rejected.
    double max_condition = 1e12;
};

/// Fit intensity lines to labelled expression coordinates (one row per label) and
/// intersect them.
TrajectoryFit expression_trajectories(const Matrix& rows, const std::vector<ExpressionLabel>& labels,
                                      const TrajectoryOptions& opts = {});

/// Same for the rows of the model's expression factor.
TrajectoryFit expression_trajectories(const TensorModel& model, const TrajectoryOptions& opts = {});

/// Sum of squared distances from x to the lines.
double line_distance_sum(const std::vector<EmotionLine>& lines, const Vector& x);

} // namespace mlm
