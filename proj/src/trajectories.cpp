#include "mlm/trajectories.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <string>

#include <Eigen/SVD>

#include "mlm/error.hpp"

namespace mlm {

namespace {

// Projector onto the orthogonal complement of unit vector d.
Matrix complement(const Vector& d) { return Matrix::Identity(d.size(), d.size()) - d * d.transpose(); }

EmotionLine fit_line(Emotion emotion, const std::vector<std::pair<int, Vector>>& points) {
    const Index dims = points.front().second.size();
    const auto n = static_cast<Index>(points.size());
    Matrix x(n, dims);
    for (Index i = 0; i < n; ++i) x.row(i) = points[static_cast<std::size_t>(i)].second.transpose();
    const Vector centroid = x.colwise().mean().transpose();
    const Matrix centered = x.rowwise() - centroid.transpose();

    Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeThinV);
    Vector d = svd.matrixV().col(0);
    if (d.norm() == 0.0 || !d.allFinite()) throw DataError("emotion " + std::string(to_string(emotion)) + ": points coincide");
    d.normalize();
    // Orient from the lowest to the highest intensity.
    if (d.dot(x.row(n - 1).transpose() - x.row(0).transpose()) < 0.0) d = -d;

    EmotionLine line{emotion, centroid, d, {}, {}};
    const Matrix p = complement(d);
    for (const auto& [intensity, v] : points) {
        line.intensities.push_back(intensity);
        line.residuals.push_back((p * (v - centroid)).norm());
    }
    return line;
}

} // namespace

double line_distance_sum(const std::vector<EmotionLine>& lines, const Vector& x) {
    double s = 0.0;
    for (const auto& l : lines) s += (complement(l.direction) * (x - l.point)).squaredNorm();
    return s;
}

TrajectoryFit expression_trajectories(const Matrix& rows, const std::vector<ExpressionLabel>& labels,
                                      const TrajectoryOptions& opts) {
    if (static_cast<std::size_t>(rows.rows()) != labels.size()) {
        throw DimensionError("expression_trajectories: " + std::to_string(rows.rows()) + " rows but " +
                             std::to_string(labels.size()) + " labels");
    }
    Index dims = rows.cols();
    if (opts.truncate) {
        if (*opts.truncate < 1) throw InvalidArgument("truncation dimension must be positive");
        dims = std::min(dims, *opts.truncate);
    }
    const Matrix x = rows.leftCols(dims);

    // Points per emotion in intensity order (std::map keeps both orders deterministic).
    std::map<Emotion, std::map<int, Vector>> groups;
    std::optional<Index> neutral;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        validate(labels[i]);
        const Index row = static_cast<Index>(i);
        if (labels[i].is_neutral()) {
            neutral = row;
            continue;
        }
        auto [it, inserted] = groups[labels[i].emotion].emplace(labels[i].intensity, x.row(row).transpose());
        if (!inserted) throw DataError("expression_trajectories: duplicate label " + labels[i].str());
    }
    if (groups.empty()) throw DataError("expression_trajectories: no emotion rows");

    TrajectoryFit fit;
    fit.dims = dims;
    fit.truncated = dims < rows.cols();
    for (const auto& [emotion, pts] : groups) {
        if (pts.size() < 2) {
            throw DataError("expression_trajectories: emotion " + std::string(to_string(emotion)) +
                            " has fewer than 2 intensity points");
        }
        fit.lines.push_back(fit_line(emotion, {pts.begin(), pts.end()}));
    }

    fit.level_residuals.assign(kIntensityLevels, 0.0);
    std::vector<int> level_counts(kIntensityLevels, 0);
    for (const auto& l : fit.lines) {
        for (std::size_t i = 0; i < l.intensities.size(); ++i) {
            const auto level = static_cast<std::size_t>(l.intensities[i] - 1);
            fit.level_residuals[level] += l.residuals[i] * l.residuals[i];
            ++level_counts[level];
        }
    }
    for (std::size_t i = 0; i < fit.level_residuals.size(); ++i) {
        fit.level_residuals[i] = level_counts[i] ? std::sqrt(fit.level_residuals[i] / level_counts[i]) : 0.0;
    }

    // Normal equations of sum_e ||P_e (x - p_e)||^2.
    Matrix m = Matrix::Zero(dims, dims);
    Vector b = Vector::Zero(dims);
    for (const auto& l : fit.lines) {
        const Matrix p = complement(l.direction);
        m += p;
        b += p * l.point;
    }
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    fit.condition = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
    if (fit.lines.size() > 1 && !(fit.condition <= opts.max_condition)) {
        throw DataError("expression_trajectories: emotion lines are nearly parallel (condition number " +
                        std::to_string(fit.condition) + ")");
    }
    // A single line leaves the system singular; the minimum-norm solution lies on it.
    svd.setThreshold(1e-12);
    fit.origin = svd.solve(b);
    fit.origin_residual = line_distance_sum(fit.lines, fit.origin);

    if (neutral) fit.neutral_distance = (x.row(*neutral).transpose() - fit.origin).norm();
    fit.mean_distance = (x.colwise().mean().transpose() - fit.origin).norm();
    return fit;
}

TrajectoryFit expression_trajectories(const TensorModel& model, const TrajectoryOptions& opts) {
    return expression_trajectories(model.factor(Subspace::Expression).u, model.axes.expressions, opts);
}

} // namespace mlm
