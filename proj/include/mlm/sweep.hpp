#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mlm/editing.hpp"
#include "mlm/transfer.hpp"

namespace mlm {

/// Per grid value mean and median of every metric over a set of samples.
struct SweepReport {
    std::string parameter;  ///< name of the swept quantity, e.g. "lambda2" or "gamma"
    std::vector<double> grid;
    std::vector<std::string> metrics;
    std::vector<std::vector<double>> mean;    ///< [grid cell][metric]
    std::vector<std::vector<double>> median;  ///< [grid cell][metric]
    std::size_t samples = 0;
    /// Free-form key/value context (method, seed, split), kept in insertion order.
    std::vector<std::pair<std::string, std::string>> meta;

    /// Grid index with the smallest mean (or median) of `metric`; first on ties.
    std::size_t argmin(std::size_t metric, bool by_median = false) const;
    std::size_t metric_index(std::string_view name) const;

    bool operator==(const SweepReport&) const = default;
};

/// Throws InvalidArgument unless the grid is non-empty, finite and strictly increasing.
void check_grid(const std::vector<double>& grid);

double median(std::vector<double> values);

/// Aggregate raw values[grid cell][sample][metric].
SweepReport summarize(std::string parameter, std::vector<double> grid, std::vector<std::string> metrics,
                      const std::vector<std::vector<std::vector<double>>>& values);

enum class LambdaKind { L1, L2 };

/// Raw transfer errors for every grid value and case. For L2 the swept value is
/// lambda2 with lambda1 = 0; for L1 it is lambda1 with lambda2 = 0. Other settings
/// come from `base`.
std::vector<std::vector<TransferErrors>> lambda_sweep_errors(const StackedModel& model,
                                                              const std::vector<TransferCase>& cases,
                                                              const std::vector<double>& grid, LambdaKind which,
                                                              const AlsConfig& base = {});

/// Mean and median of approx, expr and rot per grid value.
SweepReport sweep_lambdas(const StackedModel& model, const std::vector<TransferCase>& cases,
                          const std::vector<double>& grid, LambdaKind which, const AlsConfig& base = {});

/// Source code and the code the edit should reach.
struct EditPair {
    CellLabel source;
    Vector source_code;
    Vector target;
};

/// Left-rotation cells of `data` paired with their right-rotation counterparts.
std::vector<EditPair> rotation_pairs(const LatentDataset& data);

/// Edited code for pair `i` at strength `s`.
using Editor = std::function<Vector(std::size_t i, double s)>;

double cosine_distance(const Vector& a, const Vector& b);

/// L2 and cosine distance between edited code and target, per strength.
SweepReport sweep_strength(const Editor& editor, const std::vector<EditPair>& pairs, const std::vector<double>& grid,
                           std::string parameter);

/// 0, 0.01, ..., 3.00, built as i / 100 so the baseline markers are exact grid values.
std::vector<double> default_strength_grid();

struct EditComparisonOptions {
    std::vector<double> grid = default_strength_grid();
    Index pca_component = 9;  ///< 0-based: the tenth principal component
    /// Coordinates receiving the PCA shift; empty means all.
    std::optional<CoordinateRange> pca_range;
    AlsConfig als;
};

/// Strength sweeps of the tau, linear-normal and pca editors on the left-to-right
/// rotation pairs of `heldout`; baselines are learned from `train`.
std::vector<SweepReport> compare_edits(const StackedModel& model, const LatentDataset& train, const LatentDataset& heldout,
                                       const EditComparisonOptions& opts = {});

} // namespace mlm
