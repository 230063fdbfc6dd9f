#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mlm/estimation.hpp"
#include "mlm/sweep.hpp"
#include "mlm/trajectories.hpp"
#include "mlm/transfer.hpp"

namespace mlm {

/**
 * Comma-separated numeric table with a commented header:
 *
 *     # <kind> <version>
 *     # meta <key> <value>
 *     # columns <name>,<name>,...
 *     <row>
 *     # crc32 <8 hex digits over all preceding bytes>
 *
 * Numbers are printed with 17 significant digits, so values survive a round trip
 * bit for bit. When `labelled` is set the first column holds a text label.
 */
struct TextReport {
    std::string kind;
    int version = 1;
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::string> columns;
    bool labelled = false;
    std::vector<std::string> labels;
    std::vector<std::vector<double>> rows;

    const std::string& meta_value(std::string_view key) const;

    bool operator==(const TextReport&) const = default;
};

std::string format_number(double v);
double parse_double(std::string_view s, const std::string& context);

std::string format_report(const TextReport& r);
TextReport parse_report(std::string_view text, std::string_view expected_kind, const std::string& what);

void save_report(const TextReport& r, const std::filesystem::path& path);
TextReport load_report(const std::filesystem::path& path, std::string_view expected_kind);

TextReport to_report(const SweepReport& s);
SweepReport sweep_from_report(const TextReport& r);

TextReport to_report(const TrajectoryFit& f);
TrajectoryFit trajectory_from_report(const TextReport& r);

/// Estimated parameters and objective trace of every style.
TextReport estimate_report(const std::vector<EstimationResult>& results);
std::vector<EstimationResult> estimates_from_report(const TextReport& r);

/// One row per cell: label, approx, expr, rot.
TextReport transfer_report(const std::vector<TransferCase>& cases, const std::vector<TransferErrors>& errors);

/// Mode energy table: one row per (style, mode, index) with the singular value and
/// cumulative energy.
TextReport energy_report(const StackedModel& model);

} // namespace mlm
