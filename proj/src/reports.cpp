#include "mlm/reports.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "binary_io.hpp"
#include "mlm/error.hpp"

namespace mlm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, char sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

Vector to_vector(const std::vector<double>& row, std::size_t from, std::size_t count) {
    Vector v(static_cast<Index>(count));
    for (std::size_t i = 0; i < count; ++i) v(static_cast<Index>(i)) = row[from + i];
    return v;
}

std::size_t to_size(double v, const std::string& what) {
    if (!(v >= 0.0) || v != std::floor(v)) throw FormatError(what + ": expected a non-negative integer field");
    return static_cast<std::size_t>(v);
}

} // namespace

const std::string& TextReport::meta_value(std::string_view key) const {
    for (const auto& [k, v] : meta) {
        if (k == key) return v;
    }
    throw FormatError(kind + " report: missing meta entry '" + std::string(key) + "'");
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(std::string_view s, const std::string& context) {
    if (s == "nan") return kNaN;
    const std::string tmp(s);
    char* end = nullptr;
    const double v = std::strtod(tmp.c_str(), &end);
    if (tmp.empty() || end != tmp.c_str() + tmp.size()) throw FormatError(context + ": malformed number '" + tmp + "'");
    return v;
}

std::string format_report(const TextReport& r) {
    std::ostringstream os;
    os << "# " << r.kind << ' ' << r.version << '\n';
    for (const auto& [k, v] : r.meta) {
        if (k.find_first_of(" \n") != std::string::npos || v.find('\n') != std::string::npos) {
            throw InvalidArgument("report meta entries must be single tokens / single lines");
        }
        os << "# meta " << k << ' ' << v << '\n';
    }
    os << "# columns " << join(r.columns, ',') << '\n';
    const std::size_t width = r.columns.size() - (r.labelled ? 1 : 0);
    if (r.labelled && r.labels.size() != r.rows.size()) throw DimensionError("report: one label per row required");
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        if (r.rows[i].size() != width) throw DimensionError("report: row width does not match the columns");
        std::vector<std::string> fields;
        if (r.labelled) {
            if (r.labels[i].find_first_of(",\n#") != std::string::npos) throw InvalidArgument("report label contains a delimiter");
            fields.push_back(r.labels[i]);
        }
        for (double v : r.rows[i]) fields.push_back(format_number(v));
        os << join(fields, ',') << '\n';
    }
    std::string text = os.str();
    char crc[16];
    std::snprintf(crc, sizeof crc, "%08x", detail::crc32(text));
    return text + "# crc32 " + crc + "\n";
}

TextReport parse_report(std::string_view text, std::string_view expected_kind, const std::string& what) {
    TextReport r;
    bool saw_columns = false, saw_crc = false;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(pos, end - pos);
        const std::size_t line_start = pos;
        pos = end + 1;
        ++line_no;
        const std::string ctx = what + ":" + std::to_string(line_no);
        if (saw_crc) {
            if (!line.empty()) throw FormatError(ctx + ": content after checksum line");
            continue;
        }
        if (line_no == 1) {
            const auto parts = split(line, ' ');
            if (parts.size() != 3 || parts[0] != "#") throw FormatError(ctx + ": missing report header");
            r.kind = std::string(parts[1]);
            if (r.kind != expected_kind) {
                throw FormatError(ctx + ": expected a '" + std::string(expected_kind) + "' report, found '" + r.kind + "'");
            }
            r.version = static_cast<int>(parse_double(parts[2], ctx));
            if (r.version != 1) throw FormatError(ctx + ": unsupported report version " + std::string(parts[2]));
            continue;
        }
        if (line.starts_with("# meta ")) {
            const std::string_view body = line.substr(7);
            const std::size_t sp = body.find(' ');
            if (sp == std::string_view::npos) throw FormatError(ctx + ": malformed meta line");
            r.meta.emplace_back(std::string(body.substr(0, sp)), std::string(body.substr(sp + 1)));
        } else if (line.starts_with("# columns ")) {
            for (auto c : split(line.substr(10), ',')) r.columns.emplace_back(c);
            r.labelled = !r.columns.empty() && r.columns.front() == "label";
            saw_columns = true;
        } else if (line.starts_with("# crc32 ")) {
            const std::string_view hex = line.substr(8);
            std::uint32_t stored = 0;
            auto [ptr, ec] = std::from_chars(hex.data(), hex.data() + hex.size(), stored, 16);
            if (ec != std::errc() || ptr != hex.data() + hex.size()) throw FormatError(ctx + ": malformed checksum line");
            if (detail::crc32(text.substr(0, line_start)) != stored) throw FormatError(ctx + ": report checksum mismatch");
            saw_crc = true;
        } else if (line.starts_with("#")) {
            continue;
        } else if (!line.empty()) {
            if (!saw_columns) throw FormatError(ctx + ": data row before column header");
            auto fields = split(line, ',');
            if (fields.size() != r.columns.size()) throw FormatError(ctx + ": expected " + std::to_string(r.columns.size()) + " fields");
            std::size_t first = 0;
            if (r.labelled) {
                r.labels.emplace_back(fields[0]);
                first = 1;
            }
            auto& row = r.rows.emplace_back();
            for (std::size_t i = first; i < fields.size(); ++i) row.push_back(parse_double(fields[i], ctx));
        }
    }
    if (!saw_crc) throw FormatError(what + ": missing checksum line (truncated report)");
    if (!saw_columns) throw FormatError(what + ": missing column header");
    return r;
}

void save_report(const TextReport& r, const std::filesystem::path& path) { detail::write_file_atomic(path, format_report(r)); }

TextReport load_report(const std::filesystem::path& path, std::string_view expected_kind) {
    return parse_report(detail::read_text_file(path), expected_kind, path.string());
}

TextReport to_report(const SweepReport& s) {
    TextReport r;
    r.kind = "sweep-report";
    r.meta = {{"parameter", s.parameter}, {"samples", std::to_string(s.samples)}};
    for (const auto& kv : s.meta) r.meta.push_back(kv);
    for (std::size_t m = 0; m < s.metrics.size(); ++m) {
        r.meta.emplace_back("argmin_mean_" + s.metrics[m], format_number(s.grid[s.argmin(m)]));
        r.meta.emplace_back("argmin_median_" + s.metrics[m], format_number(s.grid[s.argmin(m, true)]));
    }
    r.columns.push_back(s.parameter);
    for (const auto& m : s.metrics) {
        r.columns.push_back(m + "_mean");
        r.columns.push_back(m + "_median");
    }
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
        auto& row = r.rows.emplace_back();
        row.push_back(s.grid[i]);
        for (std::size_t m = 0; m < s.metrics.size(); ++m) {
            row.push_back(s.mean[i][m]);
            row.push_back(s.median[i][m]);
        }
    }
    return r;
}

SweepReport sweep_from_report(const TextReport& r) {
    SweepReport s;
    s.parameter = r.meta_value("parameter");
    s.samples = static_cast<std::size_t>(std::stoull(r.meta_value("samples")));
    for (const auto& [k, v] : r.meta) {
        if (k != "parameter" && k != "samples" && !k.starts_with("argmin_")) s.meta.emplace_back(k, v);
    }
    if (r.columns.size() < 3 || (r.columns.size() - 1) % 2 != 0) throw FormatError("sweep report: unexpected columns");
    for (std::size_t c = 1; c < r.columns.size(); c += 2) {
        const std::string& name = r.columns[c];
        if (!name.ends_with("_mean")) throw FormatError("sweep report: unexpected column " + name);
        s.metrics.push_back(name.substr(0, name.size() - 5));
    }
    for (const auto& row : r.rows) {
        s.grid.push_back(row[0]);
        auto& mean = s.mean.emplace_back();
        auto& med = s.median.emplace_back();
        for (std::size_t m = 0; m < s.metrics.size(); ++m) {
            mean.push_back(row[1 + 2 * m]);
            med.push_back(row[2 + 2 * m]);
        }
    }
    return s;
}

// Trajectory rows: record, emotion, intensity, value, coordinates. Records:
// 0 origin, 1 line point, 2 line direction, 3 point residual, 4 level residual.
TextReport to_report(const TrajectoryFit& f) {
    TextReport r;
    r.kind = "trajectory-fit";
    r.meta = {{"dims", std::to_string(f.dims)},
              {"truncated", f.truncated ? "1" : "0"},
              {"origin_residual", format_number(f.origin_residual)},
              {"condition", format_number(f.condition)},
              {"neutral_distance", f.neutral_distance ? format_number(*f.neutral_distance) : "none"},
              {"mean_distance", format_number(f.mean_distance)}};
    r.columns = {"record", "emotion", "intensity", "value"};
    for (Index i = 0; i < f.dims; ++i) r.columns.push_back("x" + std::to_string(i));
    const auto dims = static_cast<std::size_t>(f.dims);
    auto row = [&](double record, double emotion, double intensity, double value, const Vector* x) {
        std::vector<double> v{record, emotion, intensity, value};
        for (std::size_t i = 0; i < dims; ++i) v.push_back(x ? (*x)(static_cast<Index>(i)) : kNaN);
        r.rows.push_back(std::move(v));
    };
    row(0, kNaN, kNaN, kNaN, &f.origin);
    for (const auto& l : f.lines) {
        const double e = static_cast<double>(l.emotion);
        row(1, e, kNaN, kNaN, &l.point);
        row(2, e, kNaN, kNaN, &l.direction);
        for (std::size_t i = 0; i < l.intensities.size(); ++i) row(3, e, l.intensities[i], l.residuals[i], nullptr);
    }
    for (std::size_t i = 0; i < f.level_residuals.size(); ++i) row(4, kNaN, static_cast<double>(i + 1), f.level_residuals[i], nullptr);
    return r;
}

TrajectoryFit trajectory_from_report(const TextReport& r) {
    const std::string what = "trajectory report";
    TrajectoryFit f;
    f.dims = static_cast<Index>(std::stoll(r.meta_value("dims")));
    f.truncated = r.meta_value("truncated") == "1";
    f.origin_residual = parse_double(r.meta_value("origin_residual"), what);
    f.condition = parse_double(r.meta_value("condition"), what);
    if (r.meta_value("neutral_distance") != "none") f.neutral_distance = parse_double(r.meta_value("neutral_distance"), what);
    f.mean_distance = parse_double(r.meta_value("mean_distance"), what);
    const auto dims = static_cast<std::size_t>(f.dims);
    if (r.columns.size() != 4 + dims) throw FormatError(what + ": column count does not match dims");
    for (const auto& row : r.rows) {
        const auto record = to_size(row[0], what);
        switch (record) {
        case 0: f.origin = to_vector(row, 4, dims); break;
        case 1: {
            EmotionLine l;
            l.emotion = static_cast<Emotion>(to_size(row[1], what));
            l.point = to_vector(row, 4, dims);
            f.lines.push_back(std::move(l));
            break;
        }
        case 2:
            if (f.lines.empty()) throw FormatError(what + ": direction before line point");
            f.lines.back().direction = to_vector(row, 4, dims);
            break;
        case 3:
            if (f.lines.empty()) throw FormatError(what + ": residual before line point");
            f.lines.back().intensities.push_back(static_cast<int>(to_size(row[2], what)));
            f.lines.back().residuals.push_back(row[3]);
            break;
        case 4: f.level_residuals.push_back(row[3]); break;
        default: throw FormatError(what + ": unknown record type");
        }
    }
    return f;
}

// Estimate rows: record (0 parameter, 1 objective, 2 status), style, a, b, value.
// Parameters: a = subspace, b = component. Objective: a = iteration. Status:
// a = iterations, b = converged, value = diverged.
TextReport estimate_report(const std::vector<EstimationResult>& results) {
    TextReport r;
    r.kind = "estimate";
    r.meta = {{"styles", std::to_string(results.size())}};
    r.columns = {"record", "style", "a", "b", "value"};
    for (std::size_t s = 0; s < results.size(); ++s) {
        const auto& res = results[s];
        const double style = static_cast<double>(s);
        r.rows.push_back({2, style, static_cast<double>(res.iterations), res.converged ? 1.0 : 0.0, res.diverged ? 1.0 : 0.0});
        for (Subspace k : kSubspaces) {
            const Vector& q = res.params[k];
            for (Index i = 0; i < q.size(); ++i) r.rows.push_back({0, style, static_cast<double>(k), static_cast<double>(i), q(i)});
        }
        for (std::size_t i = 0; i < res.objective_trace.size(); ++i) {
            r.rows.push_back({1, style, static_cast<double>(i), kNaN, res.objective_trace[i]});
        }
    }
    return r;
}

std::vector<EstimationResult> estimates_from_report(const TextReport& r) {
    const std::string what = "estimate report";
    std::vector<EstimationResult> out(static_cast<std::size_t>(std::stoull(r.meta_value("styles"))));
    std::vector<std::array<std::vector<double>, 3>> params(out.size());
    for (const auto& row : r.rows) {
        if (row.size() != 5) throw FormatError(what + ": bad row width");
        const auto s = to_size(row[1], what);
        if (s >= out.size()) throw FormatError(what + ": style index out of range");
        switch (to_size(row[0], what)) {
        case 0: {
            const auto k = to_size(row[2], what);
            if (k < 2 || k > 4 || to_size(row[3], what) != params[s][k - 2].size()) throw FormatError(what + ": bad parameter row");
            params[s][k - 2].push_back(row[4]);
            break;
        }
        case 1: out[s].objective_trace.push_back(row[4]); break;
        case 2:
            out[s].iterations = static_cast<int>(to_size(row[2], what));
            out[s].converged = row[3] != 0.0;
            out[s].diverged = row[4] != 0.0;
            break;
        default: throw FormatError(what + ": unknown record type");
        }
    }
    for (std::size_t s = 0; s < out.size(); ++s) {
        for (Subspace k : kSubspaces) {
            const auto& v = params[s][static_cast<std::size_t>(k) - 2];
            out[s].params[k] = Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
        }
    }
    return out;
}

TextReport transfer_report(const std::vector<TransferCase>& cases, const std::vector<TransferErrors>& errors) {
    if (cases.size() != errors.size()) throw DimensionError("transfer_report: one error record per case required");
    TextReport r;
    r.kind = "transfer-errors";
    r.meta = {{"cells", std::to_string(cases.size())}};
    r.columns = {"label", "approx", "expr", "rot"};
    r.labelled = true;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto& c = cases[i].source;
        r.labels.push_back(c.person + "/" + c.expression.str() + "/" + std::string(to_string(c.rotation)));
        r.rows.push_back({errors[i].approx, errors[i].expr, errors[i].rot});
    }
    return r;
}

TextReport energy_report(const StackedModel& model) {
    TextReport r;
    r.kind = "mode-energy";
    r.meta = {{"styles", std::to_string(model.styles.size())}};
    r.columns = {"style", "mode", "index", "singular_value", "cumulative_energy"};
    for (std::size_t s = 0; s < model.styles.size(); ++s) {
        const auto& factors = model.styles[s].factors;
        const std::vector<Vector> energies = mode_energy(std::vector<FactorMatrix>(factors.begin(), factors.end()));
        for (std::size_t k = 0; k < energies.size(); ++k) {
            for (Index i = 0; i < energies[k].size(); ++i) {
                r.rows.push_back({static_cast<double>(s), static_cast<double>(k + 1), static_cast<double>(i + 1),
                                  factors[k].singular_values(i), energies[k](i)});
            }
        }
    }
    return r;
}

} // namespace mlm
