#include "mlm/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mlm/error.hpp"
#include "mlm/reports.hpp"

namespace mlm {

std::size_t SweepReport::argmin(std::size_t metric, bool by_median) const {
    const auto& table = by_median ? median : mean;
    if (table.empty() || metric >= metrics.size()) throw InvalidArgument("argmin: empty report or unknown metric");
    std::size_t best = 0;
    for (std::size_t i = 1; i < table.size(); ++i) {
        if (table[i][metric] < table[best][metric]) best = i;
    }
    return best;
}

std::size_t SweepReport::metric_index(std::string_view name) const {
    for (std::size_t i = 0; i < metrics.size(); ++i) {
        if (metrics[i] == name) return i;
    }
    throw InvalidArgument("report has no metric '" + std::string(name) + "'");
}

void check_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw InvalidArgument("sweep grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!std::isfinite(grid[i])) throw InvalidArgument("sweep grid contains a non-finite value");
        if (i > 0 && !(grid[i] > grid[i - 1])) throw InvalidArgument("sweep grid must be strictly increasing");
    }
}

double median(std::vector<double> values) {
    if (values.empty()) throw InvalidArgument("median of an empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

SweepReport summarize(std::string parameter, std::vector<double> grid, std::vector<std::string> metrics,
                      const std::vector<std::vector<std::vector<double>>>& values) {
    check_grid(grid);
    if (values.size() != grid.size()) throw DimensionError("summarize: one value set per grid cell required");
    SweepReport rep;
    rep.parameter = std::move(parameter);
    rep.grid = std::move(grid);
    rep.metrics = std::move(metrics);
    rep.samples = values.front().size();
    if (rep.samples == 0) throw InvalidArgument("sweep has no samples");
    for (const auto& cell : values) {
        if (cell.size() != rep.samples) throw DimensionError("summarize: sample count differs between grid cells");
        std::vector<double> mean(rep.metrics.size(), 0.0), med(rep.metrics.size());
        for (std::size_t m = 0; m < rep.metrics.size(); ++m) {
            std::vector<double> column;
            column.reserve(cell.size());
            for (const auto& sample : cell) {
                if (sample.size() != rep.metrics.size()) throw DimensionError("summarize: metric count mismatch");
                column.push_back(sample[m]);
                mean[m] += sample[m];
            }
            mean[m] /= static_cast<double>(cell.size());
            med[m] = median(std::move(column));
        }
        rep.mean.push_back(std::move(mean));
        rep.median.push_back(std::move(med));
    }
    return rep;
}

std::vector<std::vector<TransferErrors>> lambda_sweep_errors(const StackedModel& model,
                                                              const std::vector<TransferCase>& cases,
                                                              const std::vector<double>& grid, LambdaKind which,
                                                              const AlsConfig& base) {
    check_grid(grid);
    if (cases.empty()) throw InvalidArgument("lambda sweep needs at least one validation cell");
    std::vector<std::vector<TransferErrors>> out;
    for (double lambda : grid) {
        AlsConfig cfg = base;
        cfg.lambda1 = which == LambdaKind::L1 ? std::array{lambda, lambda, lambda} : std::array{0.0, 0.0, 0.0};
        cfg.lambda2 = which == LambdaKind::L2 ? std::array{lambda, lambda, lambda} : std::array{0.0, 0.0, 0.0};
        out.push_back(evaluate_transfer(model, cases, cfg));
    }
    return out;
}

SweepReport sweep_lambdas(const StackedModel& model, const std::vector<TransferCase>& cases,
                          const std::vector<double>& grid, LambdaKind which, const AlsConfig& base) {
    const auto raw = lambda_sweep_errors(model, cases, grid, which, base);
    std::vector<std::vector<std::vector<double>>> values;
    for (const auto& cell : raw) {
        auto& v = values.emplace_back();
        for (const auto& e : cell) v.push_back({e.approx, e.expr, e.rot});
    }
    return summarize(which == LambdaKind::L1 ? "lambda1" : "lambda2", grid, {"approx", "expr", "rot"}, values);
}

std::vector<EditPair> rotation_pairs(const LatentDataset& data) {
    const auto left = data.axes().rotation_index(Rotation::Left);
    const auto right = data.axes().rotation_index(Rotation::Right);
    if (!left || !right) throw DataError("rotation pairs need both rotations in the dataset");
    std::vector<EditPair> out;
    for (Index p = 0; p < data.persons(); ++p)
        for (Index e = 0; e < data.expressions(); ++e) {
            const auto l = static_cast<Index>(*left), r = static_cast<Index>(*right);
            out.push_back(EditPair{CellLabel{data.axes().persons[static_cast<std::size_t>(p)],
                                             data.axes().expressions[static_cast<std::size_t>(e)], Rotation::Left},
                                   data.code(p, e, l), data.code(p, e, r)});
        }
    return out;
}

double cosine_distance(const Vector& a, const Vector& b) {
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) throw InvalidArgument("cosine distance of a zero vector");
    return 1.0 - a.dot(b) / (na * nb);
}

SweepReport sweep_strength(const Editor& editor, const std::vector<EditPair>& pairs, const std::vector<double>& grid,
                           std::string parameter) {
    check_grid(grid);
    if (pairs.empty()) throw InvalidArgument("strength sweep needs at least one edit pair");
    std::vector<std::vector<std::vector<double>>> values;
    for (double s : grid) {
        auto& cell = values.emplace_back();
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const Vector w = editor(i, s);
            if (w.size() != pairs[i].target.size()) throw DimensionError("editor returned a code of the wrong length");
            cell.push_back({(w - pairs[i].target).norm(), cosine_distance(w, pairs[i].target)});
        }
    }
    return summarize(std::move(parameter), grid, {"l2", "cosine"}, values);
}

std::vector<double> default_strength_grid() {
    std::vector<double> g;
    for (int i = 0; i <= 300; ++i) g.push_back(i / 100.0);
    return g;
}

std::vector<SweepReport> compare_edits(const StackedModel& model, const LatentDataset& train, const LatentDataset& heldout,
                                       const EditComparisonOptions& opts) {
    const auto pairs = rotation_pairs(heldout);
    if (train.latent_dim() != model.latent_dim() || heldout.latent_dim() != model.latent_dim()) {
        throw DimensionError("compare_edits: dataset and model latent sizes differ");
    }

    std::vector<std::vector<ParameterSet>> estimates;
    estimates.reserve(pairs.size());
    for (const auto& p : pairs) estimates.push_back(estimate_styles(model, p.source_code, opts.als));

    const EditDirection linear = rotation_mean_difference(train, Rotation::Left, Rotation::Right);
    // Baseline strengths are in units of the training mean shift, so 1 on every
    // method's axis means "one full left-to-right step".
    double unit = 0.0;
    {
        const auto train_pairs = rotation_pairs(train);
        for (const auto& p : train_pairs) unit += linear.vector.dot(p.target - p.source_code);
        unit /= static_cast<double>(train_pairs.size());
    }
    const CoordinateRange range = opts.pca_range.value_or(CoordinateRange{0, train.latent_dim()});
    EditDirection pca = pca_direction(train.codes(), opts.pca_component, range);
    // PCA signs are arbitrary; point the component from left toward right.
    orient(pca, linear.vector);

    auto tag = [](SweepReport r, EditMethod m) {
        r.meta.emplace_back("method", std::string(to_string(m)));
        return r;
    };
    std::vector<SweepReport> out;
    out.push_back(tag(sweep_strength([&](std::size_t i, double g) { return edit_rotation_tau(model, estimates[i], g); },
                                     pairs, opts.grid, "gamma"),
                      EditMethod::Tau));
    out.push_back(tag(sweep_strength([&](std::size_t i, double a) { return edit_linear(pairs[i].source_code, linear, a * unit); },
                                     pairs, opts.grid, "alpha"),
                      EditMethod::LinearNormal));
    out.back().meta.emplace_back("alpha_unit", format_number(unit));
    SweepReport pca_rep = sweep_strength([&](std::size_t i, double a) { return edit_linear(pairs[i].source_code, pca, a * unit); },
                                         pairs, opts.grid, "alpha");
    pca_rep = tag(std::move(pca_rep), EditMethod::Pca);
    pca_rep.meta.emplace_back("alpha_unit", format_number(unit));
    pca_rep.meta.emplace_back("component", std::to_string(opts.pca_component));
    pca_rep.meta.emplace_back("range", std::to_string(range.begin) + ":" + std::to_string(range.end));
    out.push_back(std::move(pca_rep));
    return out;
}

} // namespace mlm
