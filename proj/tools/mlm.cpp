#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "binary_io.hpp"
#include "mlm/editing.hpp"
#include "mlm/error.hpp"
#include "mlm/persistence.hpp"
#include "mlm/reports.hpp"
#include "mlm/split.hpp"
#include "mlm/sweep.hpp"
#include "mlm/synthetic.hpp"
#include "mlm/trajectories.hpp"
#include "mlm/transfer.hpp"

namespace fs = std::filesystem;
using namespace mlm;

namespace {

std::vector<std::string> split_list(const std::string& text, char sep = ',') {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    if (!text.empty() && text.back() == sep) out.emplace_back();
    return out;
}

std::vector<double> parse_numbers(const std::string& text, const std::string& flag) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(parse_double(item, flag));
    if (out.empty()) throw InvalidArgument(flag + ": empty list");
    return out;
}

// "full", or four comma-separated entries each an integer or "full".
RankSpec parse_ranks(const std::string& text) {
    if (text == "full") return RankSpec::full(4);
    const auto items = split_list(text);
    if (items.size() != 4) throw InvalidArgument("--ranks: expected 'full' or four comma-separated entries, got '" + text + "'");
    RankSpec spec = RankSpec::full(4);
    for (std::size_t k = 0; k < 4; ++k) {
        if (items[k] == "full") continue;
        const double v = parse_double(items[k], "--ranks");
        if (v < 1.0 || v != static_cast<double>(static_cast<Index>(v))) {
            throw InvalidArgument("--ranks: entry '" + items[k] + "' is not a positive integer");
        }
        spec.ranks[k] = static_cast<Index>(v);
    }
    return spec;
}

// One weight for all subspaces or three comma-separated weights (person, expression, rotation).
std::array<double, 3> parse_weights(const std::string& text, const std::string& flag) {
    const auto v = parse_numbers(text, flag);
    if (v.size() == 1) return {v[0], v[0], v[0]};
    if (v.size() == 3) return {v[0], v[1], v[2]};
    throw InvalidArgument(flag + ": expected one value or three comma-separated values");
}

SplitRatios parse_split(const std::string& text) {
    const auto v = parse_numbers(text, "--split");
    if (v.size() != 3) throw InvalidArgument("--split: expected train,validation,test ratios");
    SplitRatios r{v[0], v[1], v[2]};
    r.validate();
    return r;
}

std::string hex32(std::uint32_t v) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", v);
    return buf;
}

/// Options shared by every subcommand plus the bookkeeping for the run manifest.
struct Run {
    CLI::App* app = nullptr;
    std::uint64_t seed = 42;
    std::vector<fs::path> outputs;

    void output(const fs::path& p) { outputs.push_back(p); }

    // Flags with their effective values, sorted by name; the manifest has no timestamps.
    void write_manifest(const fs::path& primary) const {
        nlohmann::json flags = nlohmann::json::object();
        for (const CLI::Option* opt : app->get_options()) {
            if (opt == app->get_help_ptr()) continue;
            const std::string name = opt->get_name(false, true);
            if (opt->get_expected_min() == 0) {
                flags[name] = opt->count() > 0;
            } else if (opt->count() > 0) {
                std::string joined;
                for (const auto& r : opt->results()) joined += (joined.empty() ? "" : ",") + r;
                flags[name] = joined;
            } else {
                flags[name] = opt->get_default_str();
            }
        }
        nlohmann::json outs = nlohmann::json::array();
        for (const auto& p : outputs) {
            const auto bytes = detail::read_file(p);
            outs.push_back({{"path", p.string()}, {"bytes", bytes.size()}, {"crc32", hex32(detail::crc32(bytes))}});
        }
        nlohmann::json doc = {{"tool", "mlm"}, {"manifest_version", 1}, {"command", app->get_name()},
                              {"seed", seed}, {"flags", flags}, {"outputs", outs}};
        detail::write_file_atomic(fs::path(primary.string() + ".run.json"), doc.dump(2) + "\n");
    }
};

/// ALS flags, shared by estimate, transfer, sweep and compare-edits.
struct AlsFlags {
    std::string lambda1 = "0";
    std::string lambda2 = "1";
    int max_iters = 200;
    double tol = 1e-9;
    std::string init = "backprojection";
    double jitter = 0.0;

    void add(CLI::App* app) {
        app->add_option("--lambda1", lambda1, "L1 weight(s) on U_k q_k: one value or person,expression,rotation");
        app->add_option("--lambda2", lambda2, "L2 weight(s) on q_k: one value or person,expression,rotation");
        app->add_option("--max-iters", max_iters, "maximum ALS outer iterations")->check(CLI::PositiveNumber);
        app->add_option("--tol", tol, "stop when the relative objective decrease falls below this");
        app->add_option("--init", init, "initialization rule")
            ->check(CLI::IsMember({"backprojection", "training-mean", "random"}));
        app->add_option("--jitter", jitter, "ridge added to singular subproblems (0 reports them as errors)");
    }

    AlsConfig config(std::uint64_t seed) const {
        AlsConfig cfg;
        cfg.lambda1 = parse_weights(lambda1, "--lambda1");
        cfg.lambda2 = parse_weights(lambda2, "--lambda2");
        cfg.max_outer_iters = max_iters;
        cfg.tol = tol;
        cfg.init = init == "backprojection" ? InitRule::Backprojection
                   : init == "random"       ? InitRule::Random
                                            : InitRule::TrainingMean;
        cfg.seed = seed;
        cfg.jitter = jitter;
        cfg.validate();
        return cfg;
    }
};

/// Person subset of a dataset under the seeded split.
struct SubsetFlags {
    std::string subset;
    std::string split = "0.9,0.05,0.05";

    void add(CLI::App* app, const std::string& fallback, std::vector<std::string> allowed) {
        subset = fallback;
        app->add_option("--subset", subset, "persons to use under the seeded split")->check(CLI::IsMember(allowed));
        app->add_option("--split", split, "train,validation,test ratios over persons");
    }

    LatentDataset select(const LatentDataset& data, const std::string& which, std::uint64_t seed) const {
        if (which == "all") return data;
        const PersonSplit s = split_persons(data.axes().persons, seed, parse_split(split));
        return data.subset_persons(which == "train" ? s.train : which == "validation" ? s.validation : s.test);
    }
    LatentDataset select(const LatentDataset& data, std::uint64_t seed) const { return select(data, subset, seed); }
};

template <class T>
void add_seed(CLI::App* app, T& run) {
    app->add_option("--seed", run.seed, "seed for the person split, synthetic data and random initialization");
}

// ---------------------------------------------------------------- synth-data

struct SynthCmd {
    Run run;
    fs::path out;
    Index latent = 64;
    std::optional<Index> styles, width;
    Index persons = 10, expressions = 25, rotations = 2;
    std::string core_ranks = "full";
    double noise = 0.0;
    double rotation_shift = 0.0;
    bool star = false, heterogeneous = false, no_affine = false;

    void add(CLI::App& root) {
        run.app = root.add_subcommand("synth-data", "generate a labelled latent dataset from a known multilinear model");
        auto* a = run.app;
        a->add_option("--out", out, "codes file; the manifest is written next to it")->required();
        a->add_option("--latent", latent, "latent dimension N (ignored with --styles)")->check(CLI::PositiveNumber);
        a->add_option("--styles", styles, "number of style blocks S")->check(CLI::PositiveNumber);
        a->add_option("--width", width, "coordinates per style L")->check(CLI::PositiveNumber);
        a->add_option("--persons", persons, "persons P")->check(CLI::PositiveNumber);
        a->add_option("--expressions", expressions, "first E canonical expressions")->check(CLI::Range(1, 25));
        a->add_option("--rotations", rotations, "rotations R")->check(CLI::Range(1, 2));
        a->add_option("--core-ranks", core_ranks, "ground-truth core ranks: 'full' or four entries");
        a->add_option("--noise", noise, "Gaussian noise sigma")->check(CLI::NonNegativeNumber);
        a->add_option("--rotation-shift", rotation_shift, "RMS of a common shift added to right-rotation codes")
            ->check(CLI::NonNegativeNumber);
        a->add_flag("--star", star, "plant intensity lines with a common vertex in the expression factor");
        a->add_flag("--heterogeneous", heterogeneous, "independent ground truth per style");
        a->add_flag("--no-affine", no_affine, "skip the random per-coordinate offset and scale");
        add_seed(a, run);
    }

    void exec() {
        if (styles.has_value() != width.has_value()) throw InvalidArgument("--styles and --width must be given together");
        SyntheticSpec spec;
        spec.latent_dim = latent;
        if (styles) spec.styles = StyleLayout{*styles, *width};
        spec.persons = persons;
        spec.expressions = expressions;
        spec.rotations = rotations;
        spec.core_ranks = parse_ranks(core_ranks);
        spec.noise = noise;
        spec.rotation_shift = rotation_shift;
        spec.star = star;
        spec.heterogeneous_styles = heterogeneous;
        spec.affine = !no_affine;
        spec.seed = run.seed;
        const SyntheticData d = generate_synthetic(spec);
        save_dataset(d.dataset, out);
        run.output(out);
        run.output(manifest_path(out));
        std::cout << "codes " << d.dataset.latent_dim() << " x " << d.dataset.codes().cols() << "\n";
        run.write_manifest(out);
    }
};

// ---------------------------------------------------------------- fit

struct FitCmd {
    Run run;
    SubsetFlags subset;
    fs::path data, out;
    std::optional<fs::path> energy;
    std::string kind = "vectorized";
    std::string ranks = "full";

    void add(CLI::App& root) {
        run.app = root.add_subcommand("fit", "fit a multilinear model to the training persons");
        auto* a = run.app;
        a->add_option("--data", data, "dataset codes file")->required()->check(CLI::ExistingFile);
        a->add_option("--out", out, "model file")->required();
        a->add_option("--kind", kind, "model kind")->check(CLI::IsMember({"vectorized", "stacked"}));
        a->add_option("--ranks", ranks, "core ranks (latent, person, expression, rotation): 'full' or four entries");
        a->add_option("--energy", energy, "mode energy report (default: <out>.energy.csv)");
        subset.add(a, "train", {"train", "all"});
        add_seed(a, run);
    }

    void exec() {
        const LatentDataset all = load_dataset(data);
        const LatentDataset train = subset.select(all, run.seed);
        const RankSpec spec = parse_ranks(ranks);
        AnyModel model = kind == "stacked" ? AnyModel(fit_stacked(train, spec)) : AnyModel(fit_vectorized(train, spec));
        const StackedModel stacked = as_stacked(model);
        const double err = reconstruction_error(stacked, train);

        save_model(model, out);
        run.output(out);
        TextReport rep = energy_report(stacked);
        rep.meta.emplace_back("kind", kind);
        rep.meta.emplace_back("reconstruction_error", format_number(err));
        const fs::path energy_path = energy ? *energy : fs::path(out.string() + ".energy.csv");
        save_report(rep, energy_path);
        run.output(energy_path);
        std::cout << "persons " << train.persons() << "\nreconstruction_error " << format_number(err) << "\n";
        run.write_manifest(out);
    }
};

// ---------------------------------------------------------------- estimate

struct EstimateCmd {
    Run run;
    AlsFlags als;
    fs::path model_path, codes, out;
    Index column = 0;

    void add(CLI::App& root) {
        run.app = root.add_subcommand("estimate", "estimate person, expression and rotation parameters of one code");
        auto* a = run.app;
        a->add_option("--model", model_path, "model file")->required()->check(CLI::ExistingFile);
        a->add_option("--codes", codes, "matrix file with one latent code per column")->required()->check(CLI::ExistingFile);
        a->add_option("--column", column, "0-based column of the code")->check(CLI::NonNegativeNumber);
        a->add_option("--out", out, "estimate report (parameters and objective trace)")->required();
        als.add(a);
        add_seed(a, run);
    }

    void exec() {
        const StackedModel model = as_stacked(load_model(model_path));
        const Matrix m = load_matrix(codes);
        if (column >= m.cols()) {
            throw InvalidArgument("--column " + std::to_string(column) + " is out of range for " + std::to_string(m.cols()) +
                                  " codes");
        }
        const Vector y = m.col(column);
        const std::vector<EstimationResult> results = als_estimate_stacked(model, y, als.config(run.seed));
        std::vector<ParameterSet> params;
        for (const auto& r : results) params.push_back(r.params);
        const Vector pred = predict_stacked(model, params);
        double approx = 0.0;
        for (std::size_t s = 0; s < model.styles.size(); ++s) {
            const auto& st = model.styles[s].standardizer;
            const Index w = model.width;
            approx += (st.standardize(Vector(pred.segment(static_cast<Index>(s) * w, w))) -
                       st.standardize(Vector(y.segment(static_cast<Index>(s) * w, w))))
                          .squaredNorm();
        }
        TextReport rep = estimate_report(results);
        rep.meta.emplace_back("approx", format_number(approx));
        save_report(rep, out);
        run.output(out);
        bool diverged = false;
        for (const auto& r : results) diverged = diverged || r.diverged;
        std::cout << "approx " << format_number(approx) << "\nrelative_error "
                  << format_number((pred - y).norm() / std::max(y.norm(), std::numeric_limits<double>::min())) << "\n";
        run.write_manifest(out);
        if (diverged) throw ConvergenceError("ALS objective increased beyond tolerance");
    }
};

// ---------------------------------------------------------------- transfer

struct TransferCmd {
    Run run;
    AlsFlags als;
    SubsetFlags subset;
    fs::path model_path, data, out;
    std::optional<fs::path> edited;

    void add(CLI::App& root) {
        run.app = root.add_subcommand("transfer", "expression and rotation transfer on held-out cells");
        auto* a = run.app;
        a->add_option("--model", model_path, "model file")->required()->check(CLI::ExistingFile);
        a->add_option("--data", data, "dataset codes file")->required()->check(CLI::ExistingFile);
        a->add_option("--out", out, "per-cell transfer error report")->required();
        a->add_option("--edited", edited,
                      "matrix of transferred codes, expression then rotation transfer per cell (default: <out>.edited.bin)");
        subset.add(a, "test", {"train", "validation", "test", "all"});
        als.add(a);
        add_seed(a, run);
    }

    void exec() {
        const StackedModel model = as_stacked(load_model(model_path));
        const LatentDataset held = subset.select(load_dataset(data), run.seed);
        const auto cases = transfer_cases(model.styles.front().axes, held);
        const AlsConfig cfg = als.config(run.seed);

        std::vector<TransferErrors> errors;
        Matrix codes(model.latent_dim(), 2 * static_cast<Index>(cases.size()));
        for (std::size_t i = 0; i < cases.size(); ++i) {
            const auto& c = cases[i];
            const std::vector<ParameterSet> est = estimate_styles(model, c.y, cfg);
            errors.push_back(transfer_errors(model, c, est));
            for (std::size_t s = 0; s < model.styles.size(); ++s) {
                const TensorModel& m = model.styles[s];
                const Index off = static_cast<Index>(s) * model.width;
                const Index ei = static_cast<Index>(c.expr_target), ri = static_cast<Index>(c.rot_target);
                codes.col(2 * static_cast<Index>(i)).segment(off, model.width) =
                    transfer(m, est[s], Subspace::Expression, m.factor(Subspace::Expression).u.row(ei).transpose());
                codes.col(2 * static_cast<Index>(i) + 1).segment(off, model.width) =
                    transfer(m, est[s], Subspace::Rotation, m.factor(Subspace::Rotation).u.row(ri).transpose());
            }
        }
        TextReport rep = transfer_report(cases, errors);
        rep.meta.emplace_back("subset", subset.subset);
        save_report(rep, out);
        run.output(out);
        const fs::path edited_path = edited ? *edited : fs::path(out.string() + ".edited.bin");
        save_matrix(codes, edited_path);
        run.output(edited_path);

        std::vector<double> a, e, r;
        for (const auto& x : errors) {
            a.push_back(x.approx);
            e.push_back(x.expr);
            r.push_back(x.rot);
        }
        std::cout << "cells " << cases.size() << "\nmedian_approx " << format_number(median(a)) << "\nmedian_expr "
                  << format_number(median(e)) << "\nmedian_rot " << format_number(median(r)) << "\n";
        run.write_manifest(out);
    }
};

// ---------------------------------------------------------------- trajectories

struct TrajectoriesCmd {
    Run run;
    fs::path model_path, out;
    Index style = 0;
    std::optional<Index> truncate;

    void add(CLI::App& root) {
        run.app = root.add_subcommand("trajectories", "fit intensity lines in the expression subspace and intersect them");
        auto* a = run.app;
        a->add_option("--model", model_path, "model file")->required()->check(CLI::ExistingFile);
        a->add_option("--out", out, "trajectory report")->required();
        a->add_option("--style", style, "style block of a stacked model")->check(CLI::NonNegativeNumber);
        a->add_option("--truncate", truncate, "keep only the leading expression coordinates")->check(CLI::PositiveNumber);
        add_seed(a, run);
    }

    void exec() {
        const StackedModel model = as_stacked(load_model(model_path));
        if (style >= model.style_count()) {
            throw InvalidArgument("--style " + std::to_string(style) + " is out of range for " +
                                  std::to_string(model.style_count()) + " styles");
        }
        TrajectoryOptions opts;
        opts.truncate = truncate;
        const TrajectoryFit fit = expression_trajectories(model.styles[static_cast<std::size_t>(style)], opts);
        save_report(to_report(fit), out);
        run.output(out);
        std::cout << "origin_residual " << format_number(fit.origin_residual) << "\ncondition "
                  << format_number(fit.condition) << "\n";
        if (fit.neutral_distance) std::cout << "neutral_distance " << format_number(*fit.neutral_distance) << "\n";
        run.write_manifest(out);
    }
};

// ---------------------------------------------------------------- sweep

struct SweepCmd {
    Run run;
    AlsFlags als;
    SubsetFlags subset;
    fs::path model_path, data, out;
    std::string which = "l2";
    std::string grid = "0,0.001,0.01,0.1,1,10,100";

    void add(CLI::App& root) {
        run.app = root.add_subcommand("sweep", "transfer errors over a grid of regularization weights");
        auto* a = run.app;
        a->add_option("--model", model_path, "model file")->required()->check(CLI::ExistingFile);
        a->add_option("--data", data, "dataset codes file")->required()->check(CLI::ExistingFile);
        a->add_option("--out", out, "sweep report")->required();
        a->add_option("--which", which, "l2 sweeps lambda2 with lambda1 = 0, l1 sweeps lambda1 with lambda2 = 0")
            ->check(CLI::IsMember({"l1", "l2"}));
        a->add_option("--grid", grid, "comma-separated increasing weights");
        subset.add(a, "validation", {"train", "validation", "test", "all"});
        als.add(a);
        add_seed(a, run);
    }

    void exec() {
        const StackedModel model = as_stacked(load_model(model_path));
        const LatentDataset held = subset.select(load_dataset(data), run.seed);
        const auto cases = transfer_cases(model.styles.front().axes, held);
        SweepReport rep = sweep_lambdas(model, cases, parse_numbers(grid, "--grid"),
                                        which == "l1" ? LambdaKind::L1 : LambdaKind::L2, als.config(run.seed));
        rep.meta.emplace_back("subset", subset.subset);
        rep.meta.emplace_back("seed", std::to_string(run.seed));
        save_report(to_report(rep), out);
        run.output(out);
        const std::size_t rot = rep.metric_index("rot");
        std::cout << "cells " << rep.samples << "\nbest_" << rep.parameter << "_rot " << format_number(rep.grid[rep.argmin(rot)])
                  << "\n";
        run.write_manifest(out);
    }
};

// ---------------------------------------------------------------- compare-edits

struct CompareCmd {
    Run run;
    AlsFlags als;
    SubsetFlags subset;
    fs::path model_path, data;
    std::string prefix;
    std::optional<std::string> grid;
    Index pca_component = 9;
    std::optional<std::string> pca_range;

    void add(CLI::App& root) {
        run.app = root.add_subcommand("compare-edits", "strength sweeps of the tau, linear-normal and pca rotation editors");
        auto* a = run.app;
        a->add_option("--model", model_path, "model file")->required()->check(CLI::ExistingFile);
        a->add_option("--data", data, "dataset codes file")->required()->check(CLI::ExistingFile);
        a->add_option("--out", prefix, "output prefix; writes <prefix>.<method>.csv")->required();
        a->add_option("--grid", grid, "comma-separated increasing strengths (default 0, 0.01, ..., 3)");
        a->add_option("--pca-component", pca_component, "0-based principal component")->check(CLI::NonNegativeNumber);
        a->add_option("--pca-range", pca_range, "coordinates receiving the pca shift, as begin:end");
        subset.add(a, "test", {"validation", "test"});
        als.add(a);
        add_seed(a, run);
    }

    void exec() {
        const StackedModel model = as_stacked(load_model(model_path));
        const LatentDataset all = load_dataset(data);
        const LatentDataset train = subset.select(all, "train", run.seed);
        const LatentDataset held = subset.select(all, run.seed);
        EditComparisonOptions opts;
        if (grid) opts.grid = parse_numbers(*grid, "--grid");
        opts.pca_component = pca_component;
        if (pca_range) {
            const auto parts = split_list(*pca_range, ':');
            if (parts.size() != 2) throw InvalidArgument("--pca-range: expected begin:end");
            opts.pca_range = CoordinateRange{static_cast<Index>(parse_double(parts[0], "--pca-range")),
                                             static_cast<Index>(parse_double(parts[1], "--pca-range"))};
        }
        opts.als = als.config(run.seed);
        const auto reports = compare_edits(model, train, held, opts);
        for (const auto& r : reports) {
            std::string method;
            for (const auto& [k, v] : r.meta) {
                if (k == "method") method = v;
            }
            SweepReport copy = r;
            copy.meta.emplace_back("subset", subset.subset);
            const fs::path p = prefix + "." + method + ".csv";
            save_report(to_report(copy), p);
            run.output(p);
            std::cout << method << " best_" << r.parameter << " " << format_number(r.grid[r.argmin(0)]) << " median_l2 "
                      << format_number(r.median[r.argmin(0, true)][0]) << "\n";
        }
        run.write_manifest(fs::path(prefix));
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multilinear latent-code analysis: fit, estimate, transfer and edit"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);

    SynthCmd synth;
    FitCmd fit;
    EstimateCmd estimate;
    TransferCmd transfer_cmd;
    TrajectoriesCmd trajectories;
    SweepCmd sweep;
    CompareCmd compare;
    synth.add(app);
    fit.add(app);
    estimate.add(app);
    transfer_cmd.add(app);
    trajectories.add(app);
    sweep.add(app);
    compare.add(app);

    CLI11_PARSE(app, argc, argv);

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        if (name == "synth-data") synth.exec();
        else if (name == "fit") fit.exec();
        else if (name == "estimate") estimate.exec();
        else if (name == "transfer") transfer_cmd.exec();
        else if (name == "trajectories") trajectories.exec();
        else if (name == "sweep") sweep.exec();
        else compare.exec();
    } catch (const std::exception& e) {
        std::cerr << "mlm " << name << ": error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
