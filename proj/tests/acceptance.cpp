// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: acceptance <path to the mlm executable>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mlm/editing.hpp"
#include "mlm/error.hpp"
#include "mlm/persistence.hpp"
#include "mlm/reports.hpp"
#include "mlm/split.hpp"
#include "mlm/sweep.hpp"
#include "mlm/trajectories.hpp"
#include "mlm/transfer.hpp"
#include "support.hpp"

using namespace mlm;
using namespace testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// Full-scale synthetic data: N=256, P=20, E=25, R=2.
SyntheticSpec full_scale(double noise) {
    SyntheticSpec spec;
    spec.latent_dim = 256;
    spec.persons = 20;
    spec.expressions = 25;
    spec.rotations = 2;
    spec.noise = noise;
    spec.seed = 42;
    return spec;
}

// One-sided sign test: probability of at least `wins` successes in `n` fair trials.
double sign_test_p(int wins, int n) {
    double p = 0.0;
    for (int i = wins; i <= n; ++i) p += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) - n * std::log(2.0));
    return p;
}

Outcome hosvd_exactness() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(1);
    const DenseTensor t = random_tensor({8, 5, 6, 2}, rng);
    const HosvdResult h = hosvd(t, RankSpec::full(4));
    const DenseTensor back = reconstruct(h.core, h.factors);
    double ss = 0.0;
    for (std::size_t i = 0; i < t.data().size(); ++i) ss += std::pow(back.data()[i] - t.data()[i], 2);
    const double err = std::sqrt(ss) / t.frobenius_norm();
    double ortho = 0.0;
    for (const auto& f : h.factors) {
        const Matrix g = f.u.transpose() * f.u - Matrix::Identity(f.cols(), f.cols());
        ortho = std::max(ortho, g.cwiseAbs().maxCoeff());
    }
    const double secs = seconds_since(t0);
    return {err <= 1e-10 && ortho <= 1e-10 && secs < 1.0,
            "rel_err=" + fmt("%.2e", err) + " ortho=" + fmt("%.2e", ortho) + " time=" + fmt("%.3fs", secs)};
}

Outcome model_form_equivalence() {
    std::mt19937_64 rng(2);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const Index n = 4 + static_cast<Index>(rng() % 20), p = 2 + static_cast<Index>(rng() % 6);
        const Index e = 2 + static_cast<Index>(rng() % 8), r = 1 + static_cast<Index>(rng() % 2);
        const TensorModel m = random_model(rng, n, p, e, r);
        const ParameterSet q = random_params(m, rng);
        const Vector a = predict(m, q), b = predict_einsum(m, q);
        worst = std::max(worst, (a - b).cwiseAbs().maxCoeff() / std::max(1.0, a.cwiseAbs().maxCoeff()));
    }
    return {worst <= 1e-12, "max_rel_diff=" + fmt("%.2e", worst) + " draws=100"};
}

Outcome a_matrix_contract() {
    std::mt19937_64 rng(3);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const Index n = 4 + static_cast<Index>(rng() % 20), p = 2 + static_cast<Index>(rng() % 6);
        const Index e = 2 + static_cast<Index>(rng() % 8), r = 1 + static_cast<Index>(rng() % 2);
        const TensorModel m = random_model(rng, n, p, e, r);
        const ParameterSet q = random_params(m, rng);
        const Vector direct = predict_eigenspace(m, q);
        for (Subspace k : kSubspaces) {
            const Vector viaA = build_A(m, q, k) * q[k];
            worst = std::max(worst, (viaA - direct).cwiseAbs().maxCoeff() / std::max(1.0, direct.cwiseAbs().maxCoeff()));
        }
    }
    return {worst <= 1e-12, "max_rel_diff=" + fmt("%.2e", worst) + " draws=100 k=2,3,4"};
}

Outcome generate_then_estimate() {
    const SyntheticData d = generate_synthetic(full_scale(0.0));
    const TensorModel m = fit_vectorized(d.dataset);
    std::mt19937_64 rng(4);
    const AlsConfig cfg = AlsConfig::uniform(0.0, 0.0);
    double worst = 0.0;
    bool monotone = true;
    const auto t0 = Clock::now();
    for (int i = 0; i < 50; ++i) {
        const Vector y = predict(m, random_params(m, rng));
        const EstimationResult r = als_estimate(m, y, cfg);
        worst = std::max(worst, relative_error(predict(m, r.params), y));
        for (std::size_t j = 1; j < r.objective_trace.size(); ++j) monotone = monotone && r.objective_trace[j] <= r.objective_trace[j - 1];
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-8 && monotone && secs < 30.0,
            "max_rel_err=" + fmt("%.2e", worst) + " monotone=" + (monotone ? "yes" : "no") + " samples=50 time=" +
                fmt("%.2fs", secs)};
}

Outcome regularization_behavior() {
    const SyntheticData d = generate_synthetic(full_scale(0.1));
    const PersonSplit split = split_persons(d.dataset.axes().persons, 42);
    const TensorModel m = fit_vectorized(d.dataset.subset_persons(split.train));
    const auto cases = transfer_cases(m.axes, d.dataset.subset_persons(split.test));
    const std::vector<double> grid{0.0, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0};

    bool ridge_path = true;
    int wins = 0, losses = 0;
    for (const auto& c : cases) {
        const ParameterSet q0 = als_estimate(m, c.y, AlsConfig::uniform(0.0, 0.0)).params;
        const ParameterSet q1 = als_estimate(m, c.y, AlsConfig::uniform(0.0, 1.0)).params;
        const double rot0 = transfer_errors(m, c, q0).rot, rot1 = transfer_errors(m, c, q1).rot;
        wins += rot1 < rot0;
        losses += rot1 > rot0;

        const Vector target = eigenspace_target(m, c.y);
        for (Subspace k : kSubspaces) {
            const Matrix A = build_A(m, q0, k);
            double prev = std::numeric_limits<double>::infinity();
            for (double l2 : grid) {
                const double norm = solve_subproblem(A, target, 0.0, l2, m.factor(k)).norm();
                ridge_path = ridge_path && norm <= prev * (1.0 + 1e-12);
                prev = norm;
            }
        }
    }
    const int n = wins + losses;
    const double p = sign_test_p(wins, n);
    return {ridge_path && n >= 20 && p < 0.05,
            "ridge_path_monotone=" + std::string(ridge_path ? "yes" : "no") + " held_out_cells=" +
                std::to_string(cases.size()) + " rot(l2=1)<rot(l2=0) in " + std::to_string(wins) + "/" +
                std::to_string(n) + " sign_test_p=" + fmt("%.2e", p)};
}

Outcome apathy_origin() {
    std::mt19937_64 rng(6);
    const auto labels = canonical_expressions();
    const StarRows star = make_star_rows(labels, 25, 1e-6, rng);
    const TrajectoryFit fit = expression_trajectories(star.rows, labels);
    const double vertex_err = (fit.origin - star.vertex).norm();
    const Vector neutral_shift = star.rows.row(0).transpose() - fit.origin;
    const double offset_err = (neutral_shift - star.neutral_offset).norm() / star.neutral_offset.norm();
    return {fit.lines.size() == 6 && vertex_err <= 1e-4 && offset_err <= 0.05 && neutral_shift.norm() > 0.0,
            "lines=" + std::to_string(fit.lines.size()) + " |origin-v|=" + fmt("%.2e", vertex_err) +
                " neutral_offset_rel_err=" + fmt("%.2e", offset_err)};
}

Outcome stacked_vs_vectorized() {
    SyntheticSpec spec;
    spec.styles = StyleLayout{4, 64};
    spec.heterogeneous_styles = true;
    spec.persons = 20;
    spec.expressions = 25;
    spec.rotations = 2;
    spec.core_ranks = RankSpec{{std::nullopt, Index{6}, std::nullopt, std::nullopt}};
    spec.noise = 0.01;
    spec.seed = 7;
    const SyntheticData d = generate_synthetic(spec);
    const PersonSplit split = split_persons(d.dataset.axes().persons, 42);
    const LatentDataset train = d.dataset.subset_persons(split.train);
    const LatentDataset held = d.dataset.subset_persons(split.test);
    const StackedModel stacked = fit_stacked(train);
    const StackedModel vectorized = as_stacked(fit_vectorized(train));
    const AlsConfig cfg;

    int better = 0, total = 0;
    for (Index c = 0; c < held.codes().cols(); ++c) {
        const Vector y = held.codes().col(c);
        const double es = (predict_stacked(stacked, estimate_styles(stacked, y, cfg)) - y).squaredNorm();
        const double ev = (predict_stacked(vectorized, estimate_styles(vectorized, y, cfg)) - y).squaredNorm();
        better += es <= ev;
        ++total;
    }
    const double frac = static_cast<double>(better) / total;

    // S = 1: the stacked fit and the vectorized fit are the same computation.
    SyntheticSpec one = spec;
    one.styles = StyleLayout{1, 64};
    one.heterogeneous_styles = false;
    one.persons = 6;
    const LatentDataset d1 = generate_synthetic(one).dataset;
    const LatentDataset plain(d1.codes(), d1.manifest());
    const TensorModel s1 = fit_stacked(d1).styles.front();
    const TensorModel v1 = fit_vectorized(plain);
    const bool bitwise = serialize_model(AnyModel(s1)) == serialize_model(AnyModel(v1));
    return {frac >= 0.9 && bitwise, "stacked<=vectorized on " + std::to_string(better) + "/" + std::to_string(total) +
                                        " held-out cells (" + fmt("%.1f%%", 100.0 * frac) + ") S=1_bitwise=" +
                                        (bitwise ? "yes" : "no")};
}

Outcome rotation_edit_identity() {
    SyntheticSpec spec = full_scale(0.0);
    spec.latent_dim = 64;
    spec.persons = 8;
    const SyntheticData d = generate_synthetic(spec);
    const TensorModel m = fit_vectorized(d.dataset);
    double worst = 0.0;
    for (Index p = 0; p < d.dataset.persons(); ++p) {
        for (Index e = 0; e < d.dataset.expressions(); ++e) {
            const Vector right = edit_rotation_tau(m, m.canonical_parameters(p, e, 0), 1.0);
            worst = std::max(worst, relative_error(right, d.dataset.code(p, e, 1)));
        }
    }
    return {worst <= 1e-10, "max_rel_err=" + fmt("%.2e", worst) + " cells=" +
                                std::to_string(d.dataset.persons() * d.dataset.expressions())};
}

Outcome editing_comparison() {
    // Persons share an 8-dimensional identity space and every right-rotation code carries
    // a common planted shift, so the latent-space baselines have a direction to find.
    // In the model the whole rotation change is the step between rotation rows: gamma = 1.
    SyntheticSpec spec = full_scale(0.02);
    spec.rotation_shift = 1.0;
    spec.core_ranks = RankSpec{{std::nullopt, Index{8}, std::nullopt, std::nullopt}};
    spec.seed = 9;
    const SyntheticData d = generate_synthetic(spec);
    const PersonSplit split = split_persons(d.dataset.axes().persons, 42);
    const LatentDataset train = d.dataset.subset_persons(split.train);
    const StackedModel m = as_stacked(fit_vectorized(train));
    EditComparisonOptions opts;
    const auto reports = compare_edits(m, train, d.dataset.subset_persons(split.test), opts);
    const SweepReport& tau = reports.at(0);
    const std::size_t l2 = tau.metric_index("l2");
    const double step = opts.grid[1] - opts.grid[0];
    const double best = tau.grid[tau.argmin(l2)];
    const double tau_median = tau.median[tau.argmin(l2, true)][l2];
    bool beats = true;
    std::string medians = "tau=" + fmt("%.3g", tau_median);
    for (std::size_t i = 1; i < reports.size(); ++i) {
        const double med = reports[i].median[reports[i].argmin(l2, true)][l2];
        beats = beats && tau_median <= med;
        for (const auto& [k, v] : reports[i].meta) {
            if (k == "method") medians += " " + v + "=" + fmt("%.3g", med) + "@" + fmt("%.2f", reports[i].grid[reports[i].argmin(l2, true)]);
        }
    }
    return {std::abs(best - 1.0) <= step + 1e-12 && beats,
            "tau_argmin_gamma=" + fmt("%.2f", best) + " (planted 1.00, step " + fmt("%.2f", step) + ") best medians: " + medians};
}

bool same_bytes(const std::filesystem::path& a, const std::filesystem::path& b) {
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
    return fa.good() == fb.good() && !sa.empty() && sa == sb;
}

Outcome persistence_determinism(const std::string& cli) {
    ScratchDir dir("acceptance");
    int checked = 0;
    bool ok = true;

    // Library round trips: save, load, save again and compare bytes.
    SyntheticSpec spec;
    spec.styles = StyleLayout{3, 16};
    spec.heterogeneous_styles = true;
    spec.persons = 6;
    spec.expressions = 13;
    spec.noise = 0.05;
    const SyntheticData d = generate_synthetic(spec);
    auto round_trip = [&](const std::string& name, const std::function<void(const std::filesystem::path&)>& save,
                          const std::function<void(const std::filesystem::path&, const std::filesystem::path&)>& reload) {
        const auto a = dir / (name + ".1"), b = dir / (name + ".2");
        save(a);
        reload(a, b);
        ok = ok && same_bytes(a, b);
        ++checked;
    };
    round_trip("dataset", [&](const auto& p) { save_dataset(d.dataset, p); },
               [](const auto& a, const auto& b) { save_dataset(load_dataset(a), b); });
    const StackedModel stacked = fit_stacked(d.dataset);
    const TensorModel vectorized = fit_vectorized(d.dataset);
    round_trip("stacked", [&](const auto& p) { save_model(stacked, p); },
               [](const auto& a, const auto& b) { save_model(load_model(a), b); });
    round_trip("vectorized", [&](const auto& p) { save_model(vectorized, p); },
               [](const auto& a, const auto& b) { save_model(load_model(a), b); });
    const auto cases = transfer_cases(vectorized.axes, d.dataset.subset_persons(std::vector<std::string>{"P001"}));
    const SweepReport sweep = sweep_lambdas(as_stacked(vectorized), cases, {0.1, 1.0}, LambdaKind::L2);
    round_trip("sweep", [&](const auto& p) { save_report(to_report(sweep), p); },
               [](const auto& a, const auto& b) { save_report(to_report(sweep_from_report(load_report(a, "sweep-report"))), b); });
    const TrajectoryFit traj = expression_trajectories(vectorized);
    round_trip("trajectory", [&](const auto& p) { save_report(to_report(traj), p); }, [](const auto& a, const auto& b) {
        save_report(to_report(trajectory_from_report(load_report(a, "trajectory-fit"))), b);
    });
    const auto est = als_estimate_stacked(stacked, cases.front().y);
    round_trip("estimate", [&](const auto& p) { save_report(estimate_report(est), p); },
               [](const auto& a, const auto& b) { save_report(estimate_report(estimates_from_report(load_report(a, "estimate"))), b); });
    const bool lib_ok = ok;

    // CLI: the same pipeline in two directories must produce identical files.
    auto pipeline = [&](const std::filesystem::path& where) {
        std::filesystem::create_directories(where);
        const std::string cd = "cd '" + where.string() + "' && '" + cli + "' ";
        const std::vector<std::string> steps = {
            "synth-data --out d.bin --latent 48 --persons 22 --expressions 13 --noise 0.05 --core-ranks full,6,full,full",
            "fit --data d.bin --out m.mlm",
            "estimate --model m.mlm --codes d.bin --column 7 --out e.csv --init random",
            "transfer --model m.mlm --data d.bin --out t.csv",
            "trajectories --model m.mlm --out tr.csv",
            "sweep --model m.mlm --data d.bin --out s.csv --grid 0.01,0.1,1,10",
            "compare-edits --model m.mlm --data d.bin --out c --grid 0,0.5,1,1.5,2",
            "synth-data --out st.bin --styles 2 --width 16 --persons 6 --expressions 5 --heterogeneous",
            "fit --data st.bin --out st.mlm --kind stacked --subset all"};
        for (const auto& s : steps) {
            if (std::system((cd + s + " > /dev/null").c_str()) != 0) return false;
        }
        return true;
    };
    const bool ran = pipeline(dir / "run1") && pipeline(dir / "run2");
    int files = 0;
    bool cli_ok = ran;
    if (ran) {
        for (const auto& entry : std::filesystem::directory_iterator(dir / "run1")) {
            cli_ok = cli_ok && same_bytes(entry.path(), dir / "run2" / entry.path().filename());
            ++files;
        }
    }
    cli_ok = cli_ok && files >= 20;
    return {lib_ok && cli_ok, "library_round_trips=" + std::to_string(checked) + (lib_ok ? " identical" : " DIFFER") +
                                  " cli_files=" + std::to_string(files) + (cli_ok ? " identical" : " DIFFER/FAILED")};
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: acceptance <path to mlm executable>\n";
        return 2;
    }
    const std::string cli = std::filesystem::absolute(argv[1]).string();
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"HOSVD exactness", hosvd_exactness},
        {"model-form equivalence", model_form_equivalence},
        {"A-matrix contract", a_matrix_contract},
        {"generate-then-estimate", generate_then_estimate},
        {"regularization behavior", regularization_behavior},
        {"apathy-origin recovery", apathy_origin},
        {"stacked vs vectorized", stacked_vs_vectorized},
        {"rotation-edit identity", rotation_edit_identity},
        {"editing-method comparison", editing_comparison},
        {"persistence and determinism", [&] { return persistence_determinism(cli); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto t0 = Clock::now();
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s [%zu] %s: %s (%.2fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
