#include "mlm/estimation.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/QR>

#include "mlm/error.hpp"
#include "mlm/hosvd.hpp"

namespace mlm {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Relative pivot threshold below which a ridge system counts as rank deficient.
constexpr double kRankThreshold = 1e-12;
// Relative objective increase tolerated as rounding before an update counts as divergence.
constexpr double kDivergenceTol = 1e-10;

double l1_primed(const FactorMatrix& U, const Vector& q) { return (U.u * q).lpNorm<1>(); }

Vector soft_threshold(const Vector& v, double c) {
    return v.unaryExpr([c](double x) { return x > c ? x - c : (x < -c ? x + c : 0.0); });
}

// argmin_q 1/2 ||q - v||^2 + c ||U q||_1 for U with orthonormal columns.
Vector prox_l1_primed(const Vector& v, double c, const Matrix& U) {
    if (U.rows() == U.cols()) {
        // U orthogonal: the map q -> U q is an isometry, so threshold in primed coordinates.
        return U.transpose() * soft_threshold(U * v, c);
    }
    // Truncated basis: projected gradient on the box-constrained dual
    //   max_{|mu|_inf <= c}  mu^T U v - 1/2 ||U^T mu||^2,   q = v - U^T mu.
    // ||U U^T|| = 1, so a unit step is admissible.
    Vector mu = Vector::Zero(U.rows());
    for (int it = 0; it < 5000; ++it) {
        const Vector q = v - U.transpose() * mu;
        const Vector next = (mu + U * q).cwiseMax(-c).cwiseMin(c);
        const double change = (next - mu).norm();
        mu = next;
        if (change <= 1e-14 * std::max(1.0, mu.norm())) break;
    }
    return v - U.transpose() * mu;
}

Vector solve_ridge(const Matrix& A, const Vector& y, double lambda2, double jitter) {
    const Index n = A.cols();
    auto attempt = [&](double ridge) -> std::optional<Vector> {
        Matrix aug(A.rows() + n, n);
        aug.topRows(A.rows()) = A;
        aug.bottomRows(n) = std::sqrt(ridge) * Matrix::Identity(n, n);
        Vector rhs = Vector::Zero(A.rows() + n);
        rhs.head(A.rows()) = y;
        Eigen::ColPivHouseholderQR<Matrix> qr(aug);
        qr.setThreshold(kRankThreshold);
        if (qr.rank() < n) return std::nullopt;
        return Vector(qr.solve(rhs));
    };
    if (auto q = attempt(lambda2)) return *q;
    if (jitter > 0.0) {
        if (auto q = attempt(lambda2 + jitter)) return *q;
    }
    throw SingularSystemError("ridge subproblem is singular: A (" + std::to_string(A.rows()) + "x" +
                              std::to_string(A.cols()) + ") is rank deficient and lambda2 = " +
                              std::to_string(lambda2) + "; raise lambda2 or opt in to jitter");
}

// Rescale (q2, q3, q4) by factors with product one so the penalty is minimal. The
// prediction is unchanged. Closed form when every block carries an L2 weight
// (equal lambda2_k ||q_k||^2 at the optimum) or, failing that, an L1 weight.
std::optional<ParameterSet> balanced(const TensorModel& model, const ParameterSet& params, const AlsConfig& cfg) {
    std::array<double, 3> w{};
    double degree = 0.0;
    bool l2 = true, l1 = true;
    for (std::size_t i = 0; i < 3; ++i) {
        l2 = l2 && cfg.lambda2[i] > 0.0;
        l1 = l1 && cfg.lambda1[i] > 0.0;
    }
    if (l2) {
        degree = 2.0;
        for (Subspace k : kSubspaces) w[static_cast<std::size_t>(k) - 2] = cfg.l2(k) * params[k].squaredNorm();
    } else if (l1) {
        degree = 1.0;
        for (Subspace k : kSubspaces) w[static_cast<std::size_t>(k) - 2] = cfg.l1(k) * l1_primed(model.factor(k), params[k]);
    } else {
        return std::nullopt;
    }
    if (!(w[0] > 0.0 && w[1] > 0.0 && w[2] > 0.0)) return std::nullopt;
    // Minimize sum_k a_k^degree w_k subject to prod a_k = 1: a_k^degree w_k equal.
    const double geo = std::cbrt(w[0] * w[1] * w[2]);
    ParameterSet out = params;
    for (Subspace k : kSubspaces) {
        out[k] *= std::pow(geo / w[static_cast<std::size_t>(k) - 2], 1.0 / degree);
    }
    return out;
}

} // namespace

AlsConfig AlsConfig::uniform(double l1, double l2) {
    AlsConfig cfg;
    cfg.lambda1 = {l1, l1, l1};
    cfg.lambda2 = {l2, l2, l2};
    return cfg;
}

void AlsConfig::validate() const {
    for (int k = 0; k < 3; ++k) {
        if (!(lambda1[k] >= 0.0) || !(lambda2[k] >= 0.0)) {
            throw InvalidArgument("regularization weights must be non-negative");
        }
    }
    if (!(tol > 0.0)) throw InvalidArgument("ALS tolerance must be positive");
    if (max_outer_iters < 1) throw InvalidArgument("max_outer_iters must be positive");
    if (!(jitter >= 0.0)) throw InvalidArgument("jitter must be non-negative");
}

Matrix build_A(const TensorModel& model, const ParameterSet& params, Subspace k) {
    check_parameters(model, params);
    DenseTensor t;
    switch (k) {
    case Subspace::Person:
        t = mode_product(mode_product(model.core, params.expression, 3), params.rotation, 4);
        break;
    case Subspace::Expression:
        t = mode_product(mode_product(model.core, params.person, 2), params.rotation, 4);
        break;
    case Subspace::Rotation:
        t = mode_product(mode_product(model.core, params.person, 2), params.expression, 3);
        break;
    default:
        throw InvalidArgument("build_A: subspace index must be 2, 3 or 4");
    }
    // Remaining shape is (latent rank) x (rank of k) with singleton modes elsewhere.
    return Eigen::Map<const RowMajorMatrix>(t.data().data(), model.rank(1), model.rank(k));
}

Vector solve_subproblem(const Matrix& A, const Vector& y, double lambda1, double lambda2, const FactorMatrix& U,
                        const std::optional<Vector>& start, double jitter, const ProximalOptions& opts) {
    if (A.rows() != y.size()) throw DimensionError("solve_subproblem: A rows do not match target length");
    if (U.cols() != A.cols()) throw DimensionError("solve_subproblem: factor rank does not match A columns");
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw InvalidArgument("regularization weights must be non-negative");
    if (start && start->size() != A.cols()) throw DimensionError("solve_subproblem: warm start has wrong length");

    if (lambda1 == 0.0) return solve_ridge(A, y, lambda2, jitter);

    const Matrix AtA = A.transpose() * A;
    const Vector Aty = A.transpose() * y;
    auto smooth = [&](const Vector& q) { return (A * q - y).squaredNorm() + lambda2 * q.squaredNorm(); };
    auto gradient = [&](const Vector& q) -> Vector { return 2.0 * (AtA * q - Aty) + 2.0 * lambda2 * q; };

    Vector q = start ? *start : Vector::Zero(A.cols());
    double lipschitz = 1.0;
    for (int it = 0; it < opts.max_iters; ++it) {
        const double fq = smooth(q);
        const Vector g = gradient(q);
        Vector next;
        while (true) {
            next = prox_l1_primed(q - g / lipschitz, lambda1 / lipschitz, U.u);
            const Vector d = next - q;
            if (smooth(next) <= fq + g.dot(d) + 0.5 * lipschitz * d.squaredNorm() || lipschitz > 1e300) break;
            lipschitz *= 2.0;
        }
        const double change = (next - q).norm();
        q = std::move(next);
        if (change <= opts.tol * std::max(1.0, q.norm())) break;
        // Let the step grow again after a backtracking phase.
        lipschitz = std::max(lipschitz * 0.5, std::numeric_limits<double>::min());
    }
    return q;
}

Vector eigenspace_target(const TensorModel& model, const Vector& y) {
    return model.factors[0].u.transpose() * model.standardizer.standardize(y);
}

double als_objective(const TensorModel& model, const ParameterSet& params, const Vector& target, const AlsConfig& cfg) {
    double obj = (predict_eigenspace(model, params) - target).squaredNorm();
    for (Subspace k : kSubspaces) {
        obj += cfg.l2(k) * params[k].squaredNorm();
        if (cfg.l1(k) > 0.0) obj += cfg.l1(k) * l1_primed(model.factor(k), params[k]);
    }
    return obj;
}

ParameterSet initial_parameters(const TensorModel& model, InitRule rule, std::uint64_t seed,
                                const std::optional<Vector>& target) {
    switch (rule) {
    case InitRule::Backprojection: {
        if (!target) throw InvalidArgument("backprojection initialization needs a target");
        if (target->size() != model.rank(1)) throw DimensionError("initial_parameters: target length does not match latent rank");
        // G = C x_1 t^T correlates the target with every core fiber; its best
        // rank-one approximation seeds the three vectors.
        const DenseTensor g = mode_product(model.core, Matrix(target->transpose()), 1);
        if (g.frobenius_norm() == 0.0) return initial_parameters(model, InitRule::TrainingMean);
        ParameterSet p;
        for (Subspace k : kSubspaces) {
            const Matrix& U = model.factor(k).u;
            const Vector lead = left_singular_vectors(unfold(g, static_cast<std::size_t>(k)), 1).u.col(0);
            p[k] = lead * std::sqrt(static_cast<double>(U.cols()) / static_cast<double>(U.rows()));
        }
        return p;
    }
    case InitRule::TrainingMean: {
        ParameterSet p;
        for (Subspace k : kSubspaces) {
            const Matrix& U = model.factor(k).u;
            Vector q = U.colwise().mean().transpose();
            // Mean row can vanish (e.g. rows symmetric about zero); fall back to the first row.
            if (q.norm() < 1e-12) q = U.row(0).transpose();
            p[k] = std::move(q);
        }
        return p;
    }
    case InitRule::Random: {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g;
        ParameterSet p;
        for (Subspace k : kSubspaces) {
            const Matrix& U = model.factor(k).u;
            Vector q(U.cols());
            for (Index i = 0; i < q.size(); ++i) q(i) = g(rng);
            p[k] = q * std::sqrt(1.0 / static_cast<double>(U.rows()));
        }
        return p;
    }
    }
    throw InvalidArgument("unknown initialization rule");
}

void anchor_scale(const TensorModel& model, ParameterSet& params) {
    // Expression and rotation vectors get the RMS norm of their factor's rows and a
    // primed vector whose largest entry is positive; the person vector absorbs the
    // scale and sign. Square factors have unit rows, so an in-model code lands on
    // its canonical rows exactly.
    double absorbed = 1.0;
    for (Subspace k : {Subspace::Expression, Subspace::Rotation}) {
        Vector& q = params[k];
        const double norm = q.norm();
        if (norm == 0.0) continue;
        const Matrix& U = model.factor(k).u;
        const Vector primed = U * q;
        Index arg = 0;
        primed.cwiseAbs().maxCoeff(&arg);
        const double sign = primed(arg) < 0.0 ? -1.0 : 1.0;
        const double target = std::sqrt(static_cast<double>(U.cols()) / static_cast<double>(U.rows()));
        const double s = sign * target / norm;
        q *= s;
        absorbed /= s;
    }
    params.person *= absorbed;
}

EstimationResult als_estimate(const TensorModel& model, const Vector& y, const AlsConfig& cfg) {
    cfg.validate();
    if (y.size() != model.latent_dim()) {
        throw DimensionError("als_estimate: latent code has length " + std::to_string(y.size()) + ", model expects " +
                             std::to_string(model.latent_dim()));
    }
    if (!y.allFinite()) throw InvalidArgument("als_estimate: latent code contains non-finite values");

    const Vector target = eigenspace_target(model, y);
    EstimationResult res;
    res.params = initial_parameters(model, cfg.init, cfg.seed, target);
    double obj = als_objective(model, res.params, target, cfg);
    res.objective_trace.push_back(obj);

    for (int it = 1; it <= cfg.max_outer_iters; ++it) {
        const double prev = obj;
        for (Subspace k : kSubspaces) {
            const Matrix A = build_A(model, res.params, k);
            ParameterSet candidate = res.params;
            candidate[k] = solve_subproblem(A, target, cfg.l1(k), cfg.l2(k), model.factor(k), res.params[k], cfg.jitter);
            const double cand_obj = als_objective(model, candidate, target, cfg);
            if (cand_obj <= obj) {
                res.params = std::move(candidate);
                obj = cand_obj;
            } else if (cand_obj > obj + kDivergenceTol * std::max(obj, 1.0)) {
                res.diverged = true;
            }
            // Otherwise the block is already at its minimizer up to rounding; keep it.
        }
        if (auto b = balanced(model, res.params, cfg)) {
            const double b_obj = als_objective(model, *b, target, cfg);
            if (b_obj <= obj) {
                res.params = std::move(*b);
                obj = b_obj;
            }
        }
        res.objective_trace.push_back(obj);
        res.iterations = it;
        if (res.diverged) break;
        if ((prev - obj) / std::max(prev, std::numeric_limits<double>::min()) < cfg.tol) {
            res.converged = true;
            break;
        }
    }
    anchor_scale(model, res.params);
    return res;
}

std::vector<EstimationResult> als_estimate_stacked(const StackedModel& model, const Vector& y, const AlsConfig& cfg) {
    if (y.size() != model.latent_dim()) {
        throw DimensionError("als_estimate_stacked: latent code has length " + std::to_string(y.size()) +
                             ", model expects " + std::to_string(model.latent_dim()));
    }
    std::vector<EstimationResult> out;
    out.reserve(model.styles.size());
    for (Index s = 0; s < model.style_count(); ++s) {
        out.push_back(als_estimate(model.styles[static_cast<std::size_t>(s)], y.segment(s * model.width, model.width), cfg));
    }
    return out;
}

} // namespace mlm
