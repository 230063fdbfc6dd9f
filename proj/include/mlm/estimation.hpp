#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "mlm/model.hpp"

namespace mlm {

enum class InitRule {
    /// Leading singular vectors of the core contracted with the eigenspace target.
    Backprojection,
    /// Average of the canonical training parameters: column means of U_k.
    TrainingMean,
    /// Gaussian draws scaled to the RMS row norm of U_k, seeded by AlsConfig::seed.
    Random,
};

/// Regularized ALS settings. Weights are indexed person, expression, rotation.
struct AlsConfig {
    std::array<double, 3> lambda1{0.0, 0.0, 0.0};  ///< Lasso weights on U_k q_k
    std::array<double, 3> lambda2{1.0, 1.0, 1.0};  ///< Ridge weights on q_k
    int max_outer_iters = 200;
    double tol = 1e-9;  ///< stop when the relative objective decrease falls below this
    InitRule init = InitRule::Backprojection;
    std::uint64_t seed = 0;  ///< used by InitRule::Random
    /// Diagonal jitter added to singular ridge systems. Zero means singular systems are errors.
    double jitter = 0.0;

    /// Same weights for all three subspaces.
    static AlsConfig uniform(double lambda1, double lambda2);

    double l1(Subspace k) const { return lambda1[static_cast<std::size_t>(k) - 2]; }
    double l2(Subspace k) const { return lambda2[static_cast<std::size_t>(k) - 2]; }

    /// Throws InvalidArgument for negative weights or non-positive tol / iteration counts.
    void validate() const;
};

struct EstimationResult {
    ParameterSet params;
    /// Objective after initialization followed by one value per outer iteration.
    std::vector<double> objective_trace;
    bool converged = false;
    bool diverged = false;
    int iterations = 0;
};

/// Settings of the proximal-gradient solver used when lambda1 > 0.
struct ProximalOptions {
    double tol = 1e-10;
    int max_iters = 500;
};

/// A^(k) such that the eigenspace prediction equals A^(k) q_k.
Matrix build_A(const TensorModel& model, const ParameterSet& params, Subspace k);

/// Minimizes ||A q - y||^2 + lambda2 ||q||^2 + lambda1 ||U q||_1.
///
/// With lambda1 = 0 this is the ridge solution of the normal equations; a
/// singular system (lambda2 = 0, rank-deficient A) raises SingularSystemError
/// unless `jitter` > 0. With lambda1 > 0 it runs iterative soft thresholding
/// with backtracking, warm-started from `start` when given.
Vector solve_subproblem(const Matrix& A, const Vector& y, double lambda1, double lambda2, const FactorMatrix& U,
                        const std::optional<Vector>& start = std::nullopt, double jitter = 0.0,
                        const ProximalOptions& opts = {});

/// Value of the regularized objective for eigenspace target `target`.
double als_objective(const TensorModel& model, const ParameterSet& params, const Vector& target, const AlsConfig& cfg);

/// Eigenspace target U_1^T standardize(y).
Vector eigenspace_target(const TensorModel& model, const Vector& y);

/// Initial parameters for the given rule. Backprojection needs the eigenspace target.
ParameterSet initial_parameters(const TensorModel& model, InitRule rule = InitRule::TrainingMean, std::uint64_t seed = 0,
                                const std::optional<Vector>& target = std::nullopt);

/// Estimate parameters for latent code y by alternating over person, expression
/// and rotation subproblems.
EstimationResult als_estimate(const TensorModel& model, const Vector& y, const AlsConfig& cfg = {});

/// Independent estimation on every style block of y.
std::vector<EstimationResult> als_estimate_stacked(const StackedModel& model, const Vector& y, const AlsConfig& cfg = {});

/// Fix the multilinear scale and sign indeterminacy without changing the prediction:
/// expression and rotation vectors are rescaled to the RMS row norm of their factor
/// with the largest entry of U_k q_k positive; the person vector compensates.
void anchor_scale(const TensorModel& model, ParameterSet& params);

} // namespace mlm
