#include "mlm/hosvd.hpp"

#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "mlm/error.hpp"

namespace mlm {

namespace {

constexpr double kAspectLimit = 4.0;

// Eigenpairs of a symmetric PSD matrix in non-increasing eigenvalue order.
std::pair<Vector, Matrix> sorted_eigen(const Matrix& gram) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    if (es.info() != Eigen::Success) {
        throw ConvergenceError("symmetric eigensolver failed on " + std::to_string(gram.rows()) +
                               "x" + std::to_string(gram.cols()) + " Gram matrix");
    }
    // Eigen returns ascending order.
    Vector values = es.eigenvalues().reverse();
    Matrix vectors = es.eigenvectors().rowwise().reverse();
    return {values, vectors};
}

Vector sqrt_clamped(const Vector& eig) {
    Vector s(eig.size());
    for (Index i = 0; i < eig.size(); ++i) s(i) = std::sqrt(std::max(eig(i), 0.0));
    return s;
}

} // namespace

RankSpec RankSpec::of(std::vector<Index> r) {
    RankSpec spec;
    for (Index v : r) spec.ranks.emplace_back(v);
    return spec;
}

Index max_mode_rank(const Shape& shape, std::size_t mode) {
    Index others = 1;
    for (std::size_t k = 0; k < shape.size(); ++k) {
        if (k + 1 != mode) others *= shape[k];
    }
    return std::min(shape[mode - 1], others);
}

std::vector<Index> RankSpec::resolve(const Shape& shape) const {
    if (ranks.size() != shape.size()) {
        throw DimensionError("rank spec has " + std::to_string(ranks.size()) +
                             " entries for an order-" + std::to_string(shape.size()) + " tensor");
    }
    std::vector<Index> out(shape.size());
    for (std::size_t k = 0; k < shape.size(); ++k) {
        const Index cap = max_mode_rank(shape, k + 1);
        if (!ranks[k]) {
            out[k] = cap;
            continue;
        }
        const Index r = *ranks[k];
        if (r < 1 || r > shape[k]) {
            throw DimensionError("rank " + std::to_string(r) + " for mode " + std::to_string(k + 1) +
                                 " must lie in [1, " + std::to_string(shape[k]) + "]");
        }
        out[k] = std::min(r, cap);
    }
    return out;
}

void normalize_signs(Matrix& u) {
    for (Index j = 0; j < u.cols(); ++j) {
        Index arg = 0;
        u.col(j).cwiseAbs().maxCoeff(&arg);
        if (u(arg, j) < 0.0) u.col(j) = -u.col(j);
    }
}

FactorMatrix left_singular_vectors(const Matrix& m, Index rank) {
    const Index rows = m.rows();
    const Index cols = m.cols();
    if (rank < 1 || rank > std::min(rows, cols)) {
        throw DimensionError("requested rank " + std::to_string(rank) + " for a " +
                             std::to_string(rows) + "x" + std::to_string(cols) + " matrix");
    }

    FactorMatrix f;
    if (static_cast<double>(cols) > kAspectLimit * static_cast<double>(rows)) {
        // Wide: U and sigma^2 are the eigenpairs of M M^T.
        auto [eig, vecs] = sorted_eigen(m * m.transpose());
        f.u = vecs.leftCols(rank);
        f.singular_values = sqrt_clamped(eig.head(rank));
    } else if (static_cast<double>(rows) > kAspectLimit * static_cast<double>(cols)) {
        // Tall: right vectors from M^T M, then orthonormalize M V with Householder QR.
        // M V has mutually orthogonal columns of norm sigma, so the thin Q reproduces
        // M V / sigma up to sign and completes null directions deterministically.
        auto [eig, v] = sorted_eigen(m.transpose() * m);
        Matrix mv = m * v;
        Eigen::HouseholderQR<Matrix> qr(mv);
        Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
        for (Index j = 0; j < cols; ++j) {
            if (q.col(j).dot(mv.col(j)) < 0.0) q.col(j) = -q.col(j);
        }
        f.u = q.leftCols(rank);
        f.singular_values = sqrt_clamped(eig.head(rank));
    } else {
        Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU);
        if (svd.info() != Eigen::Success) {
            throw ConvergenceError("SVD of " + std::to_string(rows) + "x" + std::to_string(cols) +
                                   " matrix did not converge");
        }
        f.u = svd.matrixU().leftCols(rank);
        f.singular_values = svd.singularValues().head(rank);
    }
    normalize_signs(f.u);
    return f;
}

HosvdResult hosvd(const DenseTensor& t, const RankSpec& ranks) {
    const std::vector<Index> r = ranks.resolve(t.shape());
    HosvdResult out;
    out.factors.reserve(t.order());
    for (std::size_t k = 1; k <= t.order(); ++k) {
        try {
            out.factors.push_back(left_singular_vectors(unfold(t, k), r[k - 1]));
        } catch (const ConvergenceError& e) {
            throw ConvergenceError("HOSVD mode " + std::to_string(k) + ": " + e.what());
        }
    }
    DenseTensor core = t;
    for (std::size_t k = 1; k <= t.order(); ++k) {
        core = mode_product_transposed(core, out.factors[k - 1].u, k);
    }
    out.core = std::move(core);
    return out;
}

DenseTensor reconstruct(const DenseTensor& core, const std::vector<FactorMatrix>& factors) {
    if (factors.size() != core.order()) {
        throw DimensionError("reconstruct: factor count does not match core order");
    }
    DenseTensor t = core;
    for (std::size_t k = 1; k <= core.order(); ++k) {
        t = mode_product(t, factors[k - 1].u, k);
    }
    return t;
}

std::vector<Vector> mode_energy(const std::vector<FactorMatrix>& factors) {
    std::vector<Vector> out;
    out.reserve(factors.size());
    for (const auto& f : factors) {
        const Vector sq = f.singular_values.array().square();
        // Same summation order as the running sum, so the last entry is exactly 1.
        double total = 0.0;
        for (Index i = 0; i < sq.size(); ++i) total += sq(i);
        Vector e(sq.size());
        double acc = 0.0;
        for (Index i = 0; i < sq.size(); ++i) {
            acc += sq(i);
            e(i) = total > 0.0 ? acc / total : static_cast<double>(i + 1) / static_cast<double>(sq.size());
        }
        out.push_back(std::move(e));
    }
    return out;
}

} // namespace mlm
