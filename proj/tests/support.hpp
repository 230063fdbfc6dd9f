#pragma once

// Shared helpers for the unit tests: random inputs, naive reference
// implementations and scratch directories.

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mlm/model.hpp"
#include "mlm/synthetic.hpp"
#include "mlm/tensor.hpp"

namespace testing {

using namespace mlm;

inline DenseTensor random_tensor(const Shape& shape, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    std::vector<double> data(static_cast<std::size_t>(shape_product(shape)));
    for (auto& x : data) x = g(rng);
    return DenseTensor(shape, std::move(data));
}

inline Vector random_vector(Index n, std::mt19937_64& rng) { return random_gaussian(n, 1, rng).col(0); }

inline Shape random_shape(std::size_t order, Index max_extent, std::mt19937_64& rng) {
    std::uniform_int_distribution<Index> d(1, max_extent);
    Shape s(order);
    for (auto& e : s) e = d(rng);
    return s;
}

/// Multi-index of a linear offset, last mode fastest.
inline std::vector<Index> multi_index(Index offset, const Shape& shape) {
    std::vector<Index> idx(shape.size());
    for (std::size_t k = shape.size(); k-- > 0;) {
        idx[k] = offset % shape[k];
        offset /= shape[k];
    }
    return idx;
}

/// Unfolding by explicit index arithmetic, independent of the library's strides.
inline Matrix naive_unfold(const DenseTensor& t, std::size_t mode) {
    const Shape& s = t.shape();
    Index cols = 1;
    for (std::size_t k = 0; k < s.size(); ++k)
        if (k + 1 != mode) cols *= s[k];
    Matrix m(s[mode - 1], cols);
    for (Index off = 0; off < t.size(); ++off) {
        const auto idx = multi_index(off, s);
        Index col = 0;
        for (std::size_t k = 0; k < s.size(); ++k) {
            if (k + 1 == mode) continue;
            col = col * s[k] + idx[k];
        }
        m(idx[mode - 1], col) = t.data()[static_cast<std::size_t>(off)];
    }
    return m;
}

/// Mode product by summation over every output entry.
inline DenseTensor naive_mode_product(const DenseTensor& t, const Matrix& a, std::size_t mode) {
    Shape out_shape = t.shape();
    out_shape[mode - 1] = a.rows();
    DenseTensor out(out_shape);
    for (Index off = 0; off < out.size(); ++off) {
        auto idx = multi_index(off, out_shape);
        const Index row = idx[mode - 1];
        double s = 0.0;
        for (Index j = 0; j < t.extent(mode); ++j) {
            idx[mode - 1] = j;
            s += a(row, j) * t(idx);
        }
        out.data()[static_cast<std::size_t>(off)] = s;
    }
    return out;
}

inline double max_abs_diff(const DenseTensor& a, const DenseTensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

inline double relative_error(const Vector& a, const Vector& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

/// Random model with orthonormal factors, Gaussian core and a random affine standardizer.
inline TensorModel random_model(std::mt19937_64& rng, Index n = 12, Index p = 5, Index e = 7, Index r = 2,
                                std::vector<Index> ranks = {}) {
    if (ranks.empty()) ranks = {std::min(n, p * e * r), p, e, r};
    const Shape ext{n, p, e, r};
    TensorModel m;
    for (std::size_t k = 0; k < 4; ++k) {
        m.factors[k].u = random_orthonormal(ext[k], ranks[k], rng);
        m.factors[k].singular_values = Vector::Ones(ranks[k]);
    }
    m.core = random_tensor(Shape(ranks.begin(), ranks.end()), rng);
    Vector scale = random_vector(n, rng).cwiseAbs().array() + 0.5;
    m.standardizer = Standardizer{random_vector(n, rng), scale, std::vector<bool>(static_cast<std::size_t>(n), false)};
    m.axes.persons = synthetic_person_ids(p);
    const auto expr = canonical_expressions();
    m.axes.expressions.assign(expr.begin(), expr.begin() + e);
    for (Index i = 0; i < r; ++i) m.axes.rotations.push_back(static_cast<Rotation>(i));
    return m;
}

inline ParameterSet random_params(const TensorModel& m, std::mt19937_64& rng) {
    return ParameterSet{random_vector(m.rank(Subspace::Person), rng), random_vector(m.rank(Subspace::Expression), rng),
                        random_vector(m.rank(Subspace::Rotation), rng)};
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& name) {
        path_ = std::filesystem::temp_directory_path() / ("mlm-test-" + name + "-" + std::to_string(::getpid()));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& f) const { return path_ / f; }

private:
    std::filesystem::path path_;
};

} // namespace testing
