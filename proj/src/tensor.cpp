#include "mlm/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "mlm/error.hpp"

namespace mlm {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_shape(const Shape& shape) {
    if (shape.empty()) {
        throw DimensionError("tensor must have at least one mode");
    }
    for (Index e : shape) {
        if (e < 1) {
            throw DimensionError("tensor extents must be >= 1, got " + std::to_string(e));
        }
    }
}

void check_mode(std::size_t mode, std::size_t order) {
    if (mode < 1 || mode > order) {
        throw DimensionError("mode " + std::to_string(mode) + " out of range for order-" +
                             std::to_string(order) + " tensor");
    }
}

// Extents before and after a 1-based mode.
struct Split {
    Index outer;
    Index extent;
    Index inner;
};

Split split_at(const Shape& shape, std::size_t mode) {
    Split s{1, shape[mode - 1], 1};
    for (std::size_t k = 0; k + 1 < mode; ++k) s.outer *= shape[k];
    for (std::size_t k = mode; k < shape.size(); ++k) s.inner *= shape[k];
    return s;
}

} // namespace

Index shape_product(std::span<const Index> shape) {
    return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

DenseTensor::DenseTensor(Shape shape) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(static_cast<std::size_t>(shape_product(shape_)), 0.0);
}

DenseTensor::DenseTensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (static_cast<Index>(data_.size()) != shape_product(shape_)) {
        throw DimensionError("tensor data has " + std::to_string(data_.size()) +
                             " entries, shape requires " + std::to_string(shape_product(shape_)));
    }
}

Index DenseTensor::extent(std::size_t mode) const {
    check_mode(mode, order());
    return shape_[mode - 1];
}

Index DenseTensor::offset(std::span<const Index> idx) const {
    if (idx.size() != shape_.size()) {
        throw DimensionError("index arity does not match tensor order");
    }
    Index off = 0;
    for (std::size_t k = 0; k < shape_.size(); ++k) {
        if (idx[k] < 0 || idx[k] >= shape_[k]) {
            throw DimensionError("index out of bounds in mode " + std::to_string(k + 1));
        }
        off = off * shape_[k] + idx[k];
    }
    return off;
}

double& DenseTensor::operator()(std::span<const Index> idx) {
    return data_[static_cast<std::size_t>(offset(idx))];
}

double DenseTensor::operator()(std::span<const Index> idx) const {
    return data_[static_cast<std::size_t>(offset(idx))];
}

double DenseTensor::frobenius_norm() const {
    return Eigen::Map<const Vector>(data_.data(), size()).norm();
}

Matrix unfold(const DenseTensor& t, std::size_t mode) {
    check_mode(mode, t.order());
    const auto [outer, extent, inner] = split_at(t.shape(), mode);
    Matrix m(extent, outer * inner);
    const double* src = t.data().data();
    for (Index o = 0; o < outer; ++o) {
        for (Index i = 0; i < extent; ++i) {
            const double* row = src + (o * extent + i) * inner;
            for (Index n = 0; n < inner; ++n) {
                m(i, o * inner + n) = row[n];
            }
        }
    }
    return m;
}

DenseTensor fold(const Matrix& m, std::size_t mode, const Shape& shape) {
    check_shape(shape);
    check_mode(mode, shape.size());
    const auto [outer, extent, inner] = split_at(shape, mode);
    if (m.rows() != extent || m.cols() != outer * inner) {
        throw DimensionError("cannot fold " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()) + " matrix along mode " +
                             std::to_string(mode) + ": expected " + std::to_string(extent) + "x" +
                             std::to_string(outer * inner));
    }
    DenseTensor t(shape);
    double* dst = t.data().data();
    for (Index o = 0; o < outer; ++o) {
        for (Index i = 0; i < extent; ++i) {
            double* row = dst + (o * extent + i) * inner;
            for (Index n = 0; n < inner; ++n) {
                row[n] = m(i, o * inner + n);
            }
        }
    }
    return t;
}

namespace {

// Applies op (rows x extent) to every (extent x inner) slab of t along mode.
template <typename Op>
DenseTensor apply_along_mode(const DenseTensor& t, const Op& op, Index rows, std::size_t mode) {
    const auto [outer, extent, inner] = split_at(t.shape(), mode);
    Shape out_shape = t.shape();
    out_shape[mode - 1] = rows;
    DenseTensor out(out_shape);
    const double* src = t.data().data();
    double* dst = out.data().data();
    for (Index o = 0; o < outer; ++o) {
        Eigen::Map<const RowMajorMatrix> slab(src + o * extent * inner, extent, inner);
        Eigen::Map<RowMajorMatrix> res(dst + o * rows * inner, rows, inner);
        res.noalias() = op * slab;
    }
    return out;
}

} // namespace

DenseTensor mode_product(const DenseTensor& t, const Matrix& m, std::size_t mode) {
    check_mode(mode, t.order());
    if (m.cols() != t.shape()[mode - 1]) {
        throw DimensionError("mode_product: matrix has " + std::to_string(m.cols()) +
                             " columns, mode " + std::to_string(mode) + " has extent " +
                             std::to_string(t.shape()[mode - 1]));
    }
    return apply_along_mode(t, m, m.rows(), mode);
}

DenseTensor mode_product_transposed(const DenseTensor& t, const Matrix& m, std::size_t mode) {
    check_mode(mode, t.order());
    if (m.rows() != t.shape()[mode - 1]) {
        throw DimensionError("mode_product_transposed: matrix has " + std::to_string(m.rows()) +
                             " rows, mode " + std::to_string(mode) + " has extent " +
                             std::to_string(t.shape()[mode - 1]));
    }
    return apply_along_mode(t, m.transpose(), m.cols(), mode);
}

DenseTensor mode_product(const DenseTensor& t, const Vector& v, std::size_t mode) {
    check_mode(mode, t.order());
    if (v.size() != t.shape()[mode - 1]) {
        throw DimensionError("mode_product: vector length " + std::to_string(v.size()) +
                             " does not match extent " + std::to_string(t.shape()[mode - 1]) +
                             " of mode " + std::to_string(mode));
    }
    return apply_along_mode(t, v.transpose(), 1, mode);
}

} // namespace mlm
