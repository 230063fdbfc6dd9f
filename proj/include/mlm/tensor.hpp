#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mlm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using Shape = std::vector<Index>;

/**
 * Dense n-way array of doubles.
 *
 * Storage is row-major over modes: the first mode varies slowest, the last
 * mode fastest. Modes are addressed 1-based in the public API so that mode 1
 * is the latent mode, mode 2 the person mode, and so on.
 */
class DenseTensor {
public:
    DenseTensor() = default;
    /// Zero-filled tensor.
    explicit DenseTensor(Shape shape);
    DenseTensor(Shape shape, std::vector<double> data);

    const Shape& shape() const { return shape_; }
    std::size_t order() const { return shape_.size(); }
    /// Extent of a 1-based mode.
    Index extent(std::size_t mode) const;
    Index size() const { return static_cast<Index>(data_.size()); }

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    double& operator()(std::span<const Index> idx);
    double operator()(std::span<const Index> idx) const;

    /// Linear offset of a multi-index under the storage order.
    Index offset(std::span<const Index> idx) const;

    double frobenius_norm() const;

    friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

Index shape_product(std::span<const Index> shape);

/// Mode-k matricization; columns enumerate the remaining modes in increasing
/// order, the earliest remaining mode varying slowest.
Matrix unfold(const DenseTensor& t, std::size_t mode);

/// Inverse of unfold for the given target shape.
DenseTensor fold(const Matrix& m, std::size_t mode, const Shape& shape);

/// k-mode product t x_k m: contracts mode k of t with the columns of m.
DenseTensor mode_product(const DenseTensor& t, const Matrix& m, std::size_t mode);

/// Mode product with the transpose of m, without forming the transpose.
DenseTensor mode_product_transposed(const DenseTensor& t, const Matrix& m, std::size_t mode);

/// Contraction of mode k with a vector; the mode is kept with extent 1.
DenseTensor mode_product(const DenseTensor& t, const Vector& v, std::size_t mode);

} // namespace mlm
