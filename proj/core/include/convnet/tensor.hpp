#ifndef CONVNET_TENSOR_HPP
#define CONVNET_TENSOR_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "convnet/errors.hpp"

namespace convnet {

// Dense row-major N-dimensional array of doubles. Image batches are NCHW.
// All free-function operations below are pure: inputs are never mutated and
// the result is freshly allocated. Reference kernels use a fixed summation
// order so results are bit-reproducible for a given build.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t dim(std::size_t axis) const;

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t flat) { return data_[flat]; }
    double operator[](std::size_t flat) const { return data_[flat]; }

    double& operator()(std::size_t i);
    double operator()(std::size_t i) const;
    double& operator()(std::size_t i, std::size_t j);
    double operator()(std::size_t i, std::size_t j) const;
    double& operator()(std::size_t i, std::size_t j, std::size_t k);
    double operator()(std::size_t i, std::size_t j, std::size_t k) const;
    double& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l);
    double operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const;

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    std::string shape_str() const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::string shape_str(const std::vector<std::size_t>& shape);

// --- linear algebra ---

// Standard matrix product, a[M,K] x b[K,N]. Accumulation runs over k in
// ascending order for every output cell.
Tensor matmul(const Tensor& a, const Tensor& b);

// --- elementwise (equal shapes or scalar broadcast) ---

Tensor add(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, double b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, double b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor emax(const Tensor& a, const Tensor& b);
Tensor emax(const Tensor& a, double b);
Tensor scale(const Tensor& a, double s);
Tensor eabs(const Tensor& a);

// --- reductions (axis removed from the result) ---

Tensor reduce_sum(const Tensor& a, std::size_t axis);
Tensor reduce_mean(const Tensor& a, std::size_t axis);
Tensor reduce_max(const Tensor& a, std::size_t axis);
// Ties resolve to the lowest index along the axis.
Tensor argmax(const Tensor& a, std::size_t axis);

double sum(const Tensor& a);

// --- shape ops ---

Tensor reshape(const Tensor& a, std::vector<std::size_t> shape);
Tensor transpose2d(const Tensor& a);
// Sub-tensor covering [start, start+count) along the given axis.
Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t count);

// --- in-place helpers (destination passed explicitly; not part of the
//     pure op set above, used by optimizer and layer hot paths) ---

void fill(Tensor& t, double value);
// y += alpha * x
void axpy(double alpha, const Tensor& x, Tensor& y);
// y = alpha * y
void scale_inplace(Tensor& y, double alpha);

} // namespace convnet

#endif
