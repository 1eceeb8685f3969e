#include "convnet/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace convnet {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw shape_error(std::string(op) + ": shape mismatch " + a.shape_str() +
                          " vs " + b.shape_str());
    }
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_product(shape_) != data_.size()) {
        throw shape_error("Tensor: shape " + shape_str() + " expects " +
                          std::to_string(shape_product(shape_)) + " elements, got " +
                          std::to_string(data_.size()));
    }
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw shape_error("Tensor::dim: axis " + std::to_string(axis) +
                          " out of range for " + shape_str());
    }
    return shape_[axis];
}

double& Tensor::operator()(std::size_t i) { return data_[i]; }
double Tensor::operator()(std::size_t i) const { return data_[i]; }

double& Tensor::operator()(std::size_t i, std::size_t j) {
    return data_[i * shape_[1] + j];
}
double Tensor::operator()(std::size_t i, std::size_t j) const {
    return data_[i * shape_[1] + j];
}

double& Tensor::operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
}
double Tensor::operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
}

double& Tensor::operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
}
double Tensor::operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Tensor::shape_str() const { return convnet::shape_str(shape_); }

std::string shape_str(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw shape_error("matmul: expects rank-2 operands, got " + a.shape_str() +
                          " and " + b.shape_str());
    }
    if (a.dim(1) != b.dim(0)) {
        throw shape_error("matmul: inner dimensions disagree, " + a.shape_str() +
                          " x " + b.shape_str());
    }
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor c({m, n});
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = c.data();
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = pc + i * n;
        const double* arow = pa + i * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = arow[kk];
            const double* brow = pb + kk * n;
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] += aik * brow[j];
            }
        }
    }
    return c;
}

namespace {

template <typename F>
Tensor zip(const Tensor& a, const Tensor& b, const char* op, F f) {
    require_same_shape(a, b, op);
    Tensor out(a.shape());
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    for (std::size_t i = 0; i < a.size(); ++i) po[i] = f(pa[i], pb[i]);
    return out;
}

template <typename F>
Tensor map(const Tensor& a, F f) {
    Tensor out(a.shape());
    const double* pa = a.data();
    double* po = out.data();
    for (std::size_t i = 0; i < a.size(); ++i) po[i] = f(pa[i]);
    return out;
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return zip(a, b, "add", [](double x, double y) { return x + y; });
}
Tensor add(const Tensor& a, double b) {
    return map(a, [b](double x) { return x + b; });
}
Tensor sub(const Tensor& a, const Tensor& b) {
    return zip(a, b, "sub", [](double x, double y) { return x - y; });
}
Tensor sub(const Tensor& a, double b) {
    return map(a, [b](double x) { return x - b; });
}
Tensor mul(const Tensor& a, const Tensor& b) {
    return zip(a, b, "mul", [](double x, double y) { return x * y; });
}
Tensor emax(const Tensor& a, const Tensor& b) {
    return zip(a, b, "max", [](double x, double y) { return x > y ? x : y; });
}
Tensor emax(const Tensor& a, double b) {
    return map(a, [b](double x) { return x > b ? x : b; });
}
Tensor scale(const Tensor& a, double s) {
    return map(a, [s](double x) { return x * s; });
}
Tensor eabs(const Tensor& a) {
    return map(a, [](double x) { return std::fabs(x); });
}

namespace {

// Decompose the index space around `axis` into outer/len/inner so any
// reduction walks the axis with a fixed ascending order.
struct AxisView {
    std::size_t outer, len, inner;
};

AxisView axis_view(const Tensor& a, std::size_t axis, const char* op) {
    if (axis >= a.rank()) {
        throw shape_error(std::string(op) + ": axis " + std::to_string(axis) +
                          " out of range for " + a.shape_str());
    }
    AxisView v{1, a.shape()[axis], 1};
    for (std::size_t i = 0; i < axis; ++i) v.outer *= a.shape()[i];
    for (std::size_t i = axis + 1; i < a.rank(); ++i) v.inner *= a.shape()[i];
    return v;
}

std::vector<std::size_t> drop_axis(const std::vector<std::size_t>& shape, std::size_t axis) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i != axis) out.push_back(shape[i]);
    }
    return out;
}

} // namespace

Tensor reduce_sum(const Tensor& a, std::size_t axis) {
    AxisView v = axis_view(a, axis, "reduce_sum");
    Tensor out(drop_axis(a.shape(), axis));
    const double* pa = a.data();
    double* po = out.data();
    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t i = 0; i < v.inner; ++i) {
            double acc = 0.0;
            for (std::size_t l = 0; l < v.len; ++l) {
                acc += pa[(o * v.len + l) * v.inner + i];
            }
            po[o * v.inner + i] = acc;
        }
    }
    return out;
}

Tensor reduce_mean(const Tensor& a, std::size_t axis) {
    AxisView v = axis_view(a, axis, "reduce_mean");
    if (v.len == 0) throw shape_error("reduce_mean: empty axis");
    Tensor s = reduce_sum(a, axis);
    scale_inplace(s, 1.0 / static_cast<double>(v.len));
    return s;
}

Tensor reduce_max(const Tensor& a, std::size_t axis) {
    AxisView v = axis_view(a, axis, "reduce_max");
    if (v.len == 0) throw shape_error("reduce_max: empty axis");
    Tensor out(drop_axis(a.shape(), axis));
    const double* pa = a.data();
    double* po = out.data();
    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t i = 0; i < v.inner; ++i) {
            double best = pa[(o * v.len) * v.inner + i];
            for (std::size_t l = 1; l < v.len; ++l) {
                double x = pa[(o * v.len + l) * v.inner + i];
                if (x > best) best = x;
            }
            po[o * v.inner + i] = best;
        }
    }
    return out;
}

Tensor argmax(const Tensor& a, std::size_t axis) {
    AxisView v = axis_view(a, axis, "argmax");
    if (v.len == 0) throw shape_error("argmax: empty axis");
    Tensor out(drop_axis(a.shape(), axis));
    const double* pa = a.data();
    double* po = out.data();
    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t i = 0; i < v.inner; ++i) {
            double best = pa[(o * v.len) * v.inner + i];
            std::size_t best_l = 0;
            for (std::size_t l = 1; l < v.len; ++l) {
                double x = pa[(o * v.len + l) * v.inner + i];
                if (x > best) {
                    best = x;
                    best_l = l;
                }
            }
            po[o * v.inner + i] = static_cast<double>(best_l);
        }
    }
    return out;
}

double sum(const Tensor& a) {
    const double* pa = a.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += pa[i];
    return acc;
}

Tensor reshape(const Tensor& a, std::vector<std::size_t> shape) {
    std::size_t n = shape_product(shape);
    if (n != a.size()) {
        throw shape_error("reshape: " + a.shape_str() + " has " + std::to_string(a.size()) +
                          " elements, target " + convnet::shape_str(shape) + " has " +
                          std::to_string(n));
    }
    return Tensor(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

Tensor transpose2d(const Tensor& a) {
    if (a.rank() != 2) {
        throw shape_error("transpose2d: expects rank 2, got " + a.shape_str());
    }
    const std::size_t m = a.dim(0), n = a.dim(1);
    Tensor out({n, m});
    const double* pa = a.data();
    double* po = out.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            po[j * m + i] = pa[i * n + j];
        }
    }
    return out;
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t count) {
    AxisView v = axis_view(a, axis, "slice");
    if (start > v.len || count > v.len - start) {
        throw shape_error("slice: range [" + std::to_string(start) + ", " +
                          std::to_string(start + count) + ") out of bounds for axis " +
                          std::to_string(axis) + " of " + a.shape_str());
    }
    std::vector<std::size_t> shape = a.shape();
    shape[axis] = count;
    Tensor out(shape);
    const double* pa = a.data();
    double* po = out.data();
    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t l = 0; l < count; ++l) {
            const double* src = pa + (o * v.len + start + l) * v.inner;
            double* dst = po + (o * count + l) * v.inner;
            for (std::size_t i = 0; i < v.inner; ++i) dst[i] = src[i];
        }
    }
    return out;
}

void fill(Tensor& t, double value) {
    double* p = t.data();
    for (std::size_t i = 0; i < t.size(); ++i) p[i] = value;
}

void axpy(double alpha, const Tensor& x, Tensor& y) {
    require_same_shape(x, y, "axpy");
    const double* px = x.data();
    double* py = y.data();
    for (std::size_t i = 0; i < x.size(); ++i) py[i] += alpha * px[i];
}

void scale_inplace(Tensor& y, double alpha) {
    double* py = y.data();
    for (std::size_t i = 0; i < y.size(); ++i) py[i] *= alpha;
}

} // namespace convnet
