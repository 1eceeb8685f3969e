#include <algorithm>
#include <limits>

#include "convnet/errors.hpp"
#include "convnet/layers.hpp"

namespace convnet {

namespace {

// c[M,N] += a[M,K] b[K,N], k ascending per output cell
void gemm_acc(std::size_t m, std::size_t k, std::size_t n,
              const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        const double* arow = a + i * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = arow[kk];
            const double* brow = b + kk * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
}

// c[K,N] += a^T b for a[M,K], b[M,N], m ascending per output cell
void gemm_ta_acc(std::size_t m, std::size_t k, std::size_t n,
                 const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        const double* brow = b + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double v = arow[kk];
            double* crow = c + kk * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += v * brow[j];
        }
    }
}

// c[M,K] += a b^T for a[M,N], b[K,N], n ascending per output cell
void gemm_tb_acc(std::size_t m, std::size_t k, std::size_t n,
                 const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double* brow = b + kk * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
            c[i * k + kk] += acc;
        }
    }
}

// col[(c*kh+r)*kw+s][oh*ow_len+ow] = x[c][oh+r][ow+s]
void im2col(const double* x, std::size_t cin, std::size_t h, std::size_t w,
            std::size_t kh, std::size_t kw, std::size_t oh, std::size_t ow,
            double* col) {
    std::size_t row = 0;
    for (std::size_t c = 0; c < cin; ++c) {
        for (std::size_t r = 0; r < kh; ++r) {
            for (std::size_t s = 0; s < kw; ++s, ++row) {
                double* dst = col + row * (oh * ow);
                const double* plane = x + c * h * w;
                for (std::size_t i = 0; i < oh; ++i) {
                    const double* src = plane + (i + r) * w + s;
                    for (std::size_t j = 0; j < ow; ++j) dst[i * ow + j] = src[j];
                }
            }
        }
    }
}

void col2im_acc(const double* col, std::size_t cin, std::size_t h, std::size_t w,
                std::size_t kh, std::size_t kw, std::size_t oh, std::size_t ow,
                double* x) {
    std::size_t row = 0;
    for (std::size_t c = 0; c < cin; ++c) {
        for (std::size_t r = 0; r < kh; ++r) {
            for (std::size_t s = 0; s < kw; ++s, ++row) {
                const double* src = col + row * (oh * ow);
                double* plane = x + c * h * w;
                for (std::size_t i = 0; i < oh; ++i) {
                    double* dst = plane + (i + r) * w + s;
                    for (std::size_t j = 0; j < ow; ++j) dst[j] += src[i * ow + j];
                }
            }
        }
    }
}

} // namespace

Conv2d::Conv2d(std::size_t cin, std::size_t cout, std::size_t kh, std::size_t kw)
    : cin_(cin), cout_(cout), kh_(kh), kw_(kw) {
    weights_.name = "weights";
    weights_.value = Tensor({cout, cin, kh, kw});
    weights_.grad = Tensor({cout, cin, kh, kw});
    weights_.is_conv = true;
    weights_.grouping = ParamGroup::Grouping::conv_kernel;
    biases_.name = "biases";
    biases_.value = Tensor({cout});
    biases_.grad = Tensor({cout});
    biases_.is_conv = true;
}

Tensor Conv2d::forward(const Tensor& x, bool) {
    if (x.rank() != 4 || x.dim(1) != cin_) {
        throw shape_error("conv: expected [N," + std::to_string(cin_) + ",H,W] input, got " +
                          x.shape_str());
    }
    const std::size_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
    if (h < kh_ || w < kw_) {
        throw shape_error("conv: " + std::to_string(kh_) + "x" + std::to_string(kw_) +
                          " kernel larger than " + std::to_string(h) + "x" + std::to_string(w) +
                          " input");
    }
    input_ = x;
    const std::size_t oh = h - kh_ + 1, ow = w - kw_ + 1;
    const std::size_t k = cin_ * kh_ * kw_, l = oh * ow;
    Tensor y({n, cout_, oh, ow});
    col_.resize(k * l);
    const double* px = x.data();
    double* py = y.data();
    const double* pw = weights_.value.data();  // [cout, k] row-major
    const double* pb = biases_.value.data();
    for (std::size_t i = 0; i < n; ++i) {
        im2col(px + i * cin_ * h * w, cin_, h, w, kh_, kw_, oh, ow, col_.data());
        double* yi = py + i * cout_ * l;
        gemm_acc(cout_, k, l, pw, col_.data(), yi);
        for (std::size_t co = 0; co < cout_; ++co) {
            const double b = pb[co];
            for (std::size_t j = 0; j < l; ++j) yi[co * l + j] += b;
        }
    }
    return y;
}

Tensor Conv2d::backward(const Tensor& d_out) {
    const std::size_t n = input_.dim(0), h = input_.dim(2), w = input_.dim(3);
    const std::size_t oh = h - kh_ + 1, ow = w - kw_ + 1;
    if (d_out.rank() != 4 || d_out.dim(0) != n || d_out.dim(1) != cout_ ||
        d_out.dim(2) != oh || d_out.dim(3) != ow) {
        throw shape_error("conv backward: gradient " + d_out.shape_str() +
                          " does not match forward output");
    }
    const std::size_t k = cin_ * kh_ * kw_, l = oh * ow;
    fill(weights_.grad, 0.0);
    fill(biases_.grad, 0.0);
    Tensor dx(input_.shape());
    std::vector<double> dcol(k * l);

    const double* px = input_.data();
    const double* pd = d_out.data();
    const double* pw = weights_.value.data();
    double* pgw = weights_.grad.data();
    double* pgb = biases_.grad.data();
    double* pdx = dx.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double* di = pd + i * cout_ * l;
        im2col(px + i * cin_ * h * w, cin_, h, w, kh_, kw_, oh, ow, col_.data());
        // dW[co,k] += sum_l dOut[co,l] col[k,l]
        gemm_tb_acc(cout_, k, l, di, col_.data(), pgw);
        for (std::size_t co = 0; co < cout_; ++co) {
            double acc = 0.0;
            for (std::size_t j = 0; j < l; ++j) acc += di[co * l + j];
            pgb[co] += acc;
        }
        // dcol[k,l] = sum_co W[co,k] dOut[co,l]
        std::fill(dcol.begin(), dcol.end(), 0.0);
        gemm_ta_acc(cout_, k, l, pw, di, dcol.data());
        col2im_acc(dcol.data(), cin_, h, w, kh_, kw_, oh, ow, pdx + i * cin_ * h * w);
    }
    return dx;
}

std::string Conv2d::describe() const {
    return "conv " + std::to_string(cout_) + "x" + std::to_string(kh_) + "x" +
           std::to_string(kw_) + " on " + std::to_string(cin_) + " maps";
}

MaxPool::MaxPool(std::size_t rh, std::size_t rw, std::size_t stride)
    : rh_(rh), rw_(rw), stride_(stride) {
    if (rh_ == 0 || rw_ == 0 || stride_ == 0) {
        throw shape_error("maxpool: region and stride must be positive");
    }
}

Tensor MaxPool::forward(const Tensor& x, bool) {
    if (x.rank() != 4) {
        throw shape_error("maxpool: expected [N,C,H,W] input, got " + x.shape_str());
    }
    const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (rh_ > h || rw_ > w) {
        throw shape_error("maxpool: " + std::to_string(rh_) + "x" + std::to_string(rw_) +
                          " region exceeds " + std::to_string(h) + "x" + std::to_string(w) +
                          " input");
    }
    in_shape_ = x.shape();
    const std::size_t oh = (h - rh_) / stride_ + 1, ow = (w - rw_) / stride_ + 1;
    Tensor y({n, c, oh, ow});
    arg_.assign(y.size(), 0);
    margin_ = std::numeric_limits<double>::infinity();

    const double* px = x.data();
    double* py = y.data();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double* plane = px + (i * c + ch) * h * w;
            for (std::size_t ph = 0; ph < oh; ++ph) {
                for (std::size_t pw = 0; pw < ow; ++pw) {
                    const std::size_t h0 = ph * stride_, w0 = pw * stride_;
                    double best = plane[h0 * w + w0];
                    double second = -std::numeric_limits<double>::infinity();
                    std::size_t best_idx = h0 * w + w0;
                    for (std::size_t r = 0; r < rh_; ++r) {
                        for (std::size_t s = 0; s < rw_; ++s) {
                            if (r == 0 && s == 0) continue;
                            const std::size_t idx = (h0 + r) * w + (w0 + s);
                            const double v = plane[idx];
                            if (v > best) {
                                second = best;
                                best = v;
                                best_idx = idx;
                            } else if (v > second) {
                                second = v;
                            }
                        }
                    }
                    const std::size_t out_idx = ((i * c + ch) * oh + ph) * ow + pw;
                    py[out_idx] = best;
                    arg_[out_idx] = best_idx;
                    if (rh_ * rw_ > 1 && best - second < margin_) margin_ = best - second;
                }
            }
        }
    }
    return y;
}

Tensor MaxPool::backward(const Tensor& d_out) {
    const std::size_t n = in_shape_[0], c = in_shape_[1], h = in_shape_[2], w = in_shape_[3];
    const std::size_t oh = (h - rh_) / stride_ + 1, ow = (w - rw_) / stride_ + 1;
    if (d_out.rank() != 4 || d_out.dim(0) != n || d_out.dim(1) != c || d_out.dim(2) != oh ||
        d_out.dim(3) != ow) {
        throw shape_error("maxpool backward: gradient " + d_out.shape_str() +
                          " does not match forward output");
    }
    Tensor dx(in_shape_);
    const double* pd = d_out.data();
    double* px = dx.data();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            double* plane = px + (i * c + ch) * h * w;
            const double* drow = pd + (i * c + ch) * oh * ow;
            const std::size_t* arow = arg_.data() + (i * c + ch) * oh * ow;
            for (std::size_t j = 0; j < oh * ow; ++j) plane[arow[j]] += drow[j];
        }
    }
    return dx;
}

std::string MaxPool::describe() const {
    return "maxpool " + std::to_string(rh_) + "x" + std::to_string(rw_) + " stride " +
           std::to_string(stride_);
}

} // namespace convnet
