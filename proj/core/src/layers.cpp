#include "convnet/layers.hpp"

#include <cmath>

#include "convnet/errors.hpp"

namespace convnet {

namespace {

Tensor flatten_to_2d(const Tensor& x) {
    if (x.rank() == 2) return x;
    if (x.rank() == 4) {
        return reshape(x, {x.dim(0), x.dim(1) * x.dim(2) * x.dim(3)});
    }
    throw shape_error("dense: expected rank 2 or 4 input, got " + x.shape_str());
}

} // namespace

Dense::Dense(std::size_t in, std::size_t out) : in_(in), out_(out) {
    weights_.name = "weights";
    weights_.value = Tensor({in, out});
    weights_.grad = Tensor({in, out});
    weights_.grouping = ParamGroup::Grouping::dense_column;
    biases_.name = "biases";
    biases_.value = Tensor({out});
    biases_.grad = Tensor({out});
}

Tensor Dense::forward(const Tensor& x, bool) {
    input_shape_ = x.shape();
    input_ = flatten_to_2d(x);
    if (input_.dim(1) != in_) {
        throw shape_error("dense: input " + input_.shape_str() + " incompatible with [" +
                          std::to_string(in_) + "," + std::to_string(out_) + "] weights");
    }
    Tensor y = matmul(input_, weights_.value);
    const std::size_t n = y.dim(0);
    double* py = y.data();
    const double* pb = biases_.value.data();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < out_; ++j) py[i * out_ + j] += pb[j];
    }
    return y;
}

Tensor Dense::backward(const Tensor& d_out) {
    if (d_out.rank() != 2 || d_out.dim(1) != out_ || d_out.dim(0) != input_.dim(0)) {
        throw shape_error("dense backward: gradient " + d_out.shape_str() +
                          " does not match forward output");
    }
    weights_.grad = matmul(transpose2d(input_), d_out);
    biases_.grad = d_out.dim(0) > 0 ? reduce_sum(d_out, 0) : Tensor({out_});
    Tensor dx = matmul(d_out, transpose2d(weights_.value));
    if (input_shape_.size() == 4) dx = reshape(dx, input_shape_);
    return dx;
}

std::string Dense::describe() const {
    return "dense " + std::to_string(in_) + "->" + std::to_string(out_);
}

Tensor Activation::forward(const Tensor& x, bool) {
    output_ = Tensor(x.shape());
    const double* px = x.data();
    double* py = output_.data();
    margin_ = std::numeric_limits<double>::infinity();
    switch (kind_) {
        case Act::relu:
            for (std::size_t i = 0; i < x.size(); ++i) {
                py[i] = px[i] > 0.0 ? px[i] : 0.0;
                double m = std::fabs(px[i]);
                if (m < margin_) margin_ = m;
            }
            input_ = x;
            break;
        case Act::sigmoid:
            for (std::size_t i = 0; i < x.size(); ++i) py[i] = 1.0 / (1.0 + std::exp(-px[i]));
            break;
        case Act::tanh:
            for (std::size_t i = 0; i < x.size(); ++i) py[i] = std::tanh(px[i]);
            break;
    }
    return output_;
}

Tensor Activation::backward(const Tensor& d_out) {
    if (!d_out.same_shape(output_)) {
        throw shape_error("activation backward: gradient " + d_out.shape_str() +
                          " does not match forward output " + output_.shape_str());
    }
    Tensor dx(d_out.shape());
    const double* pd = d_out.data();
    const double* py = output_.data();
    double* px = dx.data();
    switch (kind_) {
        case Act::relu: {
            const double* pin = input_.data();
            for (std::size_t i = 0; i < dx.size(); ++i) px[i] = pin[i] > 0.0 ? pd[i] : 0.0;
            break;
        }
        case Act::sigmoid:
            for (std::size_t i = 0; i < dx.size(); ++i) px[i] = pd[i] * py[i] * (1.0 - py[i]);
            break;
        case Act::tanh:
            for (std::size_t i = 0; i < dx.size(); ++i) px[i] = pd[i] * (1.0 - py[i] * py[i]);
            break;
    }
    return dx;
}

std::string Activation::describe() const {
    switch (kind_) {
        case Act::relu: return "relu";
        case Act::sigmoid: return "sigmoid";
        case Act::tanh: return "tanh";
    }
    return "?";
}

Maxout::Maxout(std::size_t pieces) : k_(pieces) {
    if (k_ == 0) throw shape_error("maxout: pieces must be >= 1");
}

Tensor Maxout::forward(const Tensor& x, bool) {
    in_shape_ = x.shape();
    std::size_t groups, positions;
    if (x.rank() == 2) {
        if (x.dim(1) % k_ != 0) {
            throw shape_error("maxout: " + std::to_string(x.dim(1)) + " features not divisible by " +
                              std::to_string(k_) + " pieces");
        }
        groups = x.dim(1) / k_;
        positions = 1;
    } else if (x.rank() == 4) {
        if (x.dim(1) % k_ != 0) {
            throw shape_error("maxout: " + std::to_string(x.dim(1)) + " channels not divisible by " +
                              std::to_string(k_) + " pieces");
        }
        groups = x.dim(1) / k_;
        positions = x.dim(2) * x.dim(3);
    } else {
        throw shape_error("maxout: expected rank 2 or 4 input, got " + x.shape_str());
    }
    const std::size_t n = x.dim(0);
    std::vector<std::size_t> out_shape = x.shape();
    out_shape[1] = groups;
    Tensor y(out_shape);
    arg_.assign(y.size(), 0);
    margin_ = std::numeric_limits<double>::infinity();

    const double* px = x.data();
    double* py = y.data();
    // channel stride between consecutive pieces of one group
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t g = 0; g < groups; ++g) {
            for (std::size_t p = 0; p < positions; ++p) {
                double best = px[((i * groups * k_) + g * k_) * positions + p];
                double second = -std::numeric_limits<double>::infinity();
                std::size_t best_j = 0;
                for (std::size_t j = 1; j < k_; ++j) {
                    double v = px[((i * groups * k_) + g * k_ + j) * positions + p];
                    if (v > best) {
                        second = best;
                        best = v;
                        best_j = j;
                    } else if (v > second) {
                        second = v;
                    }
                }
                std::size_t out_idx = (i * groups + g) * positions + p;
                py[out_idx] = best;
                arg_[out_idx] = best_j;
                if (k_ > 1 && best - second < margin_) margin_ = best - second;
            }
        }
    }
    return y;
}

Tensor Maxout::backward(const Tensor& d_out) {
    std::size_t groups = in_shape_[1] / k_;
    std::size_t positions = in_shape_.size() == 4 ? in_shape_[2] * in_shape_[3] : 1;
    if (d_out.size() != in_shape_[0] * groups * positions) {
        throw shape_error("maxout backward: gradient " + d_out.shape_str() +
                          " does not match forward output");
    }
    Tensor dx(in_shape_);
    const double* pd = d_out.data();
    double* px = dx.data();
    const std::size_t n = in_shape_[0];
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t g = 0; g < groups; ++g) {
            for (std::size_t p = 0; p < positions; ++p) {
                std::size_t out_idx = (i * groups + g) * positions + p;
                std::size_t j = arg_[out_idx];
                px[((i * groups * k_) + g * k_ + j) * positions + p] = pd[out_idx];
            }
        }
    }
    return dx;
}

std::string Maxout::describe() const { return "maxout k=" + std::to_string(k_); }

Dropout::Dropout(double p_retain) : p_(p_retain), rng_(0) {
    if (!(p_ > 0.0 && p_ <= 1.0)) {
        throw config_error("dropout: retain probability must be in (0, 1], got " +
                           std::to_string(p_));
    }
}

Tensor Dropout::forward(const Tensor& x, bool training) {
    training_ = training;
    if (!training) {
        return scale(x, p_);
    }
    if (!frozen_ || !mask_.same_shape(x)) {
        mask_ = Tensor(x.shape());
        double* pm = mask_.data();
        for (std::size_t i = 0; i < mask_.size(); ++i) {
            pm[i] = rng_.bernoulli(p_) ? 1.0 : 0.0;
        }
    }
    return mul(x, mask_);
}

Tensor Dropout::backward(const Tensor& d_out) {
    if (!training_) {
        return scale(d_out, p_);
    }
    return mul(d_out, mask_);
}

std::string Dropout::describe() const { return "dropout p=" + std::to_string(p_); }

Tensor softmax(const Tensor& logits) {
    if (logits.rank() != 2) {
        throw shape_error("softmax: expects [N, K] logits, got " + logits.shape_str());
    }
    const std::size_t n = logits.dim(0), k = logits.dim(1);
    if (k == 0) throw shape_error("softmax: K must be >= 1");
    Tensor out(logits.shape());
    const double* px = logits.data();
    double* py = out.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = px + i * k;
        double* orow = py + i * k;
        double m = row[0];
        for (std::size_t j = 1; j < k; ++j) {
            if (row[j] > m) m = row[j];
        }
        double z = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            orow[j] = std::exp(row[j] - m);
            z += orow[j];
        }
        for (std::size_t j = 0; j < k; ++j) orow[j] /= z;
    }
    return out;
}

} // namespace convnet
