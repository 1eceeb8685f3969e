#ifndef CONVNET_LAYERS_HPP
#define CONVNET_LAYERS_HPP

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "convnet/rng.hpp"
#include "convnet/tensor.hpp"

namespace convnet {

// One trainable tensor together with its gradient and the attributes the
// optimizer needs: conv groups take the scaled learning rate, and the
// max-norm projection acts on rows (conv kernels) or columns (incoming
// weights of a dense unit). norm_cap 0 means unconstrained.
struct ParamGroup {
    enum class Grouping { none, conv_kernel, dense_column };

    std::string name;
    Tensor value;
    Tensor grad;
    bool is_conv = false;
    Grouping grouping = Grouping::none;
    double norm_cap = 0.0;
};

// Forward/backward pair over immutable inputs. backward() consumes the
// cache left by the latest forward(). kink_margin() reports the distance
// from that forward to the nearest relu/max switching surface (+inf for
// smooth layers); gradient checking re-samples when it is too small for
// finite differences to be valid.
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x, bool training) = 0;
    virtual Tensor backward(const Tensor& d_out) = 0;
    virtual std::vector<ParamGroup*> param_groups() { return {}; }
    virtual std::string describe() const = 0;
    virtual double kink_margin() const { return std::numeric_limits<double>::infinity(); }
};

// y = xW + b with W [in, out]. Rank-4 inputs are flattened to [N, C*H*W]
// and the input gradient is restored to the original shape.
class Dense : public Layer {
public:
    Dense(std::size_t in, std::size_t out);

    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& d_out) override;
    std::vector<ParamGroup*> param_groups() override { return {&weights_, &biases_}; }
    std::string describe() const override;

    ParamGroup& weights() { return weights_; }
    ParamGroup& biases() { return biases_; }

private:
    std::size_t in_, out_;
    ParamGroup weights_, biases_;
    Tensor input_;                       // flattened [N, in]
    std::vector<std::size_t> input_shape_;
};

// Valid cross-correlation, stride 1, weights [cout, cin, kh, kw]; one bias
// per output map added after the window accumulation. Output cells sum the
// window in (cin, kh, kw) order, matching the direct quadruple-loop oracle
// bit for bit.
class Conv2d : public Layer {
public:
    Conv2d(std::size_t cin, std::size_t cout, std::size_t kh, std::size_t kw);

    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& d_out) override;
    std::vector<ParamGroup*> param_groups() override { return {&weights_, &biases_}; }
    std::string describe() const override;

    ParamGroup& weights() { return weights_; }
    ParamGroup& biases() { return biases_; }

private:
    std::size_t cin_, cout_, kh_, kw_;
    ParamGroup weights_, biases_;
    Tensor input_;
    mutable std::vector<double> col_;    // im2col scratch, [cin*kh*kw x oh*ow]
};

// Max over (rh x rw) windows at the given stride; partial windows are
// discarded. Backward routes each output gradient to the argmax position
// only, ties to the lowest flat index; overlapping windows accumulate.
class MaxPool : public Layer {
public:
    MaxPool(std::size_t rh, std::size_t rw, std::size_t stride);

    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& d_out) override;
    std::string describe() const override;
    double kink_margin() const override { return margin_; }

private:
    std::size_t rh_, rw_, stride_;
    std::vector<std::size_t> in_shape_;
    std::vector<std::size_t> arg_;       // flat h*W+w per output cell
    double margin_ = std::numeric_limits<double>::infinity();
};

enum class Act { relu, sigmoid, tanh };

// Pointwise nonlinearity. The relu derivative at exactly 0 is 0.
class Activation : public Layer {
public:
    explicit Activation(Act kind) : kind_(kind) {}

    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& d_out) override;
    std::string describe() const override;
    double kink_margin() const override { return margin_; }

    Act kind() const { return kind_; }

private:
    Act kind_;
    Tensor output_;
    Tensor input_;
    double margin_ = std::numeric_limits<double>::infinity();
};

// Max over k consecutive pieces. Dense inputs [N, F] group features
// {g*k .. g*k+k-1}; image inputs [N, C, H, W] group channels the same way
// at each spatial position. Groups are disjoint. Gradient flows to the
// winning piece only, ties to the lowest piece index.
class Maxout : public Layer {
public:
    explicit Maxout(std::size_t pieces);

    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& d_out) override;
    std::string describe() const override;
    double kink_margin() const override { return margin_; }

    std::size_t pieces() const { return k_; }

private:
    std::size_t k_;
    std::vector<std::size_t> in_shape_;
    std::vector<std::size_t> arg_;       // winning piece per output cell
    double margin_ = std::numeric_limits<double>::infinity();
};

// Training: y = x (.) mask with mask ~ Bernoulli(p_retain) drawn i.i.d. per
// unit per case from this layer's own stream. Inference: y = p_retain * x,
// the expected-value form of the outgoing-weight scaling rule; no RNG draw
// happens outside training. freeze() pins the current mask for gradient
// checking.
class Dropout : public Layer {
public:
    explicit Dropout(double p_retain);

    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& d_out) override;
    std::string describe() const override;

    void reset_rng(Rng rng) { rng_ = std::move(rng); }
    Rng& rng() { return rng_; }
    void freeze(bool on) { frozen_ = on; }
    double p_retain() const { return p_; }
    const Tensor& mask() const { return mask_; }

private:
    double p_;
    Rng rng_;
    Tensor mask_;
    bool frozen_ = false;
    bool training_ = false;
};

// Row-wise softmax with max-shift, rows sum to 1; safe for logits of any
// magnitude.
Tensor softmax(const Tensor& logits);

} // namespace convnet

#endif
