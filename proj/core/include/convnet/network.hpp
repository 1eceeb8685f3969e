#ifndef CONVNET_NETWORK_HPP
#define CONVNET_NETWORK_HPP

#include <memory>
#include <string>
#include <vector>

#include "convnet/layers.hpp"

namespace convnet {

// An ordered stack of layers ending in logits; pair with softmax and
// cross_entropy for training. Owns its layers.
class Network {
public:
    Network() = default;
    Network(Network&&) = default;
    Network& operator=(Network&&) = default;
    Network(const Network&) = delete;
    Network& operator=(const Network&) = delete;

    Layer& add(std::unique_ptr<Layer> layer);

    Tensor forward(const Tensor& x, bool training);
    Tensor backward(const Tensor& d_logits);

    std::vector<ParamGroup*> param_groups();
    std::size_t param_count();

    // Smallest switching-surface distance seen by the latest forward.
    double kink_margin() const;

    // Gives every dropout layer its own stream forked from root by layer
    // position, so draws are independent of batch contents elsewhere.
    void seed_dropout(const Rng& root);
    void freeze_dropout(bool on);
    std::vector<Dropout*> dropout_layers();

    std::size_t layer_count() const { return layers_.size(); }
    Layer& layer(std::size_t i) { return *layers_[i]; }
    const Layer& layer(std::size_t i) const { return *layers_[i]; }

    std::string describe() const;

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

} // namespace convnet

#endif
