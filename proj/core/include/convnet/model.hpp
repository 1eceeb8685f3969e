#ifndef CONVNET_MODEL_HPP
#define CONVNET_MODEL_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "convnet/network.hpp"
#include "convnet/optimizer.hpp"

namespace convnet {

// One line of an architecture description. input uses maps/kh/kw as C/H/W;
// a flat input is C x 1 x 1. norm_cap > 0 caps this layer's weight groups.
struct LayerDesc {
    enum class Kind { input, conv, maxpool, activation, maxout, dropout, dense, output };

    Kind kind;
    std::size_t maps = 0, kh = 0, kw = 0;   // conv; input C/H/W
    std::size_t rh = 0, rw = 0, stride = 0; // maxpool
    Act act = Act::relu;
    std::size_t pieces = 0;                 // maxout
    double p_retain = 0.0;                  // dropout
    std::size_t units = 0;                  // dense / output classes
    double norm_cap = 0.0;

    std::string str() const;               // config-file form, parse_layer inverse
};

LayerDesc parse_layer(const std::string& line);

struct ModelSpec {
    std::string name;
    std::vector<LayerDesc> layers;          // starts with input, ends with output
};

enum class Variant { plain, dropout, maxout };

Variant parse_variant(const std::string& s);
std::string variant_name(Variant v);

// The named architectures: a 1000-unit sigmoid MLP (baseline), the early
// two-stack CNN on grayscale input (initial_cnn), and the four studied
// CNNs (model1..model4). The dropout variant adds retention 0.8 on the
// input and 0.5 after each hidden dense nonlinearity; the maxout variant
// additionally widens conv layers 2x / hidden dense layers 5x and replaces
// their activations with maxout over the widened pieces.
ModelSpec builtin(const std::string& name, Variant variant);

// Scaled-down counterparts with the same layer structure, small enough for
// finite-difference gradient checking.
ModelSpec tiny(const std::string& name, Variant variant);

bool is_builtin(const std::string& name);
std::vector<std::string> builtin_names();

// Shape after every layer, chain[i] matching layers[i]; {C,H,W} while the
// data is an image, {F} once flattened. Throws config_error naming the
// first layer that cannot be applied.
std::vector<std::vector<std::size_t>> infer_shapes(const ModelSpec& spec);

struct InitPolicy {
    double conv_range = 0.5;    // conv weights ~ U(-range, range)
    double dense_range = 0.05;  // dense weights ~ U(-range, range)
};

// Instantiates the layers with freshly initialized parameters: uniform
// weights per policy (seeded, per-layer streams), zero biases, norm caps
// copied onto the weight groups. The network outputs logits.
Network build_network(const ModelSpec& spec, const InitPolicy& policy, std::uint64_t seed);

// Training settings the named architecture was run with: model1..4 use the
// scheduled Nesterov setup, baseline uses fixed-rate classical momentum,
// initial_cnn plain SGD at rate 1.
TrainSchedule builtin_schedule(const std::string& name);

} // namespace convnet

#endif
