#include <cmath>
#include <numeric>
#include <sstream>

#include "convnet/errors.hpp"
#include "convnet/model.hpp"
#include "convnet/tensor_io.hpp"

namespace convnet {

namespace {

using Kind = LayerDesc::Kind;

LayerDesc input_of(std::size_t c, std::size_t h, std::size_t w) {
    LayerDesc d;
    d.kind = Kind::input;
    d.maps = c;
    d.kh = h;
    d.kw = w;
    return d;
}

LayerDesc conv_of(std::size_t maps, std::size_t k) {
    LayerDesc d;
    d.kind = Kind::conv;
    d.maps = maps;
    d.kh = k;
    d.kw = k;
    return d;
}

LayerDesc pool_of(std::size_t r, std::size_t stride) {
    LayerDesc d;
    d.kind = Kind::maxpool;
    d.rh = r;
    d.rw = r;
    d.stride = stride;
    return d;
}

LayerDesc act_of(Act a) {
    LayerDesc d;
    d.kind = Kind::activation;
    d.act = a;
    return d;
}

LayerDesc dense_of(std::size_t units) {
    LayerDesc d;
    d.kind = Kind::dense;
    d.units = units;
    return d;
}

LayerDesc output_of(std::size_t classes) {
    LayerDesc d;
    d.kind = Kind::output;
    d.units = classes;
    return d;
}

LayerDesc dropout_of(double p) {
    LayerDesc d;
    d.kind = Kind::dropout;
    d.p_retain = p;
    return d;
}

LayerDesc maxout_of(std::size_t k) {
    LayerDesc d;
    d.kind = Kind::maxout;
    d.pieces = k;
    return d;
}

std::vector<LayerDesc> plain_layers(const std::string& name) {
    if (name == "baseline") {
        return {input_of(3, 32, 32), dense_of(1000), act_of(Act::sigmoid), output_of(10)};
    }
    if (name == "initial_cnn") {
        return {input_of(1, 32, 32),
                conv_of(6, 5), act_of(Act::sigmoid), pool_of(2, 2),
                conv_of(12, 5), act_of(Act::sigmoid), pool_of(2, 2),
                dense_of(1000), act_of(Act::sigmoid), output_of(10)};
    }
    if (name == "model1") {
        return {input_of(3, 32, 32),
                conv_of(64, 5), act_of(Act::relu), pool_of(2, 2),
                conv_of(96, 5), act_of(Act::relu), pool_of(2, 2),
                conv_of(160, 5), act_of(Act::relu),
                dense_of(1000), act_of(Act::relu), output_of(10)};
    }
    if (name == "model2") {
        return {input_of(3, 32, 32),
                conv_of(96, 5), act_of(Act::relu), pool_of(3, 2),
                conv_of(192, 5), act_of(Act::relu), pool_of(3, 2),
                conv_of(192, 3), act_of(Act::relu), pool_of(2, 2),
                dense_of(500), act_of(Act::relu), output_of(10)};
    }
    if (name == "model3") {
        return {input_of(3, 32, 32),
                conv_of(64, 5), act_of(Act::relu), pool_of(2, 1),
                conv_of(64, 5), act_of(Act::relu), pool_of(3, 2),
                conv_of(128, 5), act_of(Act::relu), pool_of(3, 2),
                dense_of(3072), act_of(Act::relu),
                dense_of(2048), act_of(Act::relu), output_of(10)};
    }
    if (name == "model4") {
        return {input_of(3, 32, 32),
                conv_of(32, 8), act_of(Act::relu), pool_of(2, 1),
                conv_of(48, 5), act_of(Act::relu), pool_of(2, 1),
                conv_of(64, 3), act_of(Act::relu),
                conv_of(64, 3), act_of(Act::relu),
                conv_of(48, 3), act_of(Act::relu), pool_of(2, 1),
                dense_of(500), act_of(Act::relu),
                dense_of(500), act_of(Act::relu), output_of(10)};
    }
    throw config_error("unknown model '" + name + "'");
}

std::vector<LayerDesc> tiny_layers(const std::string& name) {
    if (name == "baseline") {
        return {input_of(6, 1, 1), dense_of(8), act_of(Act::sigmoid), output_of(10)};
    }
    if (name == "initial_cnn") {
        return {input_of(1, 12, 12),
                conv_of(3, 3), act_of(Act::sigmoid), pool_of(2, 2),
                conv_of(4, 2), act_of(Act::sigmoid), pool_of(2, 2),
                dense_of(8), act_of(Act::sigmoid), output_of(10)};
    }
    if (name == "model1") {
        return {input_of(3, 14, 14),
                conv_of(4, 3), act_of(Act::relu), pool_of(2, 2),
                conv_of(5, 3), act_of(Act::relu), pool_of(2, 2),
                conv_of(6, 2), act_of(Act::relu),
                dense_of(12), act_of(Act::relu), output_of(10)};
    }
    if (name == "model2") {
        return {input_of(3, 21, 21),
                conv_of(4, 3), act_of(Act::relu), pool_of(3, 2),
                conv_of(4, 3), act_of(Act::relu), pool_of(3, 2),
                conv_of(4, 2), act_of(Act::relu), pool_of(2, 2),
                dense_of(10), act_of(Act::relu), output_of(10)};
    }
    if (name == "model3") {
        return {input_of(3, 16, 16),
                conv_of(4, 3), act_of(Act::relu), pool_of(2, 1),
                conv_of(4, 3), act_of(Act::relu), pool_of(3, 2),
                conv_of(4, 3), act_of(Act::relu), pool_of(3, 2),
                dense_of(12), act_of(Act::relu),
                dense_of(10), act_of(Act::relu), output_of(10)};
    }
    if (name == "model4") {
        return {input_of(3, 14, 14),
                conv_of(3, 4), act_of(Act::relu), pool_of(2, 1),
                conv_of(3, 3), act_of(Act::relu), pool_of(2, 1),
                conv_of(4, 2), act_of(Act::relu),
                conv_of(4, 2), act_of(Act::relu),
                conv_of(3, 2), act_of(Act::relu), pool_of(2, 1),
                dense_of(10), act_of(Act::relu),
                dense_of(10), act_of(Act::relu), output_of(10)};
    }
    throw config_error("unknown model '" + name + "'");
}

// Widen conv layers by conv_k and hidden dense layers by dense_k, replacing
// the activation that follows each with a maxout over the new pieces.
void widen_to_maxout(std::vector<LayerDesc>& layers, std::size_t conv_k, std::size_t dense_k) {
    std::size_t last_param = layers.size();  // index of nearest conv/dense below
    for (std::size_t i = 0; i < layers.size(); ++i) {
        LayerDesc& d = layers[i];
        if (d.kind == Kind::conv || d.kind == Kind::dense) {
            last_param = i;
        } else if (d.kind == Kind::activation && last_param < i) {
            LayerDesc& p = layers[last_param];
            const std::size_t k = p.kind == Kind::conv ? conv_k : dense_k;
            if (p.kind == Kind::conv) {
                p.maps *= k;
            } else {
                p.units *= k;
            }
            d = maxout_of(k);
            last_param = layers.size();
        }
    }
}

// Retention 0.8 ahead of the first layer, 0.5 after each hidden dense
// nonlinearity.
void insert_dropout(std::vector<LayerDesc>& layers) {
    std::vector<LayerDesc> out;
    out.reserve(layers.size() + 4);
    std::size_t last_param_kind_dense = 0;  // 0 none, 1 conv, 2 dense
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerDesc& d = layers[i];
        out.push_back(d);
        if (d.kind == Kind::input) {
            out.push_back(dropout_of(0.8));
        } else if (d.kind == Kind::conv) {
            last_param_kind_dense = 1;
        } else if (d.kind == Kind::dense) {
            last_param_kind_dense = 2;
        } else if ((d.kind == Kind::activation || d.kind == Kind::maxout) &&
                   last_param_kind_dense == 2) {
            out.push_back(dropout_of(0.5));
            last_param_kind_dense = 0;
        }
    }
    layers = std::move(out);
}

void assign_caps(std::vector<LayerDesc>& layers) {
    const double cap = std::sqrt(15.0) / 4.0;
    bool first_conv = true;
    for (LayerDesc& d : layers) {
        if (d.kind == Kind::conv) {
            d.norm_cap = first_conv ? 0.9 : cap;
            first_conv = false;
        } else if (d.kind == Kind::dense || d.kind == Kind::output) {
            d.norm_cap = cap;
        }
    }
}

ModelSpec assemble(const std::string& name, Variant variant, std::vector<LayerDesc> layers) {
    if (variant == Variant::maxout) widen_to_maxout(layers, 2, 5);
    if (variant != Variant::plain) insert_dropout(layers);
    if (name.rfind("model", 0) == 0) assign_caps(layers);
    ModelSpec spec;
    spec.name = variant == Variant::plain ? name : name + "-" + variant_name(variant);
    spec.layers = std::move(layers);
    infer_shapes(spec);  // reject inconsistent builtins immediately
    return spec;
}

std::size_t flat_size(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t v : shape) n *= v;
    return n;
}

} // namespace

Variant parse_variant(const std::string& s) {
    if (s == "plain") return Variant::plain;
    if (s == "dropout") return Variant::dropout;
    if (s == "maxout") return Variant::maxout;
    throw config_error("unknown variant '" + s + "' (want plain, dropout or maxout)");
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::plain: return "plain";
        case Variant::dropout: return "dropout";
        default: return "maxout";
    }
}

ModelSpec builtin(const std::string& name, Variant variant) {
    return assemble(name, variant, plain_layers(name));
}

ModelSpec tiny(const std::string& name, Variant variant) {
    ModelSpec spec = assemble(name, variant, tiny_layers(name));
    spec.name = "tiny-" + spec.name;
    return spec;
}

bool is_builtin(const std::string& name) {
    for (const auto& n : builtin_names()) {
        if (n == name) return true;
    }
    return false;
}

std::vector<std::string> builtin_names() {
    return {"baseline", "initial_cnn", "model1", "model2", "model3", "model4"};
}

std::string LayerDesc::str() const {
    std::string cap = norm_cap > 0.0 ? " cap " + format_double(norm_cap) : "";
    switch (kind) {
        case Kind::input:
            return "input " + std::to_string(maps) + "x" + std::to_string(kh) + "x" +
                   std::to_string(kw);
        case Kind::conv:
            return "conv " + std::to_string(maps) + " " + std::to_string(kh) + "x" +
                   std::to_string(kw) + cap;
        case Kind::maxpool:
            return "maxpool " + std::to_string(rh) + "x" + std::to_string(rw) + " stride " +
                   std::to_string(stride);
        case Kind::activation:
            return act == Act::relu ? "relu" : act == Act::sigmoid ? "sigmoid" : "tanh";
        case Kind::maxout:
            return "maxout " + std::to_string(pieces);
        case Kind::dropout:
            return "dropout " + format_double(p_retain);
        case Kind::dense:
            return "dense " + std::to_string(units) + cap;
        default:
            return "output " + std::to_string(units) + cap;
    }
}

LayerDesc parse_layer(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> tok;
    std::string t;
    while (in >> t) tok.push_back(t);
    auto fail = [&](const std::string& why) -> LayerDesc {
        throw config_error("bad layer '" + line + "': " + why);
    };
    if (tok.empty()) return fail("empty");

    auto num = [&](const std::string& s) -> std::size_t {
        std::size_t pos = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(s, &pos);
        } catch (const std::exception&) {
            fail("expected a number, got '" + s + "'");
        }
        if (pos != s.size()) fail("expected a number, got '" + s + "'");
        return static_cast<std::size_t>(v);
    };
    auto pair2 = [&](const std::string& s, std::size_t& a, std::size_t& b) {
        const auto x = s.find('x');
        if (x == std::string::npos) fail("expected AxB, got '" + s + "'");
        a = num(s.substr(0, x));
        b = num(s.substr(x + 1));
    };
    // strip a trailing "cap <v>"
    double cap = 0.0;
    if (tok.size() >= 2 && tok[tok.size() - 2] == "cap") {
        cap = parse_double(tok.back());
        tok.pop_back();
        tok.pop_back();
    }
    auto want = [&](std::size_t n) {
        if (tok.size() != n) fail("wrong argument count");
    };

    LayerDesc d;
    const std::string& head = tok[0];
    if (head == "input") {
        want(2);
        const auto x1 = tok[1].find('x');
        const auto x2 = x1 == std::string::npos ? x1 : tok[1].find('x', x1 + 1);
        if (x2 == std::string::npos) fail("expected CxHxW");
        d = input_of(num(tok[1].substr(0, x1)), num(tok[1].substr(x1 + 1, x2 - x1 - 1)),
                     num(tok[1].substr(x2 + 1)));
    } else if (head == "conv") {
        want(3);
        std::size_t kh = 0, kw = 0;
        pair2(tok[2], kh, kw);
        d = conv_of(num(tok[1]), kh);
        d.kw = kw;
    } else if (head == "maxpool") {
        want(4);
        if (tok[2] != "stride") fail("expected 'stride'");
        std::size_t rh = 0, rw = 0;
        pair2(tok[1], rh, rw);
        d = pool_of(rh, num(tok[3]));
        d.rw = rw;
    } else if (head == "relu" || head == "sigmoid" || head == "tanh") {
        want(1);
        d = act_of(head == "relu" ? Act::relu : head == "sigmoid" ? Act::sigmoid : Act::tanh);
    } else if (head == "maxout") {
        want(2);
        d = maxout_of(num(tok[1]));
    } else if (head == "dropout") {
        want(2);
        d = dropout_of(parse_double(tok[1]));
    } else if (head == "dense") {
        want(2);
        d = dense_of(num(tok[1]));
    } else if (head == "output") {
        want(2);
        d = output_of(num(tok[1]));
    } else {
        fail("unknown layer kind '" + head + "'");
    }
    d.norm_cap = cap;
    return d;
}

std::vector<std::vector<std::size_t>> infer_shapes(const ModelSpec& spec) {
    const auto& layers = spec.layers;
    if (layers.empty() || layers.front().kind != Kind::input) {
        throw config_error("model must start with an input layer");
    }
    auto fail = [&](std::size_t i, const std::string& why) {
        throw config_error("layer " + std::to_string(i) + " (" + layers[i].str() + "): " + why);
    };

    std::vector<std::vector<std::size_t>> chain;
    const LayerDesc& in = layers.front();
    if (in.maps == 0 || in.kh == 0 || in.kw == 0) fail(0, "zero input dimension");
    std::vector<std::size_t> cur = {in.maps, in.kh, in.kw};
    chain.push_back(cur);

    bool saw_output = false;
    for (std::size_t i = 1; i < layers.size(); ++i) {
        const LayerDesc& d = layers[i];
        if (saw_output) fail(i, "output must be the last layer");
        switch (d.kind) {
            case Kind::input:
                fail(i, "second input layer");
                break;
            case Kind::conv: {
                if (cur.size() != 3) fail(i, "needs image input, have flat features");
                if (d.maps == 0 || d.kh == 0 || d.kw == 0) fail(i, "zero dimension");
                if (d.kh > cur[1] || d.kw > cur[2]) {
                    fail(i, "kernel exceeds input " + std::to_string(cur[1]) + "x" +
                               std::to_string(cur[2]));
                }
                cur = {d.maps, cur[1] - d.kh + 1, cur[2] - d.kw + 1};
                break;
            }
            case Kind::maxpool: {
                if (cur.size() != 3) fail(i, "needs image input, have flat features");
                if (d.rh == 0 || d.rw == 0 || d.stride == 0) fail(i, "zero dimension");
                if (d.rh > cur[1] || d.rw > cur[2]) {
                    fail(i, "region exceeds input " + std::to_string(cur[1]) + "x" +
                               std::to_string(cur[2]));
                }
                cur = {cur[0], (cur[1] - d.rh) / d.stride + 1, (cur[2] - d.rw) / d.stride + 1};
                break;
            }
            case Kind::activation:
                break;
            case Kind::maxout: {
                if (d.pieces < 1) fail(i, "needs at least 1 piece");
                std::size_t& units = cur[0];  // channels when image, features when flat
                if (units % d.pieces != 0) {
                    fail(i, std::to_string(units) + " channels not divisible by " +
                               std::to_string(d.pieces) + " pieces");
                }
                units /= d.pieces;
                break;
            }
            case Kind::dropout:
                if (!(d.p_retain > 0.0 && d.p_retain <= 1.0)) {
                    fail(i, "retention probability must lie in (0,1]");
                }
                break;
            case Kind::dense:
            case Kind::output: {
                if (d.units == 0) fail(i, "zero units");
                cur = {d.units};
                if (d.kind == Kind::output) saw_output = true;
                break;
            }
        }
        chain.push_back(cur);
    }
    if (!saw_output) throw config_error("model must end with an output layer");
    return chain;
}

Network build_network(const ModelSpec& spec, const InitPolicy& policy, std::uint64_t seed) {
    const auto chain = infer_shapes(spec);
    Network net;
    Rng root(seed);

    for (std::size_t i = 1; i < spec.layers.size(); ++i) {
        const LayerDesc& d = spec.layers[i];
        const std::vector<std::size_t>& prev = chain[i - 1];
        switch (d.kind) {
            case Kind::conv: {
                auto layer = std::make_unique<Conv2d>(prev[0], d.maps, d.kh, d.kw);
                Rng rng = root.fork(i);
                Tensor& w = layer->weights().value;
                for (std::size_t j = 0; j < w.size(); ++j) {
                    w.data()[j] = rng.uniform(-policy.conv_range, policy.conv_range);
                }
                layer->weights().norm_cap = d.norm_cap;
                net.add(std::move(layer));
                break;
            }
            case Kind::dense:
            case Kind::output: {
                auto layer = std::make_unique<Dense>(flat_size(prev), d.units);
                Rng rng = root.fork(i);
                Tensor& w = layer->weights().value;
                for (std::size_t j = 0; j < w.size(); ++j) {
                    w.data()[j] = rng.uniform(-policy.dense_range, policy.dense_range);
                }
                layer->weights().norm_cap = d.norm_cap;
                net.add(std::move(layer));
                break;
            }
            case Kind::maxpool:
                net.add(std::make_unique<MaxPool>(d.rh, d.rw, d.stride));
                break;
            case Kind::activation:
                net.add(std::make_unique<Activation>(d.act));
                break;
            case Kind::maxout:
                net.add(std::make_unique<Maxout>(d.pieces));
                break;
            case Kind::dropout:
                net.add(std::make_unique<Dropout>(d.p_retain));
                break;
            default:
                break;
        }
    }
    net.seed_dropout(root.fork(0));
    return net;
}

TrainSchedule builtin_schedule(const std::string& name) {
    TrainSchedule s;
    if (name == "baseline") {
        s.base_lr = 0.12;
        s.lr_floor_factor = 1.0;
        s.lr_saturate_epoch = 0;
        s.momentum_kind = TrainSchedule::Momentum::classical;
        s.momentum_start = s.momentum_end = 0.9;
        s.momentum_saturate_epoch = 0;
        s.conv_grad_scale = 1.0;
    } else if (name == "initial_cnn") {
        s.base_lr = 1.0;
        s.lr_floor_factor = 1.0;
        s.lr_saturate_epoch = 0;
        s.momentum_kind = TrainSchedule::Momentum::classical;
        s.momentum_start = s.momentum_end = 0.0;
        s.momentum_saturate_epoch = 0;
        s.conv_grad_scale = 1.0;
    } else if (!is_builtin(name)) {
        throw config_error("unknown model '" + name + "'");
    }
    return s;
}

} // namespace convnet
