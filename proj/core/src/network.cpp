#include <algorithm>

#include "convnet/network.hpp"

namespace convnet {

Layer& Network::add(std::unique_ptr<Layer> layer) {
    layers_.push_back(std::move(layer));
    return *layers_.back();
}

Tensor Network::forward(const Tensor& x, bool training) {
    Tensor cur = x;
    for (auto& layer : layers_) cur = layer->forward(cur, training);
    return cur;
}

Tensor Network::backward(const Tensor& d_logits) {
    Tensor cur = d_logits;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
    return cur;
}

std::vector<ParamGroup*> Network::param_groups() {
    std::vector<ParamGroup*> all;
    for (auto& layer : layers_) {
        for (ParamGroup* g : layer->param_groups()) all.push_back(g);
    }
    return all;
}

std::size_t Network::param_count() {
    std::size_t n = 0;
    for (ParamGroup* g : param_groups()) n += g->value.size();
    return n;
}

double Network::kink_margin() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& layer : layers_) m = std::min(m, layer->kink_margin());
    return m;
}

void Network::seed_dropout(const Rng& root) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (auto* d = dynamic_cast<Dropout*>(layers_[i].get())) d->reset_rng(root.fork(i));
    }
}

void Network::freeze_dropout(bool on) {
    for (auto& layer : layers_) {
        if (auto* d = dynamic_cast<Dropout*>(layer.get())) d->freeze(on);
    }
}

std::vector<Dropout*> Network::dropout_layers() {
    std::vector<Dropout*> out;
    for (auto& layer : layers_) {
        if (auto* d = dynamic_cast<Dropout*>(layer.get())) out.push_back(d);
    }
    return out;
}

std::string Network::describe() const {
    std::string s;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        s += "  " + std::to_string(i) + ": " + layers_[i]->describe() + "\n";
    }
    return s;
}

} // namespace convnet
