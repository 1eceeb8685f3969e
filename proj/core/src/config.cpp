#include <fstream>
#include <sstream>

#include "convnet/config.hpp"
#include "convnet/errors.hpp"
#include "convnet/tensor_io.hpp"

namespace convnet {

std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 14695981039346656037ULL;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::string fnv1a64_hex(const std::string& text) {
    std::uint64_t h = fnv1a64(text.data(), text.size());
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, const std::string& where) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw config_error(where + ": expected a boolean, got '" + v + "'");
}

double parse_num(const std::string& v, const std::string& where) {
    try {
        return parse_double(v);
    } catch (const std::exception&) {
        throw config_error(where + ": expected a number, got '" + v + "'");
    }
}

std::size_t parse_count(const std::string& v, const std::string& where) {
    const double d = parse_num(v, where);
    if (d < 0 || d != static_cast<double>(static_cast<std::size_t>(d))) {
        throw config_error(where + ": expected a non-negative integer, got '" + v + "'");
    }
    return static_cast<std::size_t>(d);
}

std::uint64_t parse_seed(const std::string& v, const std::string& where) {
    try {
        return std::stoull(v);
    } catch (const std::exception&) {
        throw config_error(where + ": expected an unsigned integer, got '" + v + "'");
    }
}

} // namespace

RunConfig RunConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str(), path);
}

RunConfig RunConfig::parse_text(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    std::stringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(lineno);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw config_error(where + ": expected 'key = value', got '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw config_error(where + ": empty key");
        if (value.empty()) throw config_error(where + ": empty value for '" + key + "'");

        if (key == "data") cfg.data.push_back(value);
        else if (key == "val_data") cfg.val_data.push_back(value);
        else if (key == "test_data") cfg.test_data.push_back(value);
        else if (key == "val_fraction") cfg.val_fraction = parse_num(value, where);
        else if (key == "stats") cfg.stats_path = value;
        else if (key == "preprocess") cfg.pipeline.kind = value;
        else if (key == "grayscale") cfg.pipeline.to_gray = parse_bool(value, where);
        else if (key == "rescale_first") cfg.pipeline.rescale_first = parse_bool(value, where);
        else if (key == "fudge") cfg.pipeline.fudge = parse_num(value, where);
        else if (key == "model") cfg.model = value;
        else if (key == "variant") cfg.variant = parse_variant(value);
        else if (key == "layer") cfg.layer_lines.push_back(value);
        else if (key == "seed") cfg.seed = parse_seed(value, where);
        else if (key == "max_epochs") cfg.max_epochs = parse_count(value, where);
        else if (key == "early_stop_window") cfg.early_stop_window = parse_count(value, where);
        else if (key == "base_lr") cfg.base_lr = parse_num(value, where);
        else if (key == "lr_floor_factor") cfg.lr_floor_factor = parse_num(value, where);
        else if (key == "lr_saturate_epoch") cfg.lr_saturate_epoch = parse_count(value, where);
        else if (key == "momentum") cfg.momentum_kind = value;
        else if (key == "momentum_start") cfg.momentum_start = parse_num(value, where);
        else if (key == "momentum_end") cfg.momentum_end = parse_num(value, where);
        else if (key == "momentum_saturate_epoch")
            cfg.momentum_saturate_epoch = parse_count(value, where);
        else if (key == "conv_grad_scale") cfg.conv_grad_scale = parse_num(value, where);
        else if (key == "batch_size") cfg.batch_size = parse_count(value, where);
        else if (key == "dict_patch") cfg.dict_patch = parse_count(value, where);
        else if (key == "dict_centroids") cfg.dict_centroids = parse_count(value, where);
        else if (key == "dict_iters") cfg.dict_iters = parse_count(value, where);
        else if (key == "dict_patches") cfg.dict_patches = parse_count(value, where);
        else if (key == "dict_alpha") cfg.dict_alpha = parse_num(value, where);
        else throw config_error(where + ": unknown key '" + key + "'");
    }
    return cfg;
}

ModelSpec RunConfig::resolve_model() const {
    if (!model.empty() && !layer_lines.empty()) {
        throw config_error("set either model= or layer= lines, not both");
    }
    if (!model.empty()) return builtin(model, variant);
    if (layer_lines.empty()) {
        throw config_error("config names no model: set model= or give layer= lines");
    }
    if (variant != Variant::plain) {
        throw config_error(
            "variant= applies to builtin models; inline layer specs place dropout/maxout "
            "explicitly");
    }
    ModelSpec spec;
    spec.name = "custom";
    for (const std::string& line : layer_lines) spec.layers.push_back(parse_layer(line));
    infer_shapes(spec); // validates the chain
    return spec;
}

TrainSchedule RunConfig::resolve_schedule() const {
    TrainSchedule s;
    if (!model.empty()) {
        std::string base = model;
        if (base.rfind("tiny-", 0) == 0) base = base.substr(5);
        s = builtin_schedule(base);
    }
    if (base_lr) s.base_lr = *base_lr;
    if (lr_floor_factor) s.lr_floor_factor = *lr_floor_factor;
    if (lr_saturate_epoch) s.lr_saturate_epoch = *lr_saturate_epoch;
    if (momentum_kind) {
        if (*momentum_kind == "nesterov") s.momentum_kind = TrainSchedule::Momentum::nesterov;
        else if (*momentum_kind == "classical")
            s.momentum_kind = TrainSchedule::Momentum::classical;
        else throw config_error("momentum must be nesterov or classical, got '" +
                                *momentum_kind + "'");
    }
    if (momentum_start) s.momentum_start = *momentum_start;
    if (momentum_end) s.momentum_end = *momentum_end;
    if (momentum_saturate_epoch) s.momentum_saturate_epoch = *momentum_saturate_epoch;
    if (conv_grad_scale) s.conv_grad_scale = *conv_grad_scale;
    if (batch_size) s.batch_size = *batch_size;
    if (s.base_lr <= 0) throw config_error("base_lr must be positive");
    if (s.batch_size == 0) throw config_error("batch_size must be positive");
    if (s.momentum_start < 0 || s.momentum_start >= 1 || s.momentum_end < 0 ||
        s.momentum_end >= 1) {
        throw config_error("momentum coefficients must lie in [0,1)");
    }
    return s;
}

std::string RunConfig::canonical() const {
    const ModelSpec spec = resolve_model();
    const TrainSchedule s = resolve_schedule();
    std::string out;
    const auto kv = [&out](const std::string& k, const std::string& v) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    };
    if (!model.empty()) {
        kv("model", model);
        kv("variant", variant_name(variant));
        out += "# resolved: " + spec.name + "\n";
        for (const LayerDesc& d : spec.layers) out += "#   " + d.str() + "\n";
    } else {
        for (const LayerDesc& d : spec.layers) kv("layer", d.str());
    }
    kv("seed", std::to_string(seed));
    // max_epochs and early_stop_window only bound how long the run goes, so
    // they stay out of the identity; a checkpoint resumes under either.
    kv("batch_size", std::to_string(s.batch_size));
    kv("base_lr", format_double(s.base_lr));
    kv("lr_floor_factor", format_double(s.lr_floor_factor));
    kv("lr_saturate_epoch", std::to_string(s.lr_saturate_epoch));
    kv("momentum",
       s.momentum_kind == TrainSchedule::Momentum::nesterov ? "nesterov" : "classical");
    kv("momentum_start", format_double(s.momentum_start));
    kv("momentum_end", format_double(s.momentum_end));
    kv("momentum_saturate_epoch", std::to_string(s.momentum_saturate_epoch));
    kv("conv_grad_scale", format_double(s.conv_grad_scale));
    kv("preprocess", pipeline.kind);
    kv("grayscale", pipeline.to_gray ? "1" : "0");
    kv("rescale_first", pipeline.rescale_first ? "1" : "0");
    kv("fudge", format_double(pipeline.fudge));
    kv("val_fraction", format_double(val_fraction));
    for (const std::string& p : data) kv("data", p);
    for (const std::string& p : val_data) kv("val_data", p);
    for (const std::string& p : test_data) kv("test_data", p);
    if (!stats_path.empty()) kv("stats", stats_path);
    kv("dict_patch", std::to_string(dict_patch));
    kv("dict_centroids", std::to_string(dict_centroids));
    kv("dict_iters", std::to_string(dict_iters));
    kv("dict_patches", std::to_string(dict_patches));
    kv("dict_alpha", format_double(dict_alpha));
    return out;
}

std::string RunConfig::hash() const { return fnv1a64_hex(canonical()); }

} // namespace convnet
