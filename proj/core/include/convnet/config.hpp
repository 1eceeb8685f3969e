#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "convnet/model.hpp"
#include "convnet/optimizer.hpp"
#include "convnet/preprocess.hpp"

namespace convnet {

std::uint64_t fnv1a64(const void* data, std::size_t len);
std::string fnv1a64_hex(const std::string& text);

// Line-oriented `key = value` run description. Repeated keys: data, val_data,
// test_data, layer. '#' starts a comment. Unknown keys are rejected.
struct RunConfig {
    std::vector<std::string> data;     // training batch files
    std::vector<std::string> val_data; // explicit validation files (else split)
    std::vector<std::string> test_data;
    double val_fraction = 0.1;
    std::string stats_path;

    PreprocPipeline pipeline;

    std::string model; // builtin name; empty when layer lines are given
    Variant variant = Variant::plain;
    std::vector<std::string> layer_lines;

    std::uint64_t seed = 1;
    std::size_t max_epochs = 0; // 0 = early stopping decides
    std::size_t early_stop_window = 20;

    std::optional<double> base_lr;
    std::optional<double> lr_floor_factor;
    std::optional<std::size_t> lr_saturate_epoch;
    std::optional<std::string> momentum_kind; // nesterov | classical
    std::optional<double> momentum_start;
    std::optional<double> momentum_end;
    std::optional<std::size_t> momentum_saturate_epoch;
    std::optional<double> conv_grad_scale;
    std::optional<std::size_t> batch_size;

    std::size_t dict_patch = 6;
    std::size_t dict_centroids = 400;
    std::size_t dict_iters = 10;
    std::size_t dict_patches = 100000;
    double dict_alpha = 0.25;

    static RunConfig parse_file(const std::string& path);
    static RunConfig parse_text(const std::string& text, const std::string& origin);

    ModelSpec resolve_model() const;
    TrainSchedule resolve_schedule() const;

    // Stable textual dump of the fully resolved run; hash() is its fnv1a64.
    std::string canonical() const;
    std::string hash() const;
};

} // namespace convnet
