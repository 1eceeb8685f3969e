#pragma once

#include <cstdint>

#include "convnet/dataset.hpp"

namespace convnet {

// Procedurally generated image set in the same layout as the CIFAR-10 loader
// produces: [N,3,32,32] byte-valued doubles plus labels. Each class is a
// distinct geometric pattern, so the classes stay separable after grayscale
// conversion; a per-image palette and translation make the task non-trivial,
// and color carries no class signal.
struct SynthOptions {
    std::size_t count = 0;
    int classes = 10; // 2..10
    std::uint64_t seed = 1;
    double noise = 0.12;   // uniform pixel noise amplitude, fraction of 255
    int max_shift = 5;     // random translation in pixels, per axis
    int clutter = 6;       // distractor blobs per image, foreground-bright
    bool vary_gain = true; // random per-image palette (contrast/brightness)
};

LabeledDataset make_synth(const SynthOptions& opts);

} // namespace convnet
