#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "convnet/errors.hpp"
#include "convnet/rng.hpp"
#include "convnet/synth.hpp"

namespace convnet {

namespace {

// Binary template masks on coordinates centered at the canvas middle.
bool template_hit(int cls, int u, int v) {
    const int au = std::abs(u);
    const int av = std::abs(v);
    const int rr = u * u + v * v;
    switch (cls) {
    case 0: return rr <= 49;                                            // disk
    case 1: return rr >= 25 && rr <= 81;                                // ring
    case 2: return au <= 10 && av <= 10 && ((u + 16) / 3) % 2 == 0;     // h stripes
    case 3: return au <= 10 && av <= 10 && ((v + 16) / 3) % 2 == 0;     // v stripes
    case 4: return au <= 11 && av <= 11 && (std::abs(u - v) <= 2 || std::abs(u + v) <= 2); // X
    case 5: return au <= 7 && av <= 7;                                  // square
    case 6: return std::max(au, av) >= 5 && std::max(au, av) <= 8;      // frame
    case 7: return u >= -8 && u <= 8 && av * 10 <= (u + 8) * 7;         // wedge
    case 8: return au <= 12 && av <= 12 && ((u + 16) / 4 + (v + 16) / 4) % 2 == 0; // checker
    default: return std::abs(u - v) <= 2 && au <= 14 && av <= 14;       // diagonal bar
    }
}

} // namespace

LabeledDataset make_synth(const SynthOptions& opts) {
    if (opts.count == 0) throw config_error("synthetic set needs a positive count");
    if (opts.classes < 2 || opts.classes > 10) {
        throw config_error("synthetic set supports 2..10 classes, got " +
                           std::to_string(opts.classes));
    }
    if (opts.max_shift < 0 || opts.max_shift > 8) {
        throw config_error("synthetic shift must lie in [0,8]");
    }

    const std::size_t n = opts.count;
    const int side = 32;
    LabeledDataset ds;
    ds.images = Tensor({n, 3, static_cast<std::size_t>(side), static_cast<std::size_t>(side)});
    ds.labels.resize(n);
    Rng rng(opts.seed);

    for (std::size_t i = 0; i < n; ++i) {
        const int cls = static_cast<int>(i % static_cast<std::size_t>(opts.classes));
        ds.labels[i] = cls;
        const int dy = opts.max_shift == 0
                           ? 0
                           : static_cast<int>(rng.uniform_index(2 * opts.max_shift + 1)) -
                                 opts.max_shift;
        const int dx = opts.max_shift == 0
                           ? 0
                           : static_cast<int>(rng.uniform_index(2 * opts.max_shift + 1)) -
                                 opts.max_shift;

        // The palette is drawn per image, so color carries no class signal;
        // only the template shape separates the classes.
        double fg[3], bg[3];
        const double f = opts.vary_gain ? rng.uniform(140.0, 235.0) : 200.0;
        const double b = opts.vary_gain ? rng.uniform(25.0, 95.0) : 40.0;
        for (int ch = 0; ch < 3; ++ch) {
            fg[ch] = f + (opts.vary_gain ? rng.uniform(-30.0, 30.0) : 0.0);
            bg[ch] = b + (opts.vary_gain ? rng.uniform(-30.0, 30.0) : 0.0);
        }

        double* img = ds.images.data() + i * 3 * side * side;
        for (int r = 0; r < side; ++r) {
            for (int c = 0; c < side; ++c) {
                const bool hit = template_hit(cls, r - side / 2 - dy, c - side / 2 - dx);
                for (int ch = 0; ch < 3; ++ch) {
                    double v = hit ? fg[ch] : bg[ch];
                    v += rng.uniform(-opts.noise * 255.0, opts.noise * 255.0);
                    v = std::round(std::clamp(v, 0.0, 255.0));
                    img[ch * side * side + r * side + c] = v;
                }
            }
        }
    }
    return ds;
}

} // namespace convnet
