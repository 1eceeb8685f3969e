#ifndef CONVNET_ERRORS_HPP
#define CONVNET_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace convnet {

// Thrown on malformed configuration: unknown keys, bad model specs,
// infeasible shape chains. CLI exit code 1.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown on unreadable or malformed input data (dataset files, stats,
// checkpoints). CLI exit code 2.
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown on numeric failure: NaN/Inf in a training step, non-normalized
// probability rows. CLI exit code 3.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor contract violations: mismatched shapes, bad axes, out-of-bounds
// slices. These indicate caller bugs rather than bad user input.
struct shape_error : std::logic_error {
    using std::logic_error::logic_error;
};

} // namespace convnet

#endif
