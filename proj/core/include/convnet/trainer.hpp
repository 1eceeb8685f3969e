#ifndef CONVNET_TRAINER_HPP
#define CONVNET_TRAINER_HPP

#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "convnet/dataset.hpp"
#include "convnet/loss.hpp"
#include "convnet/network.hpp"
#include "convnet/optimizer.hpp"

namespace convnet {

struct CurveRow {
    std::size_t epoch = 0;
    double train_loss = 0.0, train_error = 0.0;
    double val_loss = 0.0, val_error = 0.0;
    double lr = 0.0, momentum = 0.0;
    double seconds = 0.0;
};

// CSV columns: epoch,train_loss,train_error,val_loss,val_error,lr,momentum,
// seconds. Doubles round-trip bit-exactly.
struct LearningCurve {
    std::vector<CurveRow> rows;

    void save(const std::string& path) const;
    static LearningCurve load(const std::string& path);
};

// Keeps the last `window` validation misclassification errors; stops when
// the window is full and its oldest entry is strictly lower than every
// later one. Ties keep training.
class EarlyStop {
public:
    explicit EarlyStop(std::size_t window = 20) : window_(window) {}

    void push(double val_error);
    bool should_stop() const;

    std::size_t window() const { return window_; }
    const std::deque<double>& values() const { return buf_; }
    void restore(const std::vector<double>& oldest_first);

private:
    std::size_t window_;
    std::deque<double> buf_;
};

// Everything needed to resume training bitwise or to evaluate the best
// network found. Batch order and dropout streams are derived from (seed,
// epoch) counters, so those two values are the complete RNG state.
struct Checkpoint {
    std::size_t epoch = 0;  // completed epochs
    std::uint64_t seed = 0;
    std::string config_hash;
    std::vector<Tensor> params;
    std::vector<Tensor> velocities;
    bool has_best = false;
    std::size_t best_epoch = 0;
    double best_val_error = 1.0;
    std::vector<Tensor> best_params;
    std::vector<double> early_stop;  // oldest first
    std::vector<std::pair<std::string, std::string>> extra_meta;

    void save(const std::string& path) const;  // write-temp-then-rename
    static Checkpoint load(const std::string& path);
};

std::vector<Tensor> snapshot_params(Network& net);
void restore_params(Network& net, const std::vector<Tensor>& params);

struct TrainOptions {
    std::uint64_t seed = 1;
    std::size_t max_epochs = 0;  // 0: early stopping only
    std::size_t early_stop_window = 20;
    std::string curve_path;       // append + flush a row per epoch when set
    std::string checkpoint_path;  // rewritten per epoch when set
    std::string config_hash;
    std::vector<std::pair<std::string, std::string>> extra_meta;
    bool measure_time = true;  // false writes 0s timing for byte-stable output
    bool verbose = false;
    std::function<void(std::size_t epoch, std::size_t batch)> on_step;  // after each update
};

struct TrainResult {
    LearningCurve curve;
    std::size_t epochs_run = 0;
    bool stopped_early = false;
    std::size_t best_epoch = 0;
    double best_val_error = 1.0;
    Checkpoint checkpoint;
};

// The mini-batch loop: per epoch, shuffle (stream forked from seed and
// epoch), step the optimizer over every batch, evaluate train/validation in
// inference mode, append a curve row, track the best validation error and
// the early-stop window. Non-finite activations abort with a numeric_error
// naming epoch, batch and layer; the curve written so far survives.
TrainResult train(Network& net, const TrainSchedule& schedule, const TrainOptions& opts,
                  const LabeledDataset& train_set, const LabeledDataset& val_set,
                  const Checkpoint* resume = nullptr);

// Inference-mode loss/error over the set, batched; draws no randomness.
LossReport evaluate(Network& net, const LabeledDataset& ds, std::size_t batch_size);

// Inference-mode argmax labels in dataset order.
std::vector<int> predict(Network& net, const Tensor& images, std::size_t batch_size);

struct GradCheckEntry {
    std::string tensor;
    double max_rel_err = 0.0;
    bool pass = false;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    bool pass = false;
    double worst = 0.0;
    std::string worst_tensor;
};

// Central-difference check of every parameter tensor and the input against
// backprop, on a training-mode forward with dropout masks frozen. Inputs
// sitting closer than margin to a relu/max switching surface are
// re-jittered (seeded) before checking. rel err uses
// |a-n| / max(|a|,|n|,1e-6).
GradCheckReport gradcheck(Network& net, Tensor x, const std::vector<int>& labels,
                          double h = 1e-5, double tolerance = 1e-4,
                          std::uint64_t jitter_seed = 1, double margin = 1e-3);

} // namespace convnet

#endif
