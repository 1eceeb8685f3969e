#ifndef CONVNET_DATASET_HPP
#define CONVNET_DATASET_HPP

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "convnet/rng.hpp"
#include "convnet/tensor.hpp"

namespace convnet {

extern const std::array<std::string, 10> kClassNames;

// Images stay [N,C,H,W] doubles; raw loads hold byte values 0..255.
struct LabeledDataset {
    Tensor images;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    LabeledDataset subset(const std::vector<std::size_t>& indices) const;
};

// Reads binary batches: each 3073-byte record is a label byte followed by
// 3072 pixel bytes, planar RGB, rows major. Multiple files concatenate in
// the order given.
LabeledDataset load_cifar10(const std::vector<std::string>& paths);

// Inverse of load_cifar10 for one file; values must be integers in [0,255].
void write_cifar10(const LabeledDataset& ds, const std::string& path);

// Seeded-shuffle split into floor(N*fraction) train and the rest validation.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds, double fraction,
                                                std::uint64_t seed);

// CSV `id,label` with class-name labels.
void write_predictions(const std::vector<std::size_t>& ids, const std::vector<int>& labels,
                       const std::string& path);

// Shuffled mini-batches; a fresh permutation per epoch, short final batch
// kept. Exhausts after ceil(N/batch_size) batches; reset() starts the next
// epoch.
class BatchIterator {
public:
    BatchIterator(const LabeledDataset& ds, std::size_t batch_size, std::uint64_t seed);

    bool next(Tensor& images, std::vector<int>& labels);
    void reset();

    std::size_t batches_per_epoch() const;
    Rng& rng() { return rng_; }

private:
    const LabeledDataset* ds_;
    std::size_t batch_size_;
    Rng rng_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
};

// Projection onto the two leading principal components of a centered,
// possibly subsampled (seeded, cap rows) copy of the data. Component 0
// carries the larger variance; each eigenvector's largest-magnitude entry
// is made positive. Returns [M,2] scores and the matching labels.
std::pair<Tensor, std::vector<int>> pca2(const LabeledDataset& ds, std::size_t sample_cap,
                                         std::uint64_t seed);

} // namespace convnet

#endif
