#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>

#include "convnet/dataset.hpp"
#include "convnet/errors.hpp"

namespace convnet {

const std::array<std::string, 10> kClassNames = {
    "airplane", "automobile", "bird", "cat",  "deer",
    "dog",      "frog",       "horse", "ship", "truck",
};

namespace {
constexpr std::size_t kRecordBytes = 3073;
constexpr std::size_t kImageBytes = 3072;

std::vector<unsigned char> read_all(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open " + path);
    in.seekg(0, std::ios::end);
    const auto len = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<unsigned char> bytes(static_cast<std::size_t>(len));
    if (len > 0) in.read(reinterpret_cast<char*>(bytes.data()), len);
    if (!in) throw data_error("failed reading " + path);
    return bytes;
}
} // namespace

LabeledDataset LabeledDataset::subset(const std::vector<std::size_t>& indices) const {
    const std::size_t c = images.dim(1), h = images.dim(2), w = images.dim(3);
    const std::size_t stride = c * h * w;
    LabeledDataset out;
    out.images = Tensor({indices.size(), c, h, w});
    out.labels.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::size_t src = indices[i];
        if (src >= size()) {
            throw data_error("subset index " + std::to_string(src) + " out of range");
        }
        std::copy(images.data() + src * stride, images.data() + (src + 1) * stride,
                  out.images.data() + i * stride);
        out.labels.push_back(labels[src]);
    }
    return out;
}

LabeledDataset load_cifar10(const std::vector<std::string>& paths) {
    std::vector<unsigned char> all;
    for (const auto& path : paths) {
        auto bytes = read_all(path);
        if (bytes.size() % kRecordBytes != 0) {
            throw data_error(path + ": size " + std::to_string(bytes.size()) +
                             " is not a multiple of " + std::to_string(kRecordBytes));
        }
        all.insert(all.end(), bytes.begin(), bytes.end());
    }
    const std::size_t n = all.size() / kRecordBytes;
    if (n == 0) throw data_error("no records in input files");

    LabeledDataset ds;
    ds.images = Tensor({n, 3, 32, 32});
    ds.labels.resize(n);
    double* px = ds.images.data();
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned char* rec = all.data() + i * kRecordBytes;
        if (rec[0] >= 10) {
            throw data_error("record " + std::to_string(i) + ": label byte " +
                             std::to_string(rec[0]) + " out of range");
        }
        ds.labels[i] = rec[0];
        double* img = px + i * kImageBytes;
        for (std::size_t j = 0; j < kImageBytes; ++j) {
            img[j] = static_cast<double>(rec[1 + j]);
        }
    }
    return ds;
}

void write_cifar10(const LabeledDataset& ds, const std::string& path) {
    if (ds.images.rank() != 4 || ds.images.dim(1) != 3 || ds.images.dim(2) != 32 ||
        ds.images.dim(3) != 32) {
        throw data_error("expected [N,3,32,32] byte images, got " + ds.images.shape_str());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot open " + path + " for writing");
    const double* px = ds.images.data();
    std::vector<unsigned char> rec(kRecordBytes);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        rec[0] = static_cast<unsigned char>(ds.labels[i]);
        for (std::size_t j = 0; j < kImageBytes; ++j) {
            const double v = px[i * kImageBytes + j];
            if (v < 0.0 || v > 255.0 || v != std::floor(v)) {
                throw data_error("pixel value " + std::to_string(v) +
                                 " is not a byte; sample " + std::to_string(i));
            }
            rec[1 + j] = static_cast<unsigned char>(v);
        }
        out.write(reinterpret_cast<const char*>(rec.data()), rec.size());
    }
    if (!out) throw data_error("failed writing " + path);
}

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds, double fraction,
                                                std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw config_error("split fraction must lie in (0,1), got " + std::to_string(fraction));
    }
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(order);
    const auto n_train =
        static_cast<std::size_t>(std::floor(static_cast<double>(ds.size()) * fraction));
    std::vector<std::size_t> head(order.begin(), order.begin() + n_train);
    std::vector<std::size_t> tail(order.begin() + n_train, order.end());
    return {ds.subset(head), ds.subset(tail)};
}

void write_predictions(const std::vector<std::size_t>& ids, const std::vector<int>& labels,
                       const std::string& path) {
    if (ids.size() != labels.size()) {
        throw data_error("ids/labels length mismatch: " + std::to_string(ids.size()) + " vs " +
                         std::to_string(labels.size()));
    }
    std::ofstream out(path);
    if (!out) throw data_error("cannot open " + path + " for writing");
    out << "id,label\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= 10) {
            throw data_error("label " + std::to_string(labels[i]) + " out of range");
        }
        out << ids[i] << "," << kClassNames[static_cast<std::size_t>(labels[i])] << "\n";
    }
    if (!out) throw data_error("failed writing " + path);
}

BatchIterator::BatchIterator(const LabeledDataset& ds, std::size_t batch_size,
                             std::uint64_t seed)
    : ds_(&ds), batch_size_(batch_size), rng_(seed), order_(ds.size()) {
    if (batch_size_ == 0) throw config_error("batch size must be positive");
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    rng_.shuffle(order_);
}

bool BatchIterator::next(Tensor& images, std::vector<int>& labels) {
    if (cursor_ >= order_.size()) return false;
    const std::size_t take = std::min(batch_size_, order_.size() - cursor_);
    std::vector<std::size_t> idx(order_.begin() + cursor_, order_.begin() + cursor_ + take);
    cursor_ += take;
    LabeledDataset batch = ds_->subset(idx);
    images = std::move(batch.images);
    labels = std::move(batch.labels);
    return true;
}

void BatchIterator::reset() {
    cursor_ = 0;
    rng_.shuffle(order_);
}

std::size_t BatchIterator::batches_per_epoch() const {
    return (order_.size() + batch_size_ - 1) / batch_size_;
}

std::pair<Tensor, std::vector<int>> pca2(const LabeledDataset& ds, std::size_t sample_cap,
                                         std::uint64_t seed) {
    if (ds.size() < 2) throw data_error("pca needs at least 2 samples");
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (sample_cap > 0 && sample_cap < ds.size()) {
        Rng rng(seed);
        rng.shuffle(idx);
        idx.resize(sample_cap);
    }
    const std::size_t m = idx.size();
    const std::size_t d = ds.images.size() / ds.images.dim(0);

    Eigen::MatrixXd x(m, d);
    std::vector<int> labels(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = ds.images.data() + idx[i] * d;
        for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i),
                                              static_cast<Eigen::Index>(j)) = row[j];
        labels[i] = ds.labels[idx[i]];
    }
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;

    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(m - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw numeric_error("pca eigendecomposition failed");

    Tensor scores({m, 2});
    for (int comp = 0; comp < 2; ++comp) {
        // eigenvalues come back ascending; take the top two
        const Eigen::Index col = static_cast<Eigen::Index>(d) - 1 - comp;
        Eigen::VectorXd v = eig.eigenvectors().col(col);
        Eigen::Index peak = 0;
        v.cwiseAbs().maxCoeff(&peak);
        if (v(peak) < 0) v = -v;
        const Eigen::VectorXd proj = x * v;
        for (std::size_t i = 0; i < m; ++i) {
            scores(i, static_cast<std::size_t>(comp)) = proj(static_cast<Eigen::Index>(i));
        }
    }
    return {std::move(scores), std::move(labels)};
}

} // namespace convnet
