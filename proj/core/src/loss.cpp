#include <cmath>
#include <string>

#include "convnet/errors.hpp"
#include "convnet/layers.hpp"
#include "convnet/loss.hpp"

namespace convnet {

namespace {

void check_labels(std::size_t n, std::size_t k, const std::vector<int>& labels) {
    if (labels.size() != n) {
        throw data_error("expected " + std::to_string(n) + " labels, got " +
                         std::to_string(labels.size()));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) {
            throw data_error("label " + std::to_string(labels[i]) + " at sample " +
                             std::to_string(i) + " outside [0," + std::to_string(k) + ")");
        }
    }
}

} // namespace

LossReport cross_entropy(const Tensor& probs, const std::vector<int>& labels) {
    if (probs.rank() != 2) {
        throw shape_error("cross_entropy: expected [N,K] probabilities, got " +
                          probs.shape_str());
    }
    const std::size_t n = probs.dim(0), k = probs.dim(1);
    check_labels(n, k, labels);

    const double* p = probs.data();
    double total = 0.0;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = p + i * k;
        double row_sum = 0.0;
        double best = row[0];
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < k; ++j) {
            row_sum += row[j];
            if (row[j] > best) {
                best = row[j];
                best_j = j;
            }
        }
        if (std::abs(row_sum - 1.0) > 1e-6) {
            throw numeric_error("cross_entropy: probability row " + std::to_string(i) +
                                " sums to " + std::to_string(row_sum));
        }
        const double target_p = row[static_cast<std::size_t>(labels[i])];
        total += -std::log(target_p < 1e-12 ? 1e-12 : target_p);
        if (best_j != static_cast<std::size_t>(labels[i])) ++wrong;
    }

    LossReport rep;
    rep.count = n;
    rep.misclassified = wrong;
    rep.loss = n == 0 ? 0.0 : total / static_cast<double>(n);
    rep.error_rate = n == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(n);
    return rep;
}

Tensor softmax_xent_backward(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.rank() != 2) {
        throw shape_error("softmax_xent_backward: expected [N,K] logits, got " +
                          logits.shape_str());
    }
    const std::size_t n = logits.dim(0), k = logits.dim(1);
    check_labels(n, k, labels);

    Tensor d = softmax(logits);
    double* pd = d.data();
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        pd[i * k + static_cast<std::size_t>(labels[i])] -= 1.0;
        for (std::size_t j = 0; j < k; ++j) pd[i * k + j] *= inv_n;
    }
    return d;
}

} // namespace convnet
