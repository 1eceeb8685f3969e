#ifndef CONVNET_LOSS_HPP
#define CONVNET_LOSS_HPP

#include <cstddef>
#include <vector>

#include "convnet/tensor.hpp"

namespace convnet {

struct LossReport {
    double loss = 0.0;        // mean cross-entropy, nats per sample
    double error_rate = 0.0;  // misclassified fraction in [0,1]
    std::size_t count = 0;    // samples scored
    std::size_t misclassified = 0;
};

// Mean negative log-likelihood of the target class plus argmax accuracy.
// Rows of probs must sum to 1 within 1e-6; probabilities are floored at
// 1e-12 inside the log. Argmax ties resolve to the lowest class index.
LossReport cross_entropy(const Tensor& probs, const std::vector<int>& labels);

// d(mean cross-entropy)/d(logits) = (softmax(logits) - onehot) / N.
Tensor softmax_xent_backward(const Tensor& logits, const std::vector<int>& labels);

} // namespace convnet

#endif
