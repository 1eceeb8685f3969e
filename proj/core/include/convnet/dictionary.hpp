#ifndef CONVNET_DICTIONARY_HPP
#define CONVNET_DICTIONARY_HPP

#include <cstddef>
#include <string>

#include "convnet/rng.hpp"
#include "convnet/tensor.hpp"

namespace convnet {

// Unit-norm patch centroids as columns of d [P, C] plus the soft threshold
// used by encode.
struct Dictionary {
    Tensor d;
    double alpha = 0.25;
    std::size_t patch = 6;
    std::size_t channels = 3;

    void save(const std::string& path) const;
    static Dictionary load(const std::string& path);
};

// count random patch-size x patch-size windows from [N,C,H,W] images,
// flattened to rows of C*patch*patch values in channel-major order.
Tensor extract_patches(const Tensor& images, std::size_t patch, std::size_t count, Rng& rng);

// Spherical K-means: rows of patches are L2-normalized, centroids start
// from distinct random patches, assignment maximizes the dot product (ties
// to the lowest centroid), centroids are renormalized member sums. A
// centroid that ends up empty is reseeded from the patch least aligned
// with its current centroid.
Dictionary learn_dictionary(const Tensor& patches, std::size_t centroids, std::size_t iters,
                            double alpha, Rng& rng);

// z = max(0, |d^T x| - alpha) per row of x [N,P]; output [N,C].
Tensor encode(const Dictionary& dict, const Tensor& x);

} // namespace convnet

#endif
