#ifndef CONVNET_PREPROCESS_HPP
#define CONVNET_PREPROCESS_HPP

#include <cstddef>
#include <string>

#include "convnet/tensor.hpp"

namespace convnet {

// What to do to raw byte images before training. kind is one of
// raw | rescale-center | gcn | gcn-zca. to_gray collapses RGB first;
// rescale_first additionally maps to [0,1] before the gcn variants
// (rescale-center always rescales).
struct PreprocPipeline {
    std::string kind = "raw";
    bool to_gray = false;
    bool rescale_first = false;
    double fudge = 0.01;
};

// Train-set statistics for a pipeline, reusable verbatim on held-out data.
struct PreprocStats {
    PreprocPipeline pipeline;
    Tensor mean;    // [D] per-dimension mean (rescale-center, zca)
    Tensor w_zca;   // [D,D] whitening matrix (gcn-zca only)
    std::size_t fitted_on = 0;

    void save(const std::string& path) const;
    static PreprocStats load(const std::string& path);
};

// x/255, elementwise.
Tensor rescale(const Tensor& x);

// Column means of [N,D] rows.
Tensor fit_mean(const Tensor& x);

// Subtract a per-dimension mean from each row.
Tensor center(const Tensor& x, const Tensor& mean);

// [N,3,H,W] -> [N,1,H,W] luminance, 0.299 R + 0.587 G + 0.114 B.
Tensor grayscale(const Tensor& x);

// Per image: subtract its own mean, divide by max(1e-8, ||x||/sqrt(D)).
// Constant images become zero rows.
Tensor gcn(const Tensor& x);

// Whitening fitted on rows of x: W = E diag(1/sqrt(l+fudge)) E^T from the
// eigendecomposition of the sample covariance.
PreprocStats fit_zca(const Tensor& x, double fudge);

// (x - mean) W.
Tensor apply_zca(const PreprocStats& stats, const Tensor& x);

// Fit whatever the pipeline needs on raw training images [N,C,H,W].
PreprocStats fit_preprocess(const PreprocPipeline& pipeline, const Tensor& images);

// Run the fitted pipeline over raw images; output keeps [N,C',H,W] layout.
Tensor apply_preprocess(const PreprocStats& stats, const Tensor& images);

} // namespace convnet

#endif
