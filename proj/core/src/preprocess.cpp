#include <Eigen/Dense>
#include <cmath>

#include "convnet/errors.hpp"
#include "convnet/preprocess.hpp"
#include "convnet/tensor_io.hpp"

namespace convnet {

namespace {

void require_rows(const Tensor& x, const char* who) {
    if (x.rank() != 2) {
        throw shape_error(std::string(who) + ": expected [N,D] rows, got " + x.shape_str());
    }
}

Tensor flatten_rows(const Tensor& images) {
    const std::size_t n = images.dim(0);
    return reshape(images, {n, images.size() / n});
}

} // namespace

Tensor rescale(const Tensor& x) {
    return scale(x, 1.0 / 255.0);
}

Tensor fit_mean(const Tensor& x) {
    require_rows(x, "fit_mean");
    return reduce_mean(x, 0);
}

Tensor center(const Tensor& x, const Tensor& mean) {
    require_rows(x, "center");
    if (mean.rank() != 1 || mean.dim(0) != x.dim(1)) {
        throw shape_error("center: mean " + mean.shape_str() + " does not match rows " +
                          x.shape_str());
    }
    Tensor y = x;
    const std::size_t n = x.dim(0), d = x.dim(1);
    double* py = y.data();
    const double* pm = mean.data();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) py[i * d + j] -= pm[j];
    }
    return y;
}

Tensor grayscale(const Tensor& x) {
    if (x.rank() != 4 || x.dim(1) != 3) {
        throw shape_error("grayscale: expected [N,3,H,W], got " + x.shape_str());
    }
    const std::size_t n = x.dim(0), h = x.dim(2), w = x.dim(3), hw = h * w;
    Tensor y({n, 1, h, w});
    const double* px = x.data();
    double* py = y.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = px + i * 3 * hw;
        const double* g = r + hw;
        const double* b = g + hw;
        double* dst = py + i * hw;
        for (std::size_t j = 0; j < hw; ++j) {
            dst[j] = 0.299 * r[j] + 0.587 * g[j] + 0.114 * b[j];
        }
    }
    return y;
}

Tensor gcn(const Tensor& x) {
    require_rows(x, "gcn");
    const std::size_t n = x.dim(0), d = x.dim(1);
    Tensor y = x;
    double* p = y.data();
    const double sqrt_d = std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < n; ++i) {
        double* row = p + i * d;
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += row[j];
        mean /= static_cast<double>(d);
        double sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            row[j] -= mean;
            sq += row[j] * row[j];
        }
        const double denom = std::max(1e-8, std::sqrt(sq) / sqrt_d);
        for (std::size_t j = 0; j < d; ++j) row[j] /= denom;
    }
    return y;
}

PreprocStats fit_zca(const Tensor& x, double fudge) {
    require_rows(x, "fit_zca");
    const std::size_t n = x.dim(0), d = x.dim(1);
    if (n < 2) throw data_error("zca needs at least 2 samples");

    Tensor mean = fit_mean(x);
    Eigen::MatrixXd c(d, d);
    {
        Eigen::MatrixXd xc(n, d);
        const double* px = x.data();
        const double* pm = mean.data();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                xc(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    px[i * d + j] - pm[j];
            }
        }
        c = (xc.transpose() * xc) / static_cast<double>(n - 1);
    }
    if (!c.allFinite()) throw numeric_error("zca: covariance is not finite");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
    if (eig.info() != Eigen::Success) throw numeric_error("zca eigendecomposition failed");
    Eigen::VectorXd inv_sqrt = eig.eigenvalues();
    for (Eigen::Index i = 0; i < inv_sqrt.size(); ++i) {
        const double lam = inv_sqrt(i) + fudge;
        if (lam <= 0.0) {
            throw numeric_error("zca: eigenvalue " + std::to_string(eig.eigenvalues()(i)) +
                                " plus fudge " + std::to_string(fudge) + " is not positive");
        }
        inv_sqrt(i) = 1.0 / std::sqrt(lam);
    }
    const Eigen::MatrixXd w =
        eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();

    PreprocStats stats;
    stats.pipeline.fudge = fudge;
    stats.mean = std::move(mean);
    stats.w_zca = Tensor({d, d});
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            stats.w_zca(i, j) = w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
    }
    stats.fitted_on = n;
    return stats;
}

Tensor apply_zca(const PreprocStats& stats, const Tensor& x) {
    require_rows(x, "apply_zca");
    if (stats.w_zca.rank() != 2 || stats.w_zca.dim(0) != x.dim(1)) {
        throw shape_error("apply_zca: stats for dimension " +
                          (stats.w_zca.rank() == 2 ? std::to_string(stats.w_zca.dim(0))
                                                   : std::string("<unfitted>")) +
                          ", input " + x.shape_str());
    }
    return matmul(center(x, stats.mean), stats.w_zca);
}

PreprocStats fit_preprocess(const PreprocPipeline& pipeline, const Tensor& images) {
    if (images.rank() != 4) {
        throw shape_error("fit_preprocess: expected [N,C,H,W] images, got " +
                          images.shape_str());
    }
    Tensor work = pipeline.to_gray ? grayscale(images) : images;

    PreprocStats stats;
    if (pipeline.kind == "raw") {
        // nothing to fit
    } else if (pipeline.kind == "rescale-center") {
        stats.mean = fit_mean(flatten_rows(rescale(work)));
    } else if (pipeline.kind == "gcn" || pipeline.kind == "gcn-zca") {
        Tensor rows = flatten_rows(pipeline.rescale_first ? rescale(work) : work);
        if (pipeline.kind == "gcn-zca") {
            PreprocStats z = fit_zca(gcn(rows), pipeline.fudge);
            stats.mean = std::move(z.mean);
            stats.w_zca = std::move(z.w_zca);
        }
    } else {
        throw config_error("unknown preprocessing '" + pipeline.kind +
                           "' (valid: raw, rescale-center, gcn, gcn-zca)");
    }
    stats.pipeline = pipeline;
    stats.fitted_on = images.dim(0);
    return stats;
}

Tensor apply_preprocess(const PreprocStats& stats, const Tensor& images) {
    if (images.rank() != 4) {
        throw shape_error("apply_preprocess: expected [N,C,H,W] images, got " +
                          images.shape_str());
    }
    const PreprocPipeline& p = stats.pipeline;
    Tensor work = p.to_gray ? grayscale(images) : images;
    const std::vector<std::size_t> out_shape = work.shape();

    if (p.kind == "raw") return work;
    if (p.kind == "rescale-center") {
        return reshape(center(flatten_rows(rescale(work)), stats.mean), out_shape);
    }
    Tensor rows = flatten_rows(p.rescale_first ? rescale(work) : work);
    rows = gcn(rows);
    if (p.kind == "gcn-zca") rows = apply_zca(stats, rows);
    return reshape(rows, out_shape);
}

void PreprocStats::save(const std::string& path) const {
    TensorFile f;
    f.put_meta("what", "preprocess-stats");
    f.put_meta("kind", pipeline.kind);
    f.put_meta("to_gray", pipeline.to_gray ? "1" : "0");
    f.put_meta("rescale_first", pipeline.rescale_first ? "1" : "0");
    f.put_meta("fudge", format_double(pipeline.fudge));
    f.put_meta("fitted_on", std::to_string(fitted_on));
    if (mean.size() > 0) f.put_tensor("mean", mean);
    if (w_zca.size() > 0) f.put_tensor("w_zca", w_zca);
    f.save(path);
}

PreprocStats PreprocStats::load(const std::string& path) {
    TensorFile f = TensorFile::load(path);
    if (!f.has_meta("what") || f.meta("what") != "preprocess-stats") {
        throw data_error(path + " is not a preprocessing statistics file");
    }
    PreprocStats stats;
    stats.pipeline.kind = f.meta("kind");
    stats.pipeline.to_gray = f.meta("to_gray") == "1";
    stats.pipeline.rescale_first = f.meta("rescale_first") == "1";
    stats.pipeline.fudge = parse_double(f.meta("fudge"));
    stats.fitted_on = static_cast<std::size_t>(std::stoull(f.meta("fitted_on")));
    if (f.has_tensor("mean")) stats.mean = f.tensor("mean");
    if (f.has_tensor("w_zca")) stats.w_zca = f.tensor("w_zca");
    return stats;
}

} // namespace convnet
