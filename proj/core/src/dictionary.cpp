#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "convnet/dictionary.hpp"
#include "convnet/errors.hpp"
#include "convnet/tensor_io.hpp"

namespace convnet {

namespace {

void normalize_rows(Tensor& rows) {
    const std::size_t n = rows.dim(0), d = rows.dim(1);
    double* p = rows.data();
    for (std::size_t i = 0; i < n; ++i) {
        double sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) sq += p[i * d + j] * p[i * d + j];
        const double norm = std::sqrt(sq);
        if (norm > 1e-12) {
            for (std::size_t j = 0; j < d; ++j) p[i * d + j] /= norm;
        }
    }
}

} // namespace

Tensor extract_patches(const Tensor& images, std::size_t patch, std::size_t count, Rng& rng) {
    if (images.rank() != 4) {
        throw shape_error("extract_patches: expected [N,C,H,W], got " + images.shape_str());
    }
    const std::size_t n = images.dim(0), c = images.dim(1), h = images.dim(2), w = images.dim(3);
    if (patch == 0 || patch > h || patch > w) {
        throw shape_error("extract_patches: patch " + std::to_string(patch) +
                          " does not fit " + std::to_string(h) + "x" + std::to_string(w));
    }
    const std::size_t p = c * patch * patch;
    Tensor out({count, p});
    const double* px = images.data();
    double* po = out.data();
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t img = rng.uniform_index(n);
        const std::size_t top = rng.uniform_index(h - patch + 1);
        const std::size_t left = rng.uniform_index(w - patch + 1);
        double* dst = po + i * p;
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double* plane = px + (img * c + ch) * h * w;
            for (std::size_t r = 0; r < patch; ++r) {
                for (std::size_t s = 0; s < patch; ++s) {
                    *dst++ = plane[(top + r) * w + (left + s)];
                }
            }
        }
    }
    return out;
}

Dictionary learn_dictionary(const Tensor& patches, std::size_t centroids, std::size_t iters,
                            double alpha, Rng& rng) {
    if (patches.rank() != 2) {
        throw shape_error("learn_dictionary: expected [M,P] patches, got " +
                          patches.shape_str());
    }
    const std::size_t m = patches.dim(0), p = patches.dim(1);
    if (m < centroids) {
        throw data_error("learn_dictionary: " + std::to_string(m) + " patches for " +
                         std::to_string(centroids) + " centroids");
    }

    Tensor x = patches;
    normalize_rows(x);
    const double* px = x.data();

    // centroids as rows [C,P] while iterating; transposed into d at the end
    std::vector<std::size_t> pick(m);
    std::iota(pick.begin(), pick.end(), std::size_t{0});
    rng.shuffle(pick);
    Tensor cent({centroids, p});
    for (std::size_t k = 0; k < centroids; ++k) {
        std::copy(px + pick[k] * p, px + (pick[k] + 1) * p, cent.data() + k * p);
    }
    normalize_rows(cent);

    std::vector<std::size_t> assign(m, 0);
    std::vector<double> best_dot(m, 0.0);
    for (std::size_t it = 0; it < iters; ++it) {
        const double* pc = cent.data();
        for (std::size_t i = 0; i < m; ++i) {
            const double* row = px + i * p;
            double best = -std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t k = 0; k < centroids; ++k) {
                double dot = 0.0;
                const double* cr = pc + k * p;
                for (std::size_t j = 0; j < p; ++j) dot += row[j] * cr[j];
                if (dot > best) {
                    best = dot;
                    arg = k;
                }
            }
            assign[i] = arg;
            best_dot[i] = best;
        }

        Tensor sums({centroids, p});
        std::vector<std::size_t> members(centroids, 0);
        double* ps = sums.data();
        for (std::size_t i = 0; i < m; ++i) {
            const double* row = px + i * p;
            double* dst = ps + assign[i] * p;
            for (std::size_t j = 0; j < p; ++j) dst[j] += row[j];
            ++members[assign[i]];
        }
        normalize_rows(sums);
        for (std::size_t k = 0; k < centroids; ++k) {
            double sq = 0.0;
            for (std::size_t j = 0; j < p; ++j) sq += ps[k * p + j] * ps[k * p + j];
            if (members[k] == 0 || sq < 0.5) {  // empty or degenerate sum
                // reseed from the patch least aligned with its centroid
                std::size_t far = 0;
                double worst = std::numeric_limits<double>::infinity();
                for (std::size_t i = 0; i < m; ++i) {
                    if (best_dot[i] < worst) {
                        worst = best_dot[i];
                        far = i;
                    }
                }
                std::copy(px + far * p, px + (far + 1) * p, ps + k * p);
                best_dot[far] = std::numeric_limits<double>::infinity();
            }
        }
        normalize_rows(sums);
        cent = std::move(sums);
    }

    Dictionary dict;
    dict.alpha = alpha;
    dict.d = transpose2d(cent);  // [P, C] unit-norm columns
    return dict;
}

Tensor encode(const Dictionary& dict, const Tensor& x) {
    if (x.rank() != 2 || dict.d.rank() != 2 || x.dim(1) != dict.d.dim(0)) {
        throw shape_error("encode: input " + x.shape_str() + " vs dictionary " +
                          dict.d.shape_str());
    }
    Tensor z = matmul(x, dict.d);
    double* pz = z.data();
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double v = std::abs(pz[i]) - dict.alpha;
        pz[i] = v > 0.0 ? v : 0.0;
    }
    return z;
}

void Dictionary::save(const std::string& path) const {
    TensorFile f;
    f.put_meta("what", "dictionary");
    f.put_meta("alpha", format_double(alpha));
    f.put_meta("patch", std::to_string(patch));
    f.put_meta("channels", std::to_string(channels));
    f.put_tensor("d", d);
    f.save(path);
}

Dictionary Dictionary::load(const std::string& path) {
    TensorFile f = TensorFile::load(path);
    if (!f.has_meta("what") || f.meta("what") != "dictionary") {
        throw data_error(path + " is not a dictionary file");
    }
    Dictionary dict;
    dict.alpha = parse_double(f.meta("alpha"));
    dict.patch = static_cast<std::size_t>(std::stoull(f.meta("patch")));
    dict.channels = static_cast<std::size_t>(std::stoull(f.meta("channels")));
    dict.d = f.tensor("d");
    return dict;
}

} // namespace convnet
