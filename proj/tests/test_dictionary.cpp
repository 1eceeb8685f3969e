#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "convnet/dictionary.hpp"
#include "convnet/errors.hpp"

using namespace convnet;

namespace {

struct TempPath {
    std::string path;
    explicit TempPath(const std::string& name) : path("dict_" + name) {}
    ~TempPath() { std::remove(path.c_str()); }
};

double col_norm(const Tensor& d, std::size_t c) {
    double acc = 0.0;
    for (std::size_t p = 0; p < d.dim(0); ++p) acc += d(p, c) * d(p, c);
    return std::sqrt(acc);
}

} // namespace

TEST_CASE("encode hand example: e1 column, threshold 0.5") {
    Dictionary dict;
    dict.d = Tensor({2, 1}, {1.0, 0.0});
    dict.alpha = 0.5;
    Tensor x({1, 2}, {0.7, 0.0});
    Tensor z = encode(dict, x);
    REQUIRE(z.shape() == std::vector<std::size_t>{1, 1});
    CHECK(z(0, 0) == doctest::Approx(0.2));
}

TEST_CASE("encode with zero threshold is the absolute projection") {
    Dictionary dict;
    dict.d = Tensor({2, 2}, {1.0, 0.0, 0.0, 1.0});
    dict.alpha = 0.0;
    Tensor x({1, 2}, {-0.3, 0.8});
    Tensor z = encode(dict, x);
    CHECK(z(0, 0) == doctest::Approx(0.3));
    CHECK(z(0, 1) == doctest::Approx(0.8));
}

TEST_CASE("encode saturates to zero under a large threshold") {
    Dictionary dict;
    dict.d = Tensor({2, 2}, {0.6, 0.8, 0.8, -0.6});
    dict.alpha = 100.0;
    Tensor x({3, 2}, {1, 2, -3, 4, 5, -6});
    Tensor z = encode(dict, x);
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(z[i] == 0.0);
}

TEST_CASE("encode is non-negative and zero-preserving at the origin") {
    Dictionary dict;
    dict.d = Tensor({3, 2}, {0.5, 0.1, 0.5, -0.7, -0.2, 0.3});
    dict.alpha = 0.25;
    Tensor x({2, 3}, {0.4, -1.2, 0.9, 0.0, 0.0, 0.0});
    Tensor z = encode(dict, x);
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(z[i] >= 0.0);
    CHECK(z(1, 0) == 0.0);
    CHECK(z(1, 1) == 0.0);

    CHECK_THROWS_AS(encode(dict, Tensor({1, 4})), shape_error);
}

TEST_CASE("extract_patches pulls in-bounds windows in channel-major order") {
    // A 1-image dataset whose pixel value encodes (c, y, x) uniquely.
    Tensor images({1, 2, 5, 5});
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t y = 0; y < 5; ++y)
            for (std::size_t x = 0; x < 5; ++x) images(0, c, y, x) = double(c * 100 + y * 10 + x);

    Rng rng(3);
    Tensor patches = extract_patches(images, 2, 50, rng);
    REQUIRE(patches.shape() == std::vector<std::size_t>{50, 8});
    for (std::size_t i = 0; i < 50; ++i) {
        // Decode the top-left corner from the first value and verify the
        // remaining 7 values follow the channel-major layout.
        double v0 = patches(i, 0);
        auto y0 = static_cast<std::size_t>(v0) / 10 % 10;
        auto x0 = static_cast<std::size_t>(v0) % 10;
        REQUIRE(y0 <= 3);
        REQUIRE(x0 <= 3);
        std::size_t k = 0;
        for (std::size_t c = 0; c < 2; ++c)
            for (std::size_t dy = 0; dy < 2; ++dy)
                for (std::size_t dx = 0; dx < 2; ++dx, ++k)
                    CHECK(patches(i, k) == double(c * 100 + (y0 + dy) * 10 + (x0 + dx)));
    }

    CHECK_THROWS_AS(extract_patches(images, 6, 10, rng), shape_error);
}

TEST_CASE("orthonormal patches are a fixed point of learning") {
    // 4 orthonormal rows in 4-D; C = 4 clusters must recover them.
    Tensor patches({4, 4}, {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1});
    Rng rng(5);
    Dictionary dict = learn_dictionary(patches, 4, 10, 0.25, rng);
    REQUIRE(dict.d.shape() == std::vector<std::size_t>{4, 4});

    // Each input direction appears as exactly one column (up to permutation).
    std::set<std::size_t> matched;
    for (std::size_t row = 0; row < 4; ++row) {
        for (std::size_t c = 0; c < 4; ++c) {
            double dot = dict.d(row, c);
            if (std::fabs(dot - 1.0) < 1e-9) {
                CHECK(matched.insert(c).second);
            }
        }
    }
    CHECK(matched.size() == 4);
}

TEST_CASE("two tight directions: assignment matches the brute-force oracle") {
    // 30 unit vectors near +e1, 30 near +e2.
    const std::size_t n = 60;
    Tensor patches({n, 2});
    Rng gen(9);
    for (std::size_t i = 0; i < n; ++i) {
        double base = (i < 30) ? 0.0 : 1.5707963267948966;
        double theta = base + gen.uniform(-0.2, 0.2);
        patches(i, 0) = std::cos(theta);
        patches(i, 1) = std::sin(theta);
    }
    Rng rng(2);
    Dictionary dict = learn_dictionary(patches, 2, 15, 0.25, rng);

    // Oracle: each patch belongs to the centroid with the larger dot
    // product; the two clusters must be exactly the two index blocks.
    std::vector<int> assign(n);
    for (std::size_t i = 0; i < n; ++i) {
        double d0 = patches(i, 0) * dict.d(0, 0) + patches(i, 1) * dict.d(1, 0);
        double d1 = patches(i, 0) * dict.d(0, 1) + patches(i, 1) * dict.d(1, 1);
        assign[i] = d1 > d0 ? 1 : 0;
    }
    for (std::size_t i = 1; i < 30; ++i) CHECK(assign[i] == assign[0]);
    for (std::size_t i = 31; i < 60; ++i) CHECK(assign[i] == assign[30]);
    CHECK(assign[0] != assign[30]);
}

TEST_CASE("centroids are unit norm after learning") {
    Tensor patches({40, 6});
    Rng gen(11);
    for (std::size_t i = 0; i < patches.size(); ++i) patches[i] = gen.uniform(-3.0, 3.0);
    Rng rng(1);
    Dictionary dict = learn_dictionary(patches, 8, 10, 0.1, rng);
    for (std::size_t c = 0; c < 8; ++c) {
        CHECK(col_norm(dict.d, c) == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("learning rejects more centroids than patches") {
    Tensor patches({3, 4});
    Rng rng(1);
    CHECK_THROWS_AS(learn_dictionary(patches, 5, 3, 0.25, rng), data_error);
}

TEST_CASE("learning is deterministic for a given rng seed") {
    Tensor patches({50, 5});
    Rng gen(13);
    for (std::size_t i = 0; i < patches.size(); ++i) patches[i] = gen.uniform(-1.0, 1.0);

    Rng r1(21), r2(21);
    Dictionary a = learn_dictionary(patches, 6, 8, 0.25, r1);
    Dictionary b = learn_dictionary(patches, 6, 8, 0.25, r2);
    for (std::size_t i = 0; i < a.d.size(); ++i) CHECK(a.d[i] == b.d[i]);
}

TEST_CASE("dictionary file round-trips exactly") {
    Dictionary dict;
    dict.d = Tensor({4, 3}, {1, 0, 0, 0, 0.5, 0, 0, 0.5, 0.25, 0, 0.70710678, -1});
    dict.alpha = 0.3;
    dict.patch = 2;
    dict.channels = 1;

    TempPath tmp("roundtrip.tnsc");
    dict.save(tmp.path);
    Dictionary back = Dictionary::load(tmp.path);
    CHECK(back.alpha == dict.alpha);
    CHECK(back.patch == dict.patch);
    CHECK(back.channels == dict.channels);
    REQUIRE(back.d.same_shape(dict.d));
    for (std::size_t i = 0; i < dict.d.size(); ++i) CHECK(back.d[i] == dict.d[i]);
}
