#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <vector>

#include "convnet/rng.hpp"

using namespace convnet;

TEST_CASE("same seed reproduces the same stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng c(43);
    bool any_diff = false;
    Rng a2(42);
    for (int i = 0; i < 10; ++i) any_diff |= (a2.next_u64() != c.next_u64());
    CHECK(any_diff);
}

TEST_CASE("uniform stays in [0, 1) and covers the range") {
    Rng r(7);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 10000; ++i) {
        double x = r.uniform();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);

    Rng r2(7);
    for (int i = 0; i < 1000; ++i) {
        double x = r2.uniform(-3.0, 5.0);
        CHECK(x >= -3.0);
        CHECK(x < 5.0);
    }
}

TEST_CASE("uniform_index hits every bucket roughly evenly") {
    Rng r(11);
    const std::size_t n = 5;
    const int draws = 50000;
    std::vector<int> counts(n, 0);
    for (int i = 0; i < draws; ++i) {
        std::size_t k = r.uniform_index(n);
        REQUIRE(k < n);
        ++counts[k];
    }
    // Each bucket expects 10000; 4 sigma of binomial(50000, 0.2) is ~358.
    for (std::size_t k = 0; k < n; ++k) {
        CHECK(std::abs(counts[k] - draws / static_cast<int>(n)) < 400);
    }
}

TEST_CASE("bernoulli respects its probability") {
    Rng r(5);
    int hits = 0;
    const int draws = 40000;
    for (int i = 0; i < draws; ++i) hits += r.bernoulli(0.3) ? 1 : 0;
    // 4 sigma of binomial(40000, 0.3) is ~367.
    CHECK(std::abs(hits - 12000) < 400);

    Rng r2(5);
    for (int i = 0; i < 100; ++i) {
        CHECK_FALSE(r2.bernoulli(0.0));
        CHECK(r2.bernoulli(1.0));
    }
}

TEST_CASE("shuffle produces a permutation and varies with the seed") {
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    std::vector<int> orig = v;

    Rng r(3);
    r.shuffle(v);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == orig);
    CHECK(v != orig); // 1/50! odds of a false alarm

    std::vector<int> v2 = orig;
    Rng r2(3);
    r2.shuffle(v2);
    CHECK(v == v2);

    std::vector<int> v3 = orig;
    Rng r3(4);
    r3.shuffle(v3);
    CHECK(v != v3);
}

TEST_CASE("fork derivation ignores draws consumed from the parent") {
    Rng a(99);
    Rng b(99);
    for (int i = 0; i < 17; ++i) (void)b.next_u64(); // advance one copy only

    Rng fa = a.fork(3);
    Rng fb = b.fork(3);
    for (int i = 0; i < 20; ++i) CHECK(fa.next_u64() == fb.next_u64());
}

TEST_CASE("distinct fork ids give distinct streams") {
    Rng root(1);
    Rng f1 = root.fork(1);
    Rng f2 = root.fork(2);
    bool any_diff = false;
    for (int i = 0; i < 10; ++i) any_diff |= (f1.next_u64() != f2.next_u64());
    CHECK(any_diff);

    // Nested forks are stable too.
    Rng g1 = root.fork(1).fork(5);
    Rng g2 = root.fork(1).fork(5);
    for (int i = 0; i < 10; ++i) CHECK(g1.next_u64() == g2.next_u64());
}

TEST_CASE("save_state restores a mid-sequence position exactly") {
    Rng r(12345);
    for (int i = 0; i < 37; ++i) (void)r.uniform();

    std::string state = r.save_state();
    std::vector<std::uint64_t> expect;
    for (int i = 0; i < 25; ++i) expect.push_back(r.next_u64());

    Rng fresh(0);
    fresh.load_state(state);
    for (int i = 0; i < 25; ++i) CHECK(fresh.next_u64() == expect[static_cast<std::size_t>(i)]);
}

TEST_CASE("splitmix64 is a deterministic scramble") {
    CHECK(splitmix64(0) == splitmix64(0));
    CHECK(splitmix64(1) != splitmix64(2));

    // Low-quality seeds must not collapse to nearby outputs.
    std::set<std::uint64_t> outs;
    for (std::uint64_t i = 0; i < 100; ++i) outs.insert(splitmix64(i));
    CHECK(outs.size() == 100);
}
