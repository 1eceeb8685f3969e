#ifndef CONVNET_RNG_HPP
#define CONVNET_RNG_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace convnet {

// Seedable random stream. All randomness in the library flows through this
// class; the raw draws are defined here (not via std:: distributions) so a
// run is reproducible byte-for-byte from its seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform on [0, 1) with 53 significant bits.
    double uniform();
    // Uniform on [lo, hi).
    double uniform(double lo, double hi);
    // Uniform integer in [0, n), unbiased. n must be > 0.
    std::size_t uniform_index(std::size_t n);

    bool bernoulli(double p_true);

    // Fisher-Yates, consumes n-1 draws.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    // Independent child stream. Derivation depends only on the seed this
    // Rng was constructed with and the stream id, never on draws consumed,
    // so stream layout is stable regardless of call order.
    Rng fork(std::uint64_t stream_id) const;

    // Engine state as text; restores mid-sequence position exactly.
    std::string save_state() const;
    void load_state(const std::string& state);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

// SplitMix64 step, used for seed derivation.
std::uint64_t splitmix64(std::uint64_t x);

} // namespace convnet

#endif
