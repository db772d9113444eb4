#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

namespace fedsim {

// Combines a seed with stream tags (round index, client id, ...) so that
// every consumer of randomness gets an independent, replayable stream.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag);
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag_a, std::uint64_t tag_b);

// Deterministic generator with explicitly implemented distributions.
// std::*_distribution output is implementation-defined, which would make
// frozen test values and byte-identical reruns depend on the standard
// library; the transforms here pin the exact bit stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform in [0,1), 53-bit resolution.
    double uniform();
    double uniform(double lo, double hi);
    // Uniform in (0,1); never returns an exact endpoint.
    double uniform_open();

    // Standard normal via Box-Muller.
    double normal();
    double normal(double mean, double stddev);

    // Exponential with mean 1, strictly positive.
    double exponential();

    // Uniform integer in [0, n), n >= 1, rejection-sampled (unbiased).
    std::size_t uniform_index(std::size_t n);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_[4];
};

}  // namespace fedsim
