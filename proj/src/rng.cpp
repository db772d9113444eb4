#include "fedsim/rng.hpp"

#include <cmath>
#include <numbers>

namespace fedsim {

namespace {

// splitmix64, used for seeding and seed mixing.
std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t x = seed;
    std::uint64_t a = splitmix64(x);
    x ^= tag;
    return a ^ splitmix64(x);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag_a, std::uint64_t tag_b) {
    return mix_seed(mix_seed(seed, tag_a), tag_b);
}

Rng::Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& s : state_) s = splitmix64(x);
}

// xoshiro256**
std::uint64_t Rng::next_u64() {
    std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double Rng::uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
    double u1 = uniform_open();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::normal(double mean, double stddev) {
    return mean + stddev * normal();
}

double Rng::exponential() {
    return -std::log(uniform_open());
}

std::size_t Rng::uniform_index(std::size_t n) {
    std::uint64_t bound = static_cast<std::uint64_t>(n);
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
}

}  // namespace fedsim
