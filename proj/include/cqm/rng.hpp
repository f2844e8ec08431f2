#pragma once

#include <cstdint>
#include <string>

#include <random>

namespace cqm {

// Deterministic random source. All sampling is built directly on
// mt19937_64 output so that streams are bit-identical across platforms;
// std::*_distribution is implementation-defined and never used.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1), 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform in [0, n) without modulo bias.
    std::uint64_t uniform_index(std::uint64_t n);

    int uniform_int(int n) { return static_cast<int>(uniform_index(static_cast<std::uint64_t>(n))); }

    // Standard normal, Box-Muller without a cached spare so the state is
    // exactly the generator state (needed for checkpoint round-trips).
    double normal();

    std::string state_string() const;
    void set_state_string(const std::string& s);

private:
    std::mt19937_64 gen_;
};

// Stable derived seeds for side streams (evaluation episodes etc.).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag0, std::uint64_t tag1 = 0);

} // namespace cqm
