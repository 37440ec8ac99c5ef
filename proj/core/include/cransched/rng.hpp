#pragma once

#include <cstdint>
#include <random>

namespace cransched {

/**
 * Deterministic random stream with cross-platform stable output.
 *
 * std::mt19937_64 produces an identical bit sequence on every conforming
 * implementation; the distribution mappings below are implemented by hand
 * because the standard <random> distributions are implementation-defined.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    /// Uniform double in [0, 1), 53 mantissa bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in {0, ..., n-1}, n >= 1.
    int uniform_int(int n) {
        int v = static_cast<int>(uniform01() * static_cast<double>(n));
        return v >= n ? n - 1 : v;
    }

private:
    std::mt19937_64 gen_;
};

/// splitmix64 finalizer; decorrelates nearby seed values.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/**
 * Derives an independent stream seed from a master seed.
 *
 * `stream` separates purposes (environment, policy, initialization) and
 * `index` separates sweep points or repetitions, so parallel runs never
 * share a stream. The derivation is pure arithmetic and documented here as
 * part of the reproducibility contract: identical (master, stream, index)
 * always yields the identical stream.
 */
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t index = 0) {
    return mix_seed(master ^ mix_seed(stream * 0x9e3779b97f4a7c15ULL + index));
}

} // namespace cransched
