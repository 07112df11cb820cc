#pragma once

#include <cstdint>
#include <limits>

namespace ddsde {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stream id for (particle, step) pairs; distinct pairs give unrelated streams.
constexpr std::uint64_t stream_id(std::uint64_t particle, std::uint64_t step) noexcept {
    return mix64(particle * 0x9e3779b97f4a7c15ULL ^ mix64(step + 0x632be59bd9b4e019ULL));
}

/// Counter-based generator: the k-th draw is a pure function of
/// (seed, stream_id, k), so any parallel schedule reproduces the same numbers.
/// Satisfies UniformRandomBitGenerator.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, std::uint64_t stream) noexcept
        : seed_(seed), stream_(stream), key_(mix64(seed ^ mix64(stream ^ 0xd1b54a32d192ed03ULL))) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        return mix64(key_ + 0x9e3779b97f4a7c15ULL * (++counter_));
    }

    /// Uniform on the open interval (0, 1).
    double uniform_open() noexcept;
    /// Standard normal via Box-Muller (implementation-independent output).
    double normal() noexcept;
    /// Exponential with mean 1.
    double exponential() noexcept;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }
    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

} // namespace ddsde
