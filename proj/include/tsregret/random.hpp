#pragma once

#include <cstdint>
#include <limits>

namespace tsregret {

namespace detail {

inline constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t combine(std::uint64_t h, std::uint64_t v) noexcept {
    return mix64(h ^ mix64(v + golden_gamma));
}

}  // namespace detail

/// Which random quantity a stream feeds. Each kind gets its own stream per
/// period so that changing how many draws one kind consumes never shifts
/// another kind's numbers.
enum class DrawKind : std::uint64_t {
    sample = 1,
    reward = 2,
    transition = 3,
};

/**
 * Counter-based generator: the n-th output is mix64(key + n * gamma).
 *
 * Models std::uniform_random_bit_generator, so it plugs into <random>
 * distributions, but the library only uses uniform01() to stay bit-identical
 * across standard library implementations.
 */
class RandomStream {
public:
    using result_type = std::uint64_t;

    constexpr explicit RandomStream(std::uint64_t key) noexcept : state_(key) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        state_ += detail::golden_gamma;
        return detail::mix64(state_);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    constexpr double uniform01() noexcept {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

/// Keys all streams of one simulated run: (seed, run) plus any number of
/// nested sub-keys (rejection attempts, inner continuation runs).
class RunStreams {
public:
    constexpr RunStreams(std::uint64_t seed, std::uint64_t run) noexcept
        : key_(detail::combine(detail::mix64(seed ^ 0x5EEDULL), run)) {}

    /// Independent family derived from this one.
    [[nodiscard]] constexpr RunStreams child(std::uint64_t sub) const noexcept {
        return RunStreams(detail::combine(key_, sub ^ 0xC41DULL));
    }

    [[nodiscard]] constexpr RandomStream at(std::uint64_t period, DrawKind kind) const noexcept {
        return RandomStream(detail::combine(detail::combine(key_, period), static_cast<std::uint64_t>(kind)));
    }

    [[nodiscard]] constexpr std::uint64_t key() const noexcept { return key_; }

private:
    constexpr explicit RunStreams(std::uint64_t key) noexcept : key_(key) {}

    std::uint64_t key_;
};

}  // namespace tsregret
