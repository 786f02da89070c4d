#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace sharpen {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Folds a list of integers into one key. Order matters.
constexpr std::uint64_t hash_key(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t h = mix64(seed);
    for (std::uint64_t t : tags) h = mix64(h ^ mix64(t + 0x632be59bd9b4e019ULL));
    return h;
}

// Stream domains. Every random draw in the library belongs to exactly one.
enum class StreamTag : std::uint64_t {
    kParticle = 1,
    kResample = 2,
    kFinalPick = 3,
    kMhExtend = 4,
    kMhMove = 5,
    kModelParams = 6,
    kMhRun = 7,
};

// Counter-based generator: the k-th output is a pure function of (key, k), so
// a stream keyed by (seed, particle, step) yields the same draws no matter
// which worker consumes it. Satisfies UniformRandomBitGenerator.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t key) : key_(key) {}
    CounterRng(std::uint64_t seed, StreamTag tag, std::initializer_list<std::uint64_t> ids)
        : key_(derive(seed, tag, ids)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return mix64(key_ ^ mix64(counter_++)); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // Uniform integer on [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);

    std::uint64_t key() const { return key_; }

private:
    static std::uint64_t derive(std::uint64_t seed, StreamTag tag, std::initializer_list<std::uint64_t> ids);

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace sharpen
