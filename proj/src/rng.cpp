#include "sharpen/rng.hpp"

namespace sharpen {

std::uint64_t CounterRng::derive(std::uint64_t seed, StreamTag tag, std::initializer_list<std::uint64_t> ids) {
    std::uint64_t h = hash_key(seed, {static_cast<std::uint64_t>(tag)});
    for (std::uint64_t id : ids) h = mix64(h ^ mix64(id + 0x2545f4914f6cdd1dULL));
    return h;
}

std::uint64_t CounterRng::below(std::uint64_t n) {
    // Lemire-style rejection keeps the draw exactly uniform.
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const std::uint64_t r = (*this)();
        if (r >= threshold) return r % n;
    }
}

}  // namespace sharpen
