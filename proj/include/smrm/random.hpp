#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace smrm {

using Rng = std::mt19937_64;

/// Uniform integer in [0, bound) by rejection; identical across standard libraries.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
    const std::uint64_t limit = Rng::max() - (Rng::max() % bound);
    std::uint64_t draw = rng();
    while (draw >= limit) draw = rng();
    return draw % bound;
}

/// Fisher-Yates shuffle driven by `uniform_index`.
template <class T>
void seeded_shuffle(std::vector<T>& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_index(rng, i));
        std::swap(items[i - 1], items[j]);
    }
}

inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace smrm
