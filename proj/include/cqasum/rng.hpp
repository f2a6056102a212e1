#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace cqasum {

/// splitmix64 generator (Steele, Lea and Flood constants). Every randomized
/// stage in the toolkit draws from this so runs reproduce across languages.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Unbiased integer in [0, bound) by rejection. bound must be > 0.
    std::uint64_t uniform(std::uint64_t bound) noexcept {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

    /// Double in [0, 1) with 53 random bits.
    double unit() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    std::uint64_t state() const noexcept { return state_; }

private:
    std::uint64_t state_;
};

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Child seed for a named stage: the first splitmix64 output of
/// (master XOR fnv1a(label)). Distinct labels give independent streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label) noexcept {
    SplitMix64 g(master ^ fnv1a64(label));
    return g.next();
}

/// Fisher-Yates, swapping from the back: for i = n-1 .. 1, j = uniform(i+1).
template <class T>
void shuffle(std::span<T> items, SplitMix64& rng) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform(i));
        using std::swap;
        swap(items[i - 1], items[j]);
    }
}

} // namespace cqasum
