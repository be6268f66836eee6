#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace crseval {

/// SplitMix64 generator (Steele, Lea & Flood 2014). The output sequence for a
/// given seed is part of the reproducibility contract: session assignments
/// and hit codes are replayed from stored seeds, so the algorithm must not
/// change without bumping the export format version.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next()
    {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform integer in [0, bound) by rejection sampling; bound must be > 0.
    std::uint64_t uniform(std::uint64_t bound);

    /// Uniform Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::span<T> items)
    {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

/// 64-bit FNV-1a. Stable across platforms; used for identifiers and seed mixing.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// Combines two 64-bit values into a well-mixed seed.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

std::string to_hex(std::uint64_t value);

} // namespace crseval
