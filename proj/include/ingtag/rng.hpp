#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace ingtag {

/// Deterministic RNG used everywhere randomness is needed. std::mt19937_64 is
/// specified exactly by the standard; the [0,1) mapping below avoids the
/// implementation-defined std::uniform_real_distribution, so identical seeds
/// give identical streams across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1), 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Integer in [0, n), n > 0. Simple modulo; bias is irrelevant here.
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

    /// Fisher-Yates, spelled out so shuffles do not depend on std::shuffle's
    /// unspecified algorithm.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

/// FNV-1a, used to derive per-token seeds so OOV vectors do not depend on
/// first-access order.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace ingtag
