#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace culab {

/// Deterministic random generator (xoshiro256** seeded via splitmix64).
/// Hand-rolled so that sequences are stable across platforms and standard
/// library versions; state is a plain value that callers pass explicitly.
class rng {
public:
    explicit rng(std::uint64_t seed) {
        // splitmix64 expansion of the seed into the four state words.
        std::uint64_t x = seed;
        for (auto& word : state_) {
            x += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            word = z ^ (z >> 31);
        }
    }

    std::uint64_t next_u64() {
        auto rotl = [](std::uint64_t v, int k) {
            return (v << k) | (v >> (64 - k));
        };
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 bits of resolution.
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_int(std::uint64_t n) {
        // Multiply-shift rejection-free mapping is biased by < 2^-53 at the
        // scales used here; acceptable for a laboratory generator.
        return std::uint64_t(uniform() * double(n));
    }

    /// Standard normal via Box-Muller; draws two uniforms per call.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(6.283185307179586 * u2);
    }

    /// Draw an index from an explicit probability vector (sums to ~1).
    /// The final index absorbs any rounding slack.
    std::size_t categorical(const std::vector<double>& probs) {
        const double u = uniform();
        double cum = 0.0;
        for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
            cum += probs[i];
            if (u < cum) return i;
        }
        return probs.empty() ? 0 : probs.size() - 1;
    }

private:
    std::uint64_t state_[4];
};

/// Derive a child seed from a master seed and a stream label, so that the
/// world, model init, and each extraction run consume independent streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
    // FNV-1a over the label, folded into the master via splitmix64.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : label) {
        h ^= std::uint64_t(static_cast<unsigned char>(c));
        h *= 0x100000001b3ULL;
    }
    std::uint64_t z = master ^ h;
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace culab
