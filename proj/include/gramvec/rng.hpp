#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace gramvec {

// Deterministic random number generation used everywhere sampling happens.
//
// The standard library distributions are implementation-defined, so the
// generator and every draw routine are spelled out here; the same seed gives
// the same stream on every platform and compiler.

// splitmix64 step: advances x by the golden-gamma increment and returns the
// finalized output.  Also serves as the documented 64-bit mixer behind
// combine_seed().
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Folds an ordered list of values into one seed, e.g. the per-document
// masking seed combine_seed({base_seed, doc_id, epoch}).  Order matters.
constexpr std::uint64_t combine_seed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x243f6a8885a308d3ull;  // fractional digits of pi
    for (std::uint64_t p : parts) {
        h = mix64(h ^ p);
    }
    return h;
}

// xoshiro256** with a splitmix64-expanded seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) {
            x += 0x9e3779b97f4a7c15ull;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
            word = z ^ (z >> 31);
        }
    }

    std::uint64_t next_u64() {
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

    // Uniform double in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n).  Rejection sampling keeps it unbiased.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) {
            return 0;
        }
        const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) {
                return r % n;
            }
        }
    }

    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(below(static_cast<std::uint64_t>(n)));
    }

    // Standard normal via Box-Muller; the second deviate is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Geometric length in {1, ..., lmax}: P(l) proportional to (1-p)^(l-1) p,
    // renormalized over the truncated support.  Sampled by walking the CDF so
    // the result is exact for any p in (0, 1).
    int truncated_geometric(double p, int lmax) {
        const double q = 1.0 - p;
        double total = 0.0;
        double term = p;
        for (int l = 1; l <= lmax; ++l) {
            total += term;
            term *= q;
        }
        const double u = next_double() * total;
        double acc = 0.0;
        term = p;
        for (int l = 1; l <= lmax; ++l) {
            acc += term;
            if (u < acc) {
                return l;
            }
            term *= q;
        }
        return lmax;
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t v, int k) {
        return (v << k) | (v >> (64 - k));
    }

    std::uint64_t state_[4];
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace gramvec
