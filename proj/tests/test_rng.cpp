#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "gramvec/rng.hpp"

using namespace gramvec;

TEST_CASE("identical seeds give identical streams, different seeds diverge") {
    Rng a(42);
    Rng b(42);
    Rng c(43);
    bool any_diff = false;
    for (int i = 0; i < 256; ++i) {
        const std::uint64_t va = a.next_u64();
        CHECK(va == b.next_u64());
        any_diff = any_diff || (va != c.next_u64());
    }
    CHECK(any_diff);
}

TEST_CASE("mix64 is a bijective-looking scrambler, not identity") {
    CHECK(mix64(0) != 0);
    CHECK(mix64(1) != 1);
    CHECK(mix64(0) != mix64(1));
    // Reference value of one splitmix64 step from a zero state, so the mixing
    // constants cannot drift silently.
    CHECK(mix64(0) == 0xe220a8397b1dcdafull);
}

TEST_CASE("combine_seed is order sensitive and collision averse") {
    CHECK(combine_seed({1, 2, 3}) != combine_seed({3, 2, 1}));
    CHECK(combine_seed({1, 2}) != combine_seed({2, 1}));
    CHECK(combine_seed({0}) != combine_seed({0, 0}));
    CHECK(combine_seed({7, 8, 9}) == combine_seed({7, 8, 9}));
}

TEST_CASE("next_double stays in the half-open unit interval") {
    Rng rng(7);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.next_double();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("below(n) is in range and close to uniform") {
    Rng rng(12345);
    const std::uint64_t n = 7;
    const int draws = 70000;
    std::vector<int> counts(n, 0);
    for (int i = 0; i < draws; ++i) {
        const std::uint64_t v = rng.below(n);
        REQUIRE(v < n);
        ++counts[v];
    }
    const double expected = static_cast<double>(draws) / static_cast<double>(n);
    for (std::uint64_t v = 0; v < n; ++v) {
        // ~5 standard deviations of a binomial(draws, 1/n) cell.
        CHECK(std::abs(counts[v] - expected) < 5.0 * std::sqrt(expected));
    }
    CHECK(rng.below(0) == 0);
    CHECK(rng.below(1) == 0);
}

TEST_CASE("normal deviates have the right first two moments") {
    Rng rng(99);
    const int draws = 200000;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int i = 0; i < draws; ++i) {
        const double z = rng.normal();
        sum += z;
        sum_sq += z * z;
    }
    const double mean = sum / draws;
    const double var = sum_sq / draws - mean * mean;
    CHECK(std::abs(mean) < 0.01);       // sd of the mean is ~0.0022
    CHECK(std::abs(var - 1.0) < 0.02);  // sd of the variance is ~0.0032
}

TEST_CASE("truncated geometric matches its probability mass function") {
    const double p = 0.2;
    const int lmax = 10;
    Rng rng(2024);
    const int draws = 200000;
    std::vector<int> counts(lmax + 1, 0);
    for (int i = 0; i < draws; ++i) {
        const int l = rng.truncated_geometric(p, lmax);
        REQUIRE(l >= 1);
        REQUIRE(l <= lmax);
        ++counts[l];
    }

    // P(l) = p (1-p)^(l-1) / (1 - (1-p)^lmax), computed independently.
    const double norm = 1.0 - std::pow(1.0 - p, lmax);
    for (int l = 1; l <= lmax; ++l) {
        const double prob = p * std::pow(1.0 - p, l - 1) / norm;
        const double freq = static_cast<double>(counts[l]) / draws;
        const double sd = std::sqrt(prob * (1.0 - prob) / draws);
        CHECK(std::abs(freq - prob) < 6.0 * sd + 1e-12);
    }
}

TEST_CASE("truncated geometric respects a tight cap") {
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        CHECK(rng.truncated_geometric(0.2, 1) == 1);
        const int l = rng.truncated_geometric(0.9, 3);
        CHECK(l >= 1);
        CHECK(l <= 3);
    }
}
