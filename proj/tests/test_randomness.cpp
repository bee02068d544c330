#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "perclab/randomness.hpp"

using namespace perclab;

TEST_CASE("site states are pure functions of key and coordinate") {
    const SampleKey k{123456789u, 42u};
    const SiteCoord c{-17, 340};
    CHECK(site_open(k, c) == site_open(k, c));
    const SampleStates states(k);
    std::mt19937 rng(31337);
    std::uniform_int_distribution<std::int64_t> coord(-100000, 100000);
    for (int t = 0; t < 1000; ++t) {
        const SiteCoord s{coord(rng), coord(rng)};
        CHECK(states(s) == site_open(k, s));
    }
}

TEST_CASE("distinct keys give distinct configurations") {
    const SampleKey a{1, 0};
    const SampleKey b{1, 1};
    const SampleKey c{2, 0};
    int diff_ab = 0, diff_ac = 0;
    for (std::int64_t i = 0; i < 64; ++i) {
        diff_ab += site_open(a, {i, 0}) != site_open(b, {i, 0});
        diff_ac += site_open(a, {i, 0}) != site_open(c, {i, 0});
    }
    CHECK(diff_ab > 0);
    CHECK(diff_ac > 0);
}

TEST_CASE("open fraction is balanced over a million draws") {
    std::mt19937_64 rng(0xB41A9CE5u);
    std::uniform_int_distribution<std::int64_t> coord(-1000000, 1000000);
    const std::uint64_t n = 1000000;
    std::uint64_t opens = 0;
    for (std::uint64_t t = 0; t < n; ++t) {
        const SampleKey k{0xFEEDFACEu, t};
        const SiteCoord c{coord(rng), coord(rng)};
        opens += site_open(k, c) ? 1 : 0;
    }
    const double frac = static_cast<double>(opens) / static_cast<double>(n);
    const double bound = 3.0 * 0.5 / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(frac - 0.5) < bound);
}

TEST_CASE("neighbor states are uncorrelated") {
    std::mt19937_64 rng(0xC093u);
    std::uniform_int_distribution<std::int64_t> coord(-1000000, 1000000);
    const std::uint64_t n = 1000000;
    std::array<std::uint64_t, 6> joint{};
    std::array<std::uint64_t, 6> ny{};
    std::uint64_t nx = 0;
    for (std::uint64_t t = 0; t < n; ++t) {
        const SampleKey k{0xABCDEFu, t};
        const SampleStates states(k);
        const SiteCoord c{coord(rng), coord(rng)};
        const bool x = states(c);
        nx += x ? 1 : 0;
        for (std::size_t d = 0; d < 6; ++d) {
            const bool y = states(c + kNeighborOffsets[d]);
            ny[d] += y ? 1 : 0;
            joint[d] += (x && y) ? 1 : 0;
        }
    }
    const double nn = static_cast<double>(n);
    const double px = static_cast<double>(nx) / nn;
    for (std::size_t d = 0; d < 6; ++d) {
        const double py = static_cast<double>(ny[d]) / nn;
        const double pxy = static_cast<double>(joint[d]) / nn;
        const double rho =
            (pxy - px * py) / std::sqrt(px * (1 - px) * py * (1 - py));
        CHECK(std::abs(rho) < 3.0 / std::sqrt(nn));
    }
}

TEST_CASE("four-site patch patterns are uniform (chi-square at the 0.001 level)") {
    std::mt19937_64 rng(0x9A7C4u);
    std::uniform_int_distribution<std::int64_t> coord(-1000000, 1000000);
    const std::uint64_t n = 1000000;
    std::array<std::uint64_t, 16> cells{};
    for (std::uint64_t t = 0; t < n; ++t) {
        const SampleKey k{0x5EEDu, t};
        const SampleStates states(k);
        const SiteCoord c{coord(rng), coord(rng)};
        unsigned pattern = 0;
        pattern |= states(c) ? 1u : 0u;
        pattern |= states(c + SiteCoord{1, 0}) ? 2u : 0u;
        pattern |= states(c + SiteCoord{0, 1}) ? 4u : 0u;
        pattern |= states(c + SiteCoord{1, 1}) ? 8u : 0u;
        ++cells[pattern];
    }
    const double expected = static_cast<double>(n) / 16.0;
    double chi2 = 0.0;
    for (const auto count : cells) {
        const double d = static_cast<double>(count) - expected;
        chi2 += d * d / expected;
    }
    CHECK(chi2 < 37.6973);  // chi-square(15) quantile at 0.999
}

TEST_CASE("reflected states read the mirrored lower half-plane sites") {
    const SampleKey k{99, 7};
    const ReflectedStates reflected(k);
    const SampleStates plain(k);
    for (std::int64_t i = -5; i <= 5; ++i)
        for (std::int64_t j = 0; j <= 5; ++j)
            CHECK(reflected({i, j}) == plain(reflect_lower({i, j})));
}
