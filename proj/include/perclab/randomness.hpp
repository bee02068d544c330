#pragma once

#include <cstdint>

#include "perclab/lattice.hpp"

namespace perclab {

/// Keys one percolation configuration: distinct (seed, sample) pairs index
/// statistically independent configurations. Site states are evaluated
/// lazily from the key, so a configuration is never materialized and an
/// exploration can visit arbitrarily distant sites.
struct SampleKey {
    std::uint64_t seed = 0;
    std::uint64_t sample = 0;

    friend constexpr bool operator==(const SampleKey&, const SampleKey&) = default;
};

/// splitmix64 finalizer; the building block of the site-state hash.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

/// Per-sample base value; hoisted out of the site loop by SampleStates.
constexpr std::uint64_t sample_base(SampleKey k) {
    return mix64(mix64(k.seed + 0x9e3779b97f4a7c15ULL) ^ (k.sample + 0x6a09e667f3bcc909ULL));
}

constexpr bool site_open_from_base(std::uint64_t base, SiteCoord c) {
    return (mix64(mix64(base ^ pack_site(c))) >> 63) != 0;
}

/// Pure function of (key, coordinate): open with probability 1/2,
/// independent across coordinates up to the quality of the mixer
/// (validated statistically in the test suite).
constexpr bool site_open(SampleKey k, SiteCoord c) {
    return site_open_from_base(sample_base(k), c);
}

/// State source for one sample; satisfies the StateFn concept
/// (bool operator()(SiteCoord) const) used by the explorers.
class SampleStates {
  public:
    explicit SampleStates(SampleKey k) : base_(sample_base(k)) {}

    bool operator()(SiteCoord c) const { return site_open_from_base(base_, c); }

  private:
    std::uint64_t base_;
};

/// Reads the lower half-plane through the upper half-plane's coordinates:
/// every queried site is mapped by reflect_lower before the state lookup.
/// Used for the doubled ("images") event; with the same key as a plain
/// SampleStates the two half-plane events read disjoint site sets.
class ReflectedStates {
  public:
    explicit ReflectedStates(SampleKey k) : base_(sample_base(k)) {}

    bool operator()(SiteCoord c) const { return site_open_from_base(base_, reflect_lower(c)); }

  private:
    std::uint64_t base_;
};

}  // namespace perclab
