#pragma once

#include <algorithm>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "perclab/domains.hpp"
#include "perclab/lattice.hpp"
#include "perclab/randomness.hpp"

namespace perclab {

/// Open-addressing set of packed site keys with O(1) clear via a
/// generation stamp. Cluster explorations run millions of times per
/// estimate; this avoids rehashing or zeroing between samples.
class VisitedSet {
  public:
    VisitedSet() { rebuild(1 << 12); }
    explicit VisitedSet(std::size_t initial_capacity) { rebuild(initial_capacity); }

    void clear() {
        if (++stamp_ == 0) {  // stamp wrapped; start from scratch
            std::fill(stamps_.begin(), stamps_.end(), 0u);
            stamp_ = 1;
        }
        size_ = 0;
    }

    /// Returns true if the key was not present (and inserts it).
    bool insert(std::uint64_t key) {
        std::size_t idx = slot(key);
        while (stamps_[idx] == stamp_) {
            if (keys_[idx] == key) return false;
            idx = (idx + 1) & mask_;
        }
        keys_[idx] = key;
        stamps_[idx] = stamp_;
        if (++size_ * 10 > keys_.size() * 7) grow();
        return true;
    }

    bool contains(std::uint64_t key) const {
        std::size_t idx = slot(key);
        while (stamps_[idx] == stamp_) {
            if (keys_[idx] == key) return true;
            idx = (idx + 1) & mask_;
        }
        return false;
    }

    std::size_t size() const { return size_; }

  private:
    std::size_t slot(std::uint64_t key) const {
        return static_cast<std::size_t>((key * 0x9e3779b97f4a7c15ULL) >> shift_) & mask_;
    }

    void rebuild(std::size_t capacity) {
        std::size_t cap = 16;
        int log2cap = 4;
        while (cap < capacity) {
            cap <<= 1;
            ++log2cap;
        }
        keys_.assign(cap, 0);
        stamps_.assign(cap, 0);
        mask_ = cap - 1;
        shift_ = 64 - log2cap;
        stamp_ = 1;
        size_ = 0;
    }

    void grow() {
        std::vector<std::uint64_t> old_keys = std::move(keys_);
        std::vector<std::uint32_t> old_stamps = std::move(stamps_);
        const std::uint32_t old_stamp = stamp_;
        rebuild(old_keys.size() * 2);
        for (std::size_t k = 0; k < old_keys.size(); ++k)
            if (old_stamps[k] == old_stamp) insert(old_keys[k]);
    }

    std::vector<std::uint64_t> keys_;
    std::vector<std::uint32_t> stamps_;
    std::size_t mask_ = 0;
    int shift_ = 0;
    std::uint32_t stamp_ = 1;
    std::size_t size_ = 0;
};

/// Worker-local scratch buffers reused across samples.
struct ExploreScratch {
    VisitedSet visited;
    std::vector<std::uint64_t> queue;
};

enum class HalfPlane { none, upper, lower };

constexpr bool half_plane_contains(HalfPlane hp, SiteCoord c) {
    switch (hp) {
        case HalfPlane::none: return true;
        case HalfPlane::upper: return c.j >= 0;
        case HalfPlane::lower: return c.j <= -1;
    }
    return true;
}

/// Finite axial-coordinate box, inclusive on all four bounds.
struct AxialBox {
    std::int64_t i_min, i_max, j_min, j_max;

    constexpr bool contains(SiteCoord c) const {
        return c.i >= i_min && c.i <= i_max && c.j >= j_min && c.j <= j_max;
    }
};

/// Site-centered disk with squared radius in lattice units, compared
/// against the exact integer form norm2_units.
struct DiskUnits {
    SiteCoord center;
    double radius2_units;

    bool contains(SiteCoord c) const {
        return static_cast<double>(dist2_units(c, center)) < radius2_units;
    }
};

/// Membership predicate for one connection event, a conjunction of
/// clauses with two roles:
///
///  - universe clauses (half_plane, patch): sites outside do not exist;
///    the exploration never looks at their states.
///  - interior clauses (disk, domain): sites outside exist but lie beyond
///    the region; reaching an open one means the cluster escaped.
struct Region {
    HalfPlane half_plane = HalfPlane::none;
    std::optional<AxialBox> patch;
    std::optional<DiskUnits> disk;
    const Domain* domain = nullptr;
    LatticeGeometry geom{1.0};  // used by the domain clause

    bool in_universe(SiteCoord c) const {
        if (!half_plane_contains(half_plane, c)) return false;
        if (patch && !patch->contains(c)) return false;
        return true;
    }

    bool in_interior(SiteCoord c) const {
        if (disk && !disk->contains(c)) return false;
        if (domain && !domain->contains(geom.position(c))) return false;
        return true;
    }

    bool contains(SiteCoord c) const { return in_universe(c) && in_interior(c); }

    bool unbounded_interior() const { return !disk && !domain; }

    static Region everything() { return {}; }
};

struct ExplorationResult {
    bool escaped = false;            // an open site beyond the region's interior was reached
    std::uint32_t targets_hit = 0;   // bitmask over the targets span
    std::uint64_t visited_count = 0; // open sites expanded by the search
    bool truncated = false;          // an open in-region site beyond the safety box was not expanded

    bool hit(std::size_t target_index) const { return (targets_hit >> target_index) & 1u; }
    bool all_hit(std::size_t n_targets) const {
        return n_targets == 0 || targets_hit == ((n_targets >= 32 ? 0u : (1u << n_targets)) - 1u);
    }
};

struct ExploreOptions {
    bool stop_on_escape = true;
    bool stop_on_all_targets = true;
};

/// Breadth-first exploration of the open cluster of `start` inside
/// region ∩ box. If the start site is closed the result is empty. Open
/// sites outside the region's interior set `escaped`; open in-region sites
/// outside the box set `truncated` (they are recorded, never expanded, so
/// a truncated negative is a certified lower bound for monotone events).
template <typename StateFn>
ExplorationResult explore(const StateFn& open, SiteCoord start, const Region& region,
                          std::span<const SiteCoord> targets, const Region& box,
                          ExploreScratch& scratch, ExploreOptions opts = {}) {
    if (targets.size() > 32) throw std::invalid_argument("explore: at most 32 targets");
    if (!region.contains(start) || !box.contains(start))
        throw std::invalid_argument("explore: start site outside region or box");

    ExplorationResult result{};
    scratch.visited.clear();
    scratch.queue.clear();
    scratch.visited.insert(pack_site(start));
    if (!open(start)) return result;

    const std::uint32_t all_mask =
        targets.empty() ? 0u : static_cast<std::uint32_t>((1ULL << targets.size()) - 1);
    scratch.queue.push_back(pack_site(start));
    std::size_t head = 0;
    while (head < scratch.queue.size()) {
        const SiteCoord c = unpack_site(scratch.queue[head++]);
        ++result.visited_count;
        for (std::size_t t = 0; t < targets.size(); ++t) {
            if (c == targets[t]) {
                result.targets_hit |= 1u << t;
                if (opts.stop_on_all_targets && result.targets_hit == all_mask) return result;
            }
        }
        for (const SiteCoord& d : kNeighborOffsets) {
            const SiteCoord n = c + d;
            if (!region.in_universe(n)) continue;
            if (!scratch.visited.insert(pack_site(n))) continue;
            if (!open(n)) continue;
            if (!region.in_interior(n)) {
                result.escaped = true;
                if (opts.stop_on_escape) return result;
                continue;
            }
            if (!box.contains(n)) {
                result.truncated = true;
                continue;
            }
            scratch.queue.push_back(pack_site(n));
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Arm events
// ---------------------------------------------------------------------------

/// Core of the one-arm detectors: true iff the open cluster of `center`
/// (within the given half-plane, if any) contains a site at squared
/// distance >= eps2_units from `center`, in lattice units.
template <typename StateFn>
bool arm_event(const StateFn& open, SiteCoord center, double eps2_units, HalfPlane hp,
               ExploreScratch& scratch) {
    Region region;
    region.half_plane = hp;
    region.disk = DiskUnits{center, eps2_units};
    if (!region.disk->contains(center)) {
        // Degenerate radius: the center alone realizes the event if open.
        return half_plane_contains(hp, center) && open(center);
    }
    const ExplorationResult r =
        explore(open, center, region, {}, Region::everything(), scratch);
    return r.escaped;
}

/// Maximal squared reach (in lattice units) of the open cluster of
/// `center`, capped at cap2_units: returns cap2_units as soon as the
/// cluster provably extends that far, -1 if the center is closed. One
/// exploration therefore decides every arm event with radius <= cap, which
/// is how the epsilon sweeps share samples across radii.
template <typename StateFn>
double arm_reach2(const StateFn& open, SiteCoord center, double cap2_units, HalfPlane hp,
                  ExploreScratch& scratch) {
    if (!open(center)) return -1.0;
    scratch.visited.clear();
    scratch.queue.clear();
    scratch.visited.insert(pack_site(center));
    scratch.queue.push_back(pack_site(center));
    std::int64_t best = 0;
    std::size_t head = 0;
    while (head < scratch.queue.size()) {
        const SiteCoord c = unpack_site(scratch.queue[head++]);
        for (const SiteCoord& d : kNeighborOffsets) {
            const SiteCoord n = c + d;
            if (!half_plane_contains(hp, n)) continue;
            if (!scratch.visited.insert(pack_site(n))) continue;
            if (!open(n)) continue;
            const std::int64_t q = dist2_units(n, center);
            if (static_cast<double>(q) >= cap2_units) return cap2_units;
            if (q > best) best = q;
            scratch.queue.push_back(pack_site(n));
        }
    }
    return static_cast<double>(best);
}

/// Bulk one-arm event: the open cluster of z^a = nearest_site(z) is not
/// fully contained in the open disk of radius eps around position(z^a).
template <typename StateFn>
bool one_arm_at(const StateFn& open, SiteCoord center, double eps, const LatticeGeometry& g,
                ExploreScratch& scratch) {
    return arm_event(open, center, g.units2(eps), HalfPlane::none, scratch);
}

inline bool one_arm(SampleKey k, std::complex<double> z, double eps, const LatticeGeometry& g,
                    ExploreScratch& scratch) {
    return one_arm_at(SampleStates(k), nearest_site(z, g), eps, g, scratch);
}

/// Boundary one-arm event: within the discrete upper half-plane, the open
/// cluster of the origin reaches distance >= eps from the origin.
inline bool boundary_one_arm(SampleKey k, double eps, const LatticeGeometry& g,
                             ExploreScratch& scratch) {
    return arm_event(SampleStates(k), SiteCoord{0, 0}, g.units2(eps), HalfPlane::upper, scratch);
}

// ---------------------------------------------------------------------------
// Anchored / multipoint events
// ---------------------------------------------------------------------------

struct ConnectOutcome {
    bool connected = false;
    bool truncated = false;  // safety box touched while the event is false
};

/// All target sites joined to `start` by one open cluster of the discrete
/// upper half-plane intersected with the safety disk of squared radius
/// box2_units around the origin.
template <typename StateFn>
ConnectOutcome half_plane_connect(const StateFn& open, SiteCoord start,
                                  std::span<const SiteCoord> targets, double box2_units,
                                  ExploreScratch& scratch) {
    Region region;
    region.half_plane = HalfPlane::upper;
    Region box;
    box.disk = DiskUnits{SiteCoord{0, 0}, box2_units};
    const ExplorationResult r = explore(open, start, region, targets, box, scratch);
    ConnectOutcome out;
    out.connected = r.all_hit(targets.size());
    out.truncated = r.truncated && !out.connected;
    return out;
}

/// Discretizes the anchored-cluster geometry once so estimators can reuse
/// it across samples: z^a in the discrete upper half-plane, the origin as
/// anchor, and the safety radius box_factor * |z|.
struct AnchoredEvent {
    SiteCoord site;
    double box2_units;

    AnchoredEvent(std::complex<double> z, const LatticeGeometry& g, double box_factor) {
        if (!(z.imag() > 0.0))
            throw std::invalid_argument("anchored event: Im z must be positive");
        if (!(box_factor >= 2.0))
            throw std::invalid_argument("anchored event: box_factor must be >= 2");
        site = nearest_site(z, g, SiteRestrict::upper_half_plane);
        box2_units = g.units2(box_factor * std::abs(z));
    }

    template <typename StateFn>
    ConnectOutcome run(const StateFn& open, ExploreScratch& scratch) const {
        const SiteCoord targets[1] = {site};
        return half_plane_connect(open, SiteCoord{0, 0}, targets, box2_units, scratch);
    }
};

/// Anchored connection event z^a <-H-> 0: an open path inside the discrete
/// upper half-plane (and the safety box) joining z^a to the origin.
inline bool anchored(SampleKey k, std::complex<double> z, const LatticeGeometry& g,
                     double box_factor, ExploreScratch& scratch, bool* truncated = nullptr) {
    const AnchoredEvent ev(z, g, box_factor);
    const ConnectOutcome out = ev.run(SampleStates(k), scratch);
    if (truncated) *truncated = out.truncated;
    return out.connected;
}

/// Multipoint bulk-boundary event: bulk points z_1..z_k (Im > 0) and
/// boundary points x_1..x_n (mapped to row-0 sites) all in one open
/// cluster of the discrete upper half-plane.
struct MultipointEvent {
    std::vector<SiteCoord> sites;  // boundary sites first, then bulk
    double box2_units;

    MultipointEvent(std::span<const std::complex<double>> bulk, std::span<const double> boundary,
                    const LatticeGeometry& g, double box_factor) {
        if (bulk.empty() || boundary.empty())
            throw std::invalid_argument("multipoint event: need at least one bulk and one boundary point");
        double max_norm = 0.0;
        for (double x : boundary) {
            sites.push_back(nearest_boundary_site(x, g));
            max_norm = std::max(max_norm, std::abs(x));
        }
        for (const std::complex<double>& z : bulk) {
            if (!(z.imag() > 0.0))
                throw std::invalid_argument("multipoint event: bulk points need Im z > 0");
            sites.push_back(nearest_site(z, g, SiteRestrict::upper_half_plane));
            max_norm = std::max(max_norm, std::abs(z));
        }
        if (!(box_factor >= 2.0))
            throw std::invalid_argument("multipoint event: box_factor must be >= 2");
        box2_units = g.units2(box_factor * max_norm);
    }

    template <typename StateFn>
    ConnectOutcome run(const StateFn& open, ExploreScratch& scratch) const {
        const std::span<const SiteCoord> rest(sites.data() + 1, sites.size() - 1);
        return half_plane_connect(open, sites.front(), rest, box2_units, scratch);
    }
};

inline bool multipoint(SampleKey k, std::span<const std::complex<double>> bulk,
                       std::span<const double> boundary, const LatticeGeometry& g,
                       double box_factor, ExploreScratch& scratch, bool* truncated = nullptr) {
    const MultipointEvent ev(bulk, boundary, g, box_factor);
    const ConnectOutcome out = ev.run(SampleStates(k), scratch);
    if (truncated) *truncated = out.truncated;
    return out.connected;
}

// ---------------------------------------------------------------------------
// Gasket events
// ---------------------------------------------------------------------------

/// Gasket membership of a single point: the open cluster of z^a contains a
/// site whose position lies outside the domain. When the snapped site
/// itself falls outside (z within a mesh of the boundary) the event is
/// just "z^a open".
template <typename StateFn>
bool gasket_hit_at(const StateFn& open, SiteCoord site, const Domain& dom,
                   const LatticeGeometry& g, ExploreScratch& scratch) {
    if (!dom.contains(g.position(site))) return open(site);
    Region region;
    region.domain = &dom;
    region.geom = g;
    const ExplorationResult r =
        explore(open, site, region, {}, Region::everything(), scratch);
    return r.escaped;
}

inline bool gasket_hit(SampleKey k, std::complex<double> z, const Domain& dom,
                       const LatticeGeometry& g, ExploreScratch& scratch) {
    if (!dom.contains(z)) throw std::domain_error("gasket_hit: z outside the domain");
    return gasket_hit_at(SampleStates(k), nearest_site(z, g), dom, g, scratch);
}

/// Multi-source sweep marking, in one pass per sample, every open site of a
/// bounded domain whose cluster reaches the boundary. Seeded from the open
/// exterior collar; after run(), point_hit answers gasket membership for
/// any site against the same configuration. The interior mask and collar
/// are precomputed once, and per-sample marks are kept in a stamped flat
/// array over the domain's bounding box.
class GasketSweep {
  public:
    GasketSweep(const Domain& dom, const LatticeGeometry& g)
        : dom_(dom), geom_(g), bounds_(axial_bounds(dom, g)) {
        width_ = bounds_.i_max - bounds_.i_min + 1;
        height_ = bounds_.j_max - bounds_.j_min + 1;
        interior_.assign(static_cast<std::size_t>(width_ * height_), 0);
        for (std::int64_t j = bounds_.j_min; j <= bounds_.j_max; ++j)
            for (std::int64_t i = bounds_.i_min; i <= bounds_.i_max; ++i)
                if (dom.contains(g.position({i, j}))) interior_[index({i, j})] = 1;
        collar_ = exterior_collar(dom, g);
        marks_.assign(interior_.size(), 0);
    }

    template <typename StateFn>
    void run(const StateFn& open, ExploreScratch& scratch) {
        ++stamp_;
        scratch.queue.clear();
        for (const SiteCoord& s : collar_) {
            if (!open(s)) continue;
            for (const SiteCoord& d : kNeighborOffsets) {
                const SiteCoord n = s + d;
                if (!in_interior(n)) continue;
                const std::size_t idx = index(n);
                if (marks_[idx] == stamp_) continue;
                if (!open(n)) continue;
                marks_[idx] = stamp_;
                scratch.queue.push_back(pack_site(n));
            }
        }
        std::size_t head = 0;
        while (head < scratch.queue.size()) {
            const SiteCoord c = unpack_site(scratch.queue[head++]);
            for (const SiteCoord& d : kNeighborOffsets) {
                const SiteCoord n = c + d;
                if (!in_interior(n)) continue;
                const std::size_t idx = index(n);
                if (marks_[idx] == stamp_) continue;
                if (!open(n)) continue;
                marks_[idx] = stamp_;
                scratch.queue.push_back(pack_site(n));
            }
        }
    }

    /// Gasket membership of a site against the configuration of the last
    /// run(); sites snapped outside the domain reduce to their own state.
    template <typename StateFn>
    bool point_hit(const StateFn& open, SiteCoord site) const {
        if (!in_interior(site)) return open(site);
        return marks_[index(site)] == stamp_;
    }

    const std::vector<SiteCoord>& collar() const { return collar_; }

  private:
    bool in_interior(SiteCoord c) const {
        if (c.i < bounds_.i_min || c.i > bounds_.i_max || c.j < bounds_.j_min || c.j > bounds_.j_max)
            return false;
        return interior_[index(c)] != 0;
    }

    std::size_t index(SiteCoord c) const {
        return static_cast<std::size_t>((c.j - bounds_.j_min) * width_ + (c.i - bounds_.i_min));
    }

    Domain dom_;
    LatticeGeometry geom_;
    AxialBounds bounds_;
    std::int64_t width_ = 0, height_ = 0;
    std::vector<std::uint8_t> interior_;
    std::vector<SiteCoord> collar_;
    std::vector<std::uint32_t> marks_;
    std::uint32_t stamp_ = 0;
};

// ---------------------------------------------------------------------------
// Method of images
// ---------------------------------------------------------------------------

struct ImagesOutcome {
    bool upper = false;
    bool lower = false;
    bool both = false;
};

/// Doubled anchored event: the upper event z^a <-H-> 0 under key_upper and
/// its mirror image in the discrete lower half-plane under key_lower (every
/// queried site goes through reflect_lower, so with key_upper == key_lower
/// the two events are functions of disjoint site sets and independent).
inline ImagesOutcome images_event(SampleKey key_upper, SampleKey key_lower, std::complex<double> z,
                                  const LatticeGeometry& g, double box_factor,
                                  ExploreScratch& scratch) {
    const AnchoredEvent ev(z, g, box_factor);
    ImagesOutcome out;
    out.upper = ev.run(SampleStates(key_upper), scratch).connected;
    out.lower = ev.run(ReflectedStates(key_lower), scratch).connected;
    out.both = out.upper && out.lower;
    return out;
}

}  // namespace perclab
