#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "perclab/domains.hpp"
#include "perclab/explorer.hpp"
#include "perclab/lattice.hpp"
#include "perclab/randomness.hpp"

namespace perclab {

/// A small patch whose event probability can be computed exactly by
/// exhaustive enumeration, paired with the Monte Carlo detector that must
/// reproduce it. The exact side never calls the exploration code: it walks
/// its own adjacency lists over explicit configuration bitmasks, so the
/// two numbers come from independent paths.
///
/// Events come in two forms:
///  - connect: start and all targets in one open cluster of the patch graph.
///  - escape:  the open cluster of start touches an open escape candidate;
///    candidate states are independent of the patch, so their contribution
///    is the exact factor 1 - 2^-m with m the number of candidates adjacent
///    to the cluster.
struct Patch {
    enum class Mc { one_arm, boundary_one_arm, connect_box, gasket };

    std::string name;
    std::vector<SiteCoord> sites;              // enumerated sites (<= 24)
    SiteCoord start{};
    std::vector<SiteCoord> targets;            // connect events
    std::vector<SiteCoord> escape_candidates;  // escape events

    Mc mc = Mc::connect_box;
    LatticeGeometry geom{1.0};
    double eps = 0.0;            // one_arm / boundary_one_arm
    std::optional<Domain> domain;  // gasket
    std::optional<AxialBox> box;   // connect_box universe
    HalfPlane half_plane = HalfPlane::none;
};

namespace oracle_detail {

struct PatchGraph {
    std::vector<std::uint32_t> adjacency;       // adjacency[k] = bitmask of sites adjacent to site k
    std::vector<std::uint32_t> escape_touch;    // escape_touch[e] = bitmask of sites adjacent to candidate e
    int start = -1;
    std::uint32_t target_mask = 0;

    explicit PatchGraph(const Patch& p) {
        const std::size_t m = p.sites.size();
        if (m == 0 || m > 24) throw std::invalid_argument("oracle: patch must have 1..24 sites");
        adjacency.assign(m, 0);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b)
                if (a != b && dist2_units(p.sites[a], p.sites[b]) == 1)
                    adjacency[a] |= 1u << b;
        auto find = [&](SiteCoord c) {
            for (std::size_t k = 0; k < m; ++k)
                if (p.sites[k] == c) return static_cast<int>(k);
            return -1;
        };
        start = find(p.start);
        if (start < 0) throw std::invalid_argument("oracle: start not among patch sites");
        for (const SiteCoord& t : p.targets) {
            const int k = find(t);
            if (k < 0) throw std::invalid_argument("oracle: target not among patch sites");
            target_mask |= 1u << k;
        }
        escape_touch.reserve(p.escape_candidates.size());
        for (const SiteCoord& e : p.escape_candidates) {
            std::uint32_t touch = 0;
            for (std::size_t k = 0; k < m; ++k)
                if (dist2_units(e, p.sites[k]) == 1) touch |= 1u << k;
            escape_touch.push_back(touch);
        }
    }

    /// Open cluster of the start site as a bitmask, empty if start closed.
    std::uint32_t cluster(std::uint32_t config) const {
        if (!((config >> start) & 1u)) return 0;
        std::uint32_t cl = 1u << start;
        std::uint32_t frontier = cl;
        while (frontier != 0) {
            std::uint32_t next = 0;
            std::uint32_t f = frontier;
            while (f != 0) {
                const int k = std::countr_zero(f);
                f &= f - 1;
                next |= adjacency[static_cast<std::size_t>(k)];
            }
            next &= config & ~cl;
            cl |= next;
            frontier = next;
        }
        return cl;
    }
};

}  // namespace oracle_detail

/// Exact event probability by exhaustive enumeration of all 2^sites
/// configurations of the patch.
inline double oracle_exact(const Patch& p) {
    const oracle_detail::PatchGraph graph(p);
    const std::uint32_t m = static_cast<std::uint32_t>(p.sites.size());
    const std::uint64_t total = 1ULL << m;
    double acc = 0.0;
    for (std::uint64_t config = 0; config < total; ++config) {
        const std::uint32_t cl = graph.cluster(static_cast<std::uint32_t>(config));
        if (cl == 0) continue;
        if (!p.escape_candidates.empty()) {
            int touching = 0;
            for (const std::uint32_t touch : graph.escape_touch)
                if ((touch & cl) != 0) ++touching;
            acc += 1.0 - std::ldexp(1.0, -touching);  // 1 - 2^-touching
        } else if ((cl & graph.target_mask) == graph.target_mask) {
            acc += 1.0;
        }
    }
    return acc / static_cast<double>(total);
}

/// One Monte Carlo evaluation of the patch's event through the production
/// detectors, for the given sample.
inline bool oracle_mc_event(const Patch& p, SampleKey key, ExploreScratch& scratch) {
    const SampleStates open(key);
    switch (p.mc) {
        case Patch::Mc::one_arm:
            return one_arm_at(open, p.start, p.eps, p.geom, scratch);
        case Patch::Mc::boundary_one_arm:
            return arm_event(open, p.start, p.geom.units2(p.eps), HalfPlane::upper, scratch);
        case Patch::Mc::connect_box: {
            Region region;
            region.half_plane = p.half_plane;
            region.patch = p.box;
            const ExplorationResult r =
                explore(open, p.start, region, p.targets, Region::everything(), scratch);
            return r.all_hit(p.targets.size());
        }
        case Patch::Mc::gasket:
            return gasket_hit_at(open, p.start, *p.domain, p.geom, scratch);
    }
    return false;
}

namespace oracle_detail {

/// Sites at squared lattice distance < eps2 from the center, within the
/// given half-plane, found by scanning a covering box.
inline std::vector<SiteCoord> disk_sites(SiteCoord center, double eps2, HalfPlane hp) {
    std::vector<SiteCoord> out;
    const auto radius = static_cast<std::int64_t>(std::sqrt(eps2)) + 2;
    for (std::int64_t j = -radius; j <= radius; ++j) {
        for (std::int64_t i = -radius; i <= radius; ++i) {
            const SiteCoord c = center + SiteCoord{i, j};
            if (!half_plane_contains(hp, c)) continue;
            if (static_cast<double>(dist2_units(c, center)) < eps2) out.push_back(c);
        }
    }
    return out;
}

/// Open-exterior candidates: sites outside the set that are adjacent to it
/// (and inside the half-plane), computed from the sites' neighborhoods.
inline std::vector<SiteCoord> adjacent_outside(const std::vector<SiteCoord>& sites, HalfPlane hp) {
    std::vector<SiteCoord> out;
    auto inside = [&](SiteCoord c) {
        for (const SiteCoord& s : sites)
            if (s == c) return true;
        return false;
    };
    auto seen = [&](SiteCoord c) {
        for (const SiteCoord& s : out)
            if (s == c) return true;
        return false;
    };
    for (const SiteCoord& s : sites) {
        for (const SiteCoord& n : neighbors(s)) {
            if (!half_plane_contains(hp, n)) continue;
            if (inside(n) || seen(n)) continue;
            out.push_back(n);
        }
    }
    return out;
}

}  // namespace oracle_detail

/// Arm patch: interior sites enumerated, escape candidates analytic.
inline Patch arm_patch(std::string name, double eps, HalfPlane hp) {
    Patch p;
    p.name = std::move(name);
    p.geom = LatticeGeometry{1.0};
    p.eps = eps;
    p.half_plane = hp;
    p.mc = hp == HalfPlane::upper ? Patch::Mc::boundary_one_arm : Patch::Mc::one_arm;
    p.start = {0, 0};
    const double eps2 = eps * eps;
    p.sites = oracle_detail::disk_sites(p.start, eps2, hp);
    p.escape_candidates = oracle_detail::adjacent_outside(p.sites, hp);
    return p;
}

/// Gasket patch: interior of a bounded domain enumerated, exterior collar
/// contributions analytic.
inline Patch gasket_patch(std::string name, const Domain& dom, const LatticeGeometry& g,
                          std::complex<double> z) {
    Patch p;
    p.name = std::move(name);
    p.geom = g;
    p.domain = dom;
    p.mc = Patch::Mc::gasket;
    p.start = nearest_site(z, g);
    p.sites = interior_sites(dom, g);
    p.escape_candidates = exterior_collar(dom, g);
    return p;
}

/// Connection patch on a finite axial box within the upper half-plane.
inline Patch connect_patch(std::string name, AxialBox box, SiteCoord start,
                           std::vector<SiteCoord> targets) {
    Patch p;
    p.name = std::move(name);
    p.geom = LatticeGeometry{1.0};
    p.mc = Patch::Mc::connect_box;
    p.box = box;
    p.half_plane = HalfPlane::upper;
    p.start = start;
    p.targets = std::move(targets);
    for (std::int64_t j = box.j_min; j <= box.j_max; ++j)
        for (std::int64_t i = box.i_min; i <= box.i_max; ++i)
            if (half_plane_contains(p.half_plane, {i, j})) p.sites.push_back({i, j});
    return p;
}

/// The fixed patch family used by the oracle checks: covers bulk one-arm,
/// boundary one-arm, anchored, multipoint and gasket events, each with at
/// most 20 enumerated sites.
inline std::vector<Patch> builtin_patches() {
    std::vector<Patch> out;
    // Bulk one-arm, eps below one mesh unit: center plus 6 escape
    // candidates; closed form (1/2)(1 - 2^-6) = 63/128.
    out.push_back(arm_patch("one-arm-small", 0.5, HalfPlane::none));
    // Bulk one-arm, eps = 1.5: 7 interior sites, 12 escape candidates.
    out.push_back(arm_patch("one-arm-ring", 1.5, HalfPlane::none));
    // Boundary one-arm, eps below one mesh: closed form (1/2)(1 - 2^-4) = 15/32.
    out.push_back(arm_patch("boundary-arm-small", 0.5, HalfPlane::upper));
    // Boundary one-arm with a first ring in the half-plane.
    out.push_back(arm_patch("boundary-arm-ring", 1.5, HalfPlane::upper));
    // Anchored: 4x4 half-plane box, origin to the site two rows up.
    out.push_back(connect_patch("anchored-4x4", AxialBox{-1, 2, 0, 3}, {0, 0}, {{0, 2}}));
    // Multipoint: 5x4 box, one boundary point and two bulk points.
    out.push_back(
        connect_patch("multipoint-5x4", AxialBox{-2, 2, 0, 3}, {0, 0}, {{0, 2}, {1, 1}}));
    // Gasket of the unit disk at mesh 1/2: 13 interior sites.
    out.push_back(gasket_patch("gasket-disk", Domain::disk({0.0, 0.0}, 1.0),
                               LatticeGeometry{0.5}, {0.0, 0.0}));
    return out;
}

}  // namespace perclab
