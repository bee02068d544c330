#include <doctest.h>

#include <random>
#include <set>

#include "perclab/explorer.hpp"

using namespace perclab;

namespace {

struct AllOpen {
    bool operator()(SiteCoord) const { return true; }
};

struct MapStates {
    std::set<std::pair<std::int64_t, std::int64_t>> closed;
    bool operator()(SiteCoord c) const { return closed.count({c.i, c.j}) == 0; }
};

// Direct 7-site evaluation of the sub-mesh one-arm event.
template <typename StateFn>
bool small_arm_direct(const StateFn& open, SiteCoord center, HalfPlane hp) {
    if (!open(center)) return false;
    for (const SiteCoord& n : neighbors(center))
        if (half_plane_contains(hp, n) && open(n)) return true;
    return false;
}

}  // namespace

TEST_CASE("visited set inserts, finds and survives growth") {
    VisitedSet set(16);
    std::mt19937_64 rng(42);
    std::vector<std::uint64_t> keys;
    for (int t = 0; t < 20000; ++t) keys.push_back(rng());
    for (const auto k : keys) CHECK(set.insert(k));
    for (const auto k : keys) {
        CHECK_FALSE(set.insert(k));
        CHECK(set.contains(k));
    }
    CHECK(set.size() == keys.size());
    set.clear();
    CHECK_FALSE(set.contains(keys[0]));
    CHECK(set.insert(keys[0]));
}

TEST_CASE("explore on fixtures") {
    ExploreScratch scratch;

    SUBCASE("closed start yields the empty result") {
        MapStates states;
        states.closed.insert({0, 0});
        const ExplorationResult r = explore(states, {0, 0}, Region::everything(), {},
                                            Region::everything(), scratch);
        CHECK_FALSE(r.escaped);
        CHECK(r.targets_hit == 0);
        CHECK(r.visited_count == 0);
        CHECK_FALSE(r.truncated);
    }

    SUBCASE("adjacent target is reached within two visits") {
        Region region;
        region.patch = AxialBox{-3, 3, -3, 3};
        const SiteCoord targets[1] = {{1, 0}};
        const ExplorationResult r =
            explore(AllOpen{}, {0, 0}, region, targets, Region::everything(), scratch);
        CHECK(r.hit(0));
        CHECK(r.visited_count <= 2);
    }

    SUBCASE("a closed wall separates start from target") {
        // 3x3 patch, start at (0,0); its only in-patch neighbors (1,0) and
        // (0,1) are closed, so the cluster is the start site alone.
        MapStates states;
        states.closed = {{1, 0}, {0, 1}};
        Region region;
        region.patch = AxialBox{0, 2, 0, 2};
        const SiteCoord targets[1] = {{2, 2}};
        const ExplorationResult r =
            explore(states, {0, 0}, region, targets, Region::everything(), scratch);
        CHECK(r.targets_hit == 0);
        CHECK(r.visited_count == 1);
        CHECK_FALSE(r.escaped);
    }

    SUBCASE("start outside the region is rejected") {
        Region region;
        region.patch = AxialBox{0, 2, 0, 2};
        CHECK_THROWS_AS(
            explore(AllOpen{}, {5, 5}, region, {}, Region::everything(), scratch),
            std::invalid_argument);
    }
}

TEST_CASE("one-arm event") {
    ExploreScratch scratch;
    const LatticeGeometry g{1.0};

    SUBCASE("all open escapes any radius") {
        CHECK(one_arm_at(AllOpen{}, {0, 0}, 10.0, g, scratch));
    }

    SUBCASE("closed center never escapes") {
        MapStates states;
        states.closed.insert({0, 0});
        CHECK_FALSE(one_arm_at(states, {0, 0}, 0.5, g, scratch));
    }

    SUBCASE("sub-mesh radius reduces to center plus one open neighbor") {
        for (std::uint64_t s = 0; s < 4000; ++s) {
            const SampleStates open(SampleKey{2024, s});
            CHECK(one_arm_at(open, {0, 0}, 0.5, g, scratch) ==
                  small_arm_direct(open, {0, 0}, HalfPlane::none));
        }
    }

    SUBCASE("keyed wrapper snaps the point") {
        const SampleKey k{7, 9};
        CHECK(one_arm(k, {0.1, -0.05}, 0.5, g, scratch) ==
              small_arm_direct(SampleStates(k), {0, 0}, HalfPlane::none));
    }
}

TEST_CASE("boundary one-arm event") {
    ExploreScratch scratch;
    const LatticeGeometry g{1.0};

    SUBCASE("all open escapes") {
        CHECK(arm_event(AllOpen{}, SiteCoord{0, 0}, 100.0, HalfPlane::upper, scratch));
    }

    SUBCASE("sub-mesh radius reduces to the four upper-half-plane neighbors") {
        for (std::uint64_t s = 0; s < 4000; ++s) {
            const SampleKey k{77, s};
            const SampleStates open(k);
            CHECK(boundary_one_arm(k, 0.5, g, scratch) ==
                  small_arm_direct(open, {0, 0}, HalfPlane::upper));
        }
    }

    SUBCASE("never touches the lower half-plane") {
        // Open only along a lower-half-plane path: the boundary event must
        // stay false even though the full-plane cluster is large.
        MapStates states;
        for (std::int64_t i = -5; i <= 5; ++i)
            for (std::int64_t j = 0; j <= 5; ++j)
                if (!(i == 0 && j == 0)) states.closed.insert({i, j});
        CHECK_FALSE(arm_event(states, {0, 0}, 4.0, HalfPlane::upper, scratch));
        CHECK(arm_event(states, {0, 0}, 4.0, HalfPlane::none, scratch));
    }
}

TEST_CASE("arm reach decides every radius at once") {
    ExploreScratch scratch;
    for (std::uint64_t s = 0; s < 2000; ++s) {
        const SampleStates open(SampleKey{31415, s});
        const double cap2 = 36.0;
        const double reach2 = arm_reach2(open, {0, 0}, cap2, HalfPlane::none, scratch);
        for (const double eps2 : {1.0, 2.25, 9.0, 36.0}) {
            const bool direct = arm_event(open, {0, 0}, eps2, HalfPlane::none, scratch);
            CHECK(direct == (reach2 >= eps2));
        }
        const double breach2 = arm_reach2(open, {0, 0}, cap2, HalfPlane::upper, scratch);
        for (const double eps2 : {1.0, 9.0}) {
            const bool direct = arm_event(open, {0, 0}, eps2, HalfPlane::upper, scratch);
            CHECK(direct == (breach2 >= eps2));
        }
    }
}

TEST_CASE("anchored event") {
    ExploreScratch scratch;
    const LatticeGeometry g{0.25};
    const std::complex<double> z{0.1, 0.8};

    SUBCASE("all open connects") {
        const AnchoredEvent ev(z, g, 4.0);
        CHECK(ev.run(AllOpen{}, scratch).connected);
    }

    SUBCASE("closed endpoints disconnect") {
        const AnchoredEvent ev(z, g, 4.0);
        MapStates origin_closed;
        origin_closed.closed.insert({0, 0});
        CHECK_FALSE(ev.run(origin_closed, scratch).connected);
        MapStates z_closed;
        z_closed.closed.insert({ev.site.i, ev.site.j});
        CHECK_FALSE(ev.run(z_closed, scratch).connected);
    }

    SUBCASE("requires Im z > 0 and box_factor >= 2") {
        CHECK_THROWS_AS(AnchoredEvent({0.5, 0.0}, g, 4.0), std::invalid_argument);
        CHECK_THROWS_AS(AnchoredEvent(z, g, 1.0), std::invalid_argument);
    }

    SUBCASE("truncation flags an unresolved negative") {
        // Wall off z^a so the event is false, leave everything else open:
        // the exploration floods to the box and must report truncation.
        const AnchoredEvent ev(z, g, 4.0);
        MapStates states;
        const SiteCoord t = ev.site;
        states.closed.insert({t.i, t.j});
        for (const SiteCoord& n : neighbors(t)) states.closed.insert({n.i, n.j});
        const ConnectOutcome out = ev.run(states, scratch);
        CHECK_FALSE(out.connected);
        CHECK(out.truncated);
    }

    SUBCASE("per-sample box monotonicity") {
        const AnchoredEvent narrow(z, g, 2.0);
        const AnchoredEvent wide(z, g, 8.0);
        for (std::uint64_t s = 0; s < 500; ++s) {
            const SampleStates open(SampleKey{555, s});
            if (narrow.run(open, scratch).connected) CHECK(wide.run(open, scratch).connected);
        }
    }
}

TEST_CASE("multipoint event") {
    ExploreScratch scratch;
    const LatticeGeometry g{0.25};

    SUBCASE("reduces to anchored for one bulk point at x = 0") {
        const std::complex<double> z{0.3, 0.6};
        const std::complex<double> bulk[1] = {z};
        const double boundary[1] = {0.0};
        const MultipointEvent multi(bulk, boundary, g, 4.0);
        const AnchoredEvent anch(z, g, 4.0);
        for (std::uint64_t s = 0; s < 2000; ++s) {
            const SampleStates open(SampleKey{8080, s});
            CHECK(multi.run(open, scratch).connected == anch.run(open, scratch).connected);
        }
    }

    SUBCASE("any closed involved site kills the event") {
        const std::complex<double> bulk[2] = {{0.3, 0.6}, {-0.2, 0.4}};
        const double boundary[1] = {0.25};
        const MultipointEvent multi(bulk, boundary, g, 4.0);
        for (std::uint64_t s = 0; s < 2000; ++s) {
            const SampleStates open(SampleKey{4242, s});
            if (multi.run(open, scratch).connected)
                for (const SiteCoord& site : multi.sites) CHECK(open(site));
        }
    }

    SUBCASE("validates its inputs") {
        const std::complex<double> below[1] = {{0.3, -0.6}};
        const double boundary[1] = {0.0};
        CHECK_THROWS_AS(MultipointEvent(below, boundary, g, 4.0), std::invalid_argument);
        CHECK_THROWS_AS(MultipointEvent({}, boundary, g, 4.0), std::invalid_argument);
    }
}

TEST_CASE("gasket detection") {
    ExploreScratch scratch;
    const LatticeGeometry g{0.25};
    const Domain disk = Domain::disk({0.0, 0.0}, 1.0);

    SUBCASE("all open reaches the boundary, closed center does not") {
        CHECK(gasket_hit_at(AllOpen{}, {0, 0}, disk, g, scratch));
        MapStates closed_center;
        closed_center.closed.insert({0, 0});
        CHECK_FALSE(gasket_hit_at(closed_center, {0, 0}, disk, g, scratch));
    }

    SUBCASE("points outside the domain are rejected") {
        CHECK_THROWS_AS(gasket_hit(SampleKey{1, 1}, {2.0, 0.0}, disk, g, scratch),
                        std::domain_error);
    }

    SUBCASE("single-point detector agrees with the multi-source sweep") {
        GasketSweep sweep(disk, g);
        const SiteCoord probes[] = {nearest_site({0.0, 0.0}, g), nearest_site({0.5, 0.25}, g),
                                    nearest_site({-0.4, -0.6}, g), nearest_site({0.0, 0.9}, g)};
        for (std::uint64_t s = 0; s < 3000; ++s) {
            const SampleStates open(SampleKey{606, s});
            sweep.run(open, scratch);
            for (const SiteCoord& p : probes)
                CHECK(sweep.point_hit(open, p) == gasket_hit_at(open, p, disk, g, scratch));
        }
    }
}

TEST_CASE("images event is the conjunction of independent halves") {
    ExploreScratch scratch;
    const LatticeGeometry g{0.25};
    const std::complex<double> z{0.0, 1.0};

    SUBCASE("all open yields true everywhere") {
        const AnchoredEvent ev(z, g, 4.0);
        CHECK(ev.run(AllOpen{}, scratch).connected);
        const ImagesOutcome all = [&] {
            ImagesOutcome out;
            out.upper = ev.run(AllOpen{}, scratch).connected;
            out.lower = ev.run(AllOpen{}, scratch).connected;
            out.both = out.upper && out.lower;
            return out;
        }();
        CHECK(all.upper);
        CHECK(all.lower);
        CHECK(all.both);
    }

    SUBCASE("per-sample identity both = upper AND lower") {
        for (std::uint64_t s = 0; s < 1500; ++s) {
            const SampleKey k{321, s};
            const ImagesOutcome out = images_event(k, k, z, g, 4.0, scratch);
            CHECK(out.both == (out.upper && out.lower));
        }
    }

    SUBCASE("upper and lower read disjoint states under a shared key") {
        // Closing every lower half-plane site kills only the lower event.
        const AnchoredEvent ev(z, g, 4.0);
        struct UpperOnly {
            bool operator()(SiteCoord c) const { return c.j >= 0; }
        };
        CHECK(ev.run(UpperOnly{}, scratch).connected);
        struct Mirror {
            UpperOnly inner;
            bool operator()(SiteCoord c) const { return inner(reflect_lower(c)); }
        };
        CHECK_FALSE(ev.run(Mirror{}, scratch).connected);
    }
}
