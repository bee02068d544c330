#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "perclab/domains.hpp"
#include "perclab/explorer.hpp"
#include "perclab/lattice.hpp"
#include "perclab/oracle.hpp"
#include "perclab/randomness.hpp"
#include "perclab/stats.hpp"

namespace perclab {

// ---------------------------------------------------------------------------
// Deterministic sample-parallel driver
// ---------------------------------------------------------------------------

inline unsigned default_workers() {
    if (const char* env = std::getenv("PERCLAB_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end && *end == '\0' && v > 0 && v <= 4096) return static_cast<unsigned>(v);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

/// Runs body(key, ctx, acc) over sample indices [0, n), partitioned into
/// contiguous blocks by sample index only. Each worker gets its own
/// context (from make_ctx) and accumulator; accumulators are merged in
/// worker order. Accumulation must be commutative integer counting, so the
/// merged result is identical for any worker count.
template <typename Acc, typename MakeCtx, typename Body>
Acc parallel_samples(std::uint64_t n, std::uint64_t seed, unsigned workers, MakeCtx make_ctx,
                     Body body) {
    if (workers == 0) workers = default_workers();
    const auto wanted = static_cast<std::uint64_t>(workers);
    const std::uint64_t used = std::max<std::uint64_t>(1, std::min(wanted, n == 0 ? 1 : n));
    if (used == 1) {
        Acc acc{};
        auto ctx = make_ctx();
        for (std::uint64_t s = 0; s < n; ++s) body(SampleKey{seed, s}, ctx, acc);
        return acc;
    }
    std::vector<Acc> accs(used);
    std::vector<std::exception_ptr> errors(used);
    std::vector<std::thread> threads;
    threads.reserve(used);
    for (std::uint64_t w = 0; w < used; ++w) {
        const std::uint64_t lo = n * w / used;
        const std::uint64_t hi = n * (w + 1) / used;
        threads.emplace_back([&, w, lo, hi] {
            try {
                auto ctx = make_ctx();
                for (std::uint64_t s = lo; s < hi; ++s) body(SampleKey{seed, s}, ctx, accs[w]);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    Acc merged{};
    for (auto& a : accs) merged.merge(a);
    return merged;
}

template <typename Acc, typename Body>
Acc parallel_samples(std::uint64_t n, std::uint64_t seed, unsigned workers, Body body) {
    return parallel_samples<Acc>(
        n, seed, workers, [] { return ExploreScratch{}; },
        [&body](SampleKey k, ExploreScratch& scratch, Acc& acc) { body(k, scratch, acc); });
}

// ---------------------------------------------------------------------------
// Event specifications
// ---------------------------------------------------------------------------

/// Declarative description of one connection event, the unit the Monte
/// Carlo estimators evaluate. Serialized into run manifests.
struct EventSpec {
    enum class Kind { site_open, one_arm, boundary_one_arm, anchored, gasket, multipoint };

    Kind kind = Kind::site_open;
    double mesh = 1.0;
    std::complex<double> z{0.0, 0.0};            // site_open / one_arm / anchored / gasket
    double eps = 1.0;                            // arm radii
    std::optional<Domain> domain;                // gasket
    std::vector<std::complex<double>> bulk;      // multipoint
    std::vector<double> boundary;                // multipoint
    double box_factor = 4.0;

    LatticeGeometry geometry() const { return LatticeGeometry{mesh}; }

    static EventSpec site_open_at(std::complex<double> z, double mesh) {
        EventSpec s;
        s.kind = Kind::site_open;
        s.z = z;
        s.mesh = mesh;
        return s;
    }
    static EventSpec one_arm_at(std::complex<double> z, double eps, double mesh) {
        EventSpec s;
        s.kind = Kind::one_arm;
        s.z = z;
        s.eps = eps;
        s.mesh = mesh;
        return s;
    }
    static EventSpec boundary_arm(double eps, double mesh) {
        EventSpec s;
        s.kind = Kind::boundary_one_arm;
        s.eps = eps;
        s.mesh = mesh;
        return s;
    }
    static EventSpec anchored_at(std::complex<double> z, double mesh, double box_factor = 4.0) {
        EventSpec s;
        s.kind = Kind::anchored;
        s.z = z;
        s.mesh = mesh;
        s.box_factor = box_factor;
        return s;
    }
    static EventSpec gasket_at(std::complex<double> z, Domain dom, double mesh) {
        EventSpec s;
        s.kind = Kind::gasket;
        s.z = z;
        s.domain = std::move(dom);
        s.mesh = mesh;
        return s;
    }
    static EventSpec multipoint_at(std::vector<std::complex<double>> bulk,
                                   std::vector<double> boundary, double mesh,
                                   double box_factor = 4.0) {
        EventSpec s;
        s.kind = Kind::multipoint;
        s.bulk = std::move(bulk);
        s.boundary = std::move(boundary);
        s.mesh = mesh;
        s.box_factor = box_factor;
        return s;
    }
};

struct EventOutcome {
    bool value = false;
    bool truncated = false;
};

/// Resolves an EventSpec into a per-sample evaluator. Geometry (snapped
/// sites, unit thresholds) is computed once, here, not per sample.
inline std::function<EventOutcome(SampleKey, ExploreScratch&)> prepare(const EventSpec& spec) {
    const LatticeGeometry g = spec.geometry();
    switch (spec.kind) {
        case EventSpec::Kind::site_open: {
            const SiteCoord site = nearest_site(spec.z, g);
            return [site](SampleKey k, ExploreScratch&) {
                return EventOutcome{site_open(k, site), false};
            };
        }
        case EventSpec::Kind::one_arm: {
            const SiteCoord site = nearest_site(spec.z, g);
            const double eps2 = g.units2(spec.eps);
            return [site, eps2, g](SampleKey k, ExploreScratch& scratch) {
                return EventOutcome{arm_event(SampleStates(k), site, eps2, HalfPlane::none, scratch),
                                    false};
            };
        }
        case EventSpec::Kind::boundary_one_arm: {
            const double eps2 = g.units2(spec.eps);
            return [eps2](SampleKey k, ExploreScratch& scratch) {
                return EventOutcome{
                    arm_event(SampleStates(k), SiteCoord{0, 0}, eps2, HalfPlane::upper, scratch),
                    false};
            };
        }
        case EventSpec::Kind::anchored: {
            const AnchoredEvent ev(spec.z, g, spec.box_factor);
            return [ev](SampleKey k, ExploreScratch& scratch) {
                const ConnectOutcome out = ev.run(SampleStates(k), scratch);
                return EventOutcome{out.connected, out.truncated};
            };
        }
        case EventSpec::Kind::gasket: {
            if (!spec.domain) throw std::invalid_argument("gasket event: missing domain");
            if (!spec.domain->contains(spec.z))
                throw std::domain_error("gasket event: z outside the domain");
            const Domain dom = *spec.domain;
            const SiteCoord site = nearest_site(spec.z, g);
            return [dom, site, g](SampleKey k, ExploreScratch& scratch) {
                return EventOutcome{gasket_hit_at(SampleStates(k), site, dom, g, scratch), false};
            };
        }
        case EventSpec::Kind::multipoint: {
            const MultipointEvent ev(spec.bulk, spec.boundary, g, spec.box_factor);
            return [ev](SampleKey k, ExploreScratch& scratch) {
                const ConnectOutcome out = ev.run(SampleStates(k), scratch);
                return EventOutcome{out.connected, out.truncated};
            };
        }
    }
    throw std::invalid_argument("unknown event kind");
}

// ---------------------------------------------------------------------------
// Probability and ratio estimation
// ---------------------------------------------------------------------------

struct McDiagnostics {
    std::uint64_t truncated = 0;
};

/// Monte Carlo probability of one event over samples (seed, 0..n-1).
/// The result is bit-identical for any worker count.
inline Estimate mc_probability(const EventSpec& spec, std::uint64_t n, std::uint64_t seed,
                               unsigned workers = 0, McDiagnostics* diag = nullptr) {
    if (n == 0) throw std::invalid_argument("mc_probability: need at least one sample");
    struct Acc {
        std::uint64_t succ = 0;
        std::uint64_t trunc = 0;
        void merge(const Acc& o) {
            succ += o.succ;
            trunc += o.trunc;
        }
    };
    const auto eval = prepare(spec);
    const Acc acc = parallel_samples<Acc>(n, seed, workers,
                                          [&eval](SampleKey k, ExploreScratch& s, Acc& a) {
                                              const EventOutcome out = eval(k, s);
                                              a.succ += out.value ? 1 : 0;
                                              a.trunc += out.truncated ? 1 : 0;
                                          });
    if (diag) diag->truncated = acc.trunc;
    return Estimate{acc.succ, n};
}

struct CoupledCounts {
    std::uint64_t n = 0;
    std::uint64_t c_num = 0;
    std::uint64_t c_den = 0;
    std::uint64_t c_both = 0;
    std::uint64_t truncated = 0;
};

/// Evaluates two events on identical configurations and returns the joint
/// outcome counts.
inline CoupledCounts coupled_counts(const EventSpec& numerator, const EventSpec& denominator,
                                    std::uint64_t n, std::uint64_t seed, unsigned workers = 0) {
    struct Acc {
        std::uint64_t cn = 0, cd = 0, cb = 0, trunc = 0;
        void merge(const Acc& o) {
            cn += o.cn;
            cd += o.cd;
            cb += o.cb;
            trunc += o.trunc;
        }
    };
    const auto eval_n = prepare(numerator);
    const auto eval_d = prepare(denominator);
    const Acc acc = parallel_samples<Acc>(n, seed, workers,
                                          [&](SampleKey k, ExploreScratch& s, Acc& a) {
                                              const EventOutcome on = eval_n(k, s);
                                              const EventOutcome od = eval_d(k, s);
                                              a.cn += on.value ? 1 : 0;
                                              a.cd += od.value ? 1 : 0;
                                              a.cb += (on.value && od.value) ? 1 : 0;
                                              a.trunc += (on.truncated || od.truncated) ? 1 : 0;
                                          });
    return CoupledCounts{n, acc.cn, acc.cd, acc.cb, acc.trunc};
}

/// Shared-sample ratio P(numerator)/P(denominator); the standard error
/// accounts for the coupling through the joint counts.
inline RatioEstimate coupled_ratio(const EventSpec& numerator, const EventSpec& denominator,
                                   std::uint64_t n, std::uint64_t seed, unsigned workers = 0) {
    const CoupledCounts c = coupled_counts(numerator, denominator, n, seed, workers);
    return RatioEstimate::from_joint(c.n, c.c_num, c.c_den, c.c_both);
}

/// Bootstrap cross-check of a shared-sample ratio's standard error:
/// resamples the 2x2 joint table (Gaussian multinomial approximation,
/// adequate at estimation-scale counts) and returns the deviation of the
/// resampled ratios.
inline double bootstrap_ratio_se(const CoupledCounts& c, int resamples = 1000,
                                 std::uint64_t seed = 7) {
    const double n = static_cast<double>(c.n);
    const double p11 = static_cast<double>(c.c_both) / n;
    const double p10 = static_cast<double>(c.c_num - c.c_both) / n;
    const double p01 = static_cast<double>(c.c_den - c.c_both) / n;
    std::uint64_t ctr = seed;
    auto normal = [&ctr]() {
        const double u1 =
            (static_cast<double>(mix64(++ctr) >> 11) + 0.5) * 0x1.0p-53;  // (0,1)
        const double u2 = (static_cast<double>(mix64(++ctr) >> 11) + 0.5) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    };
    auto cell = [&](double p) {
        const double v = p * n + std::sqrt(std::max(p * (1.0 - p) * n, 0.0)) * normal();
        return std::max(0.0, v);
    };
    double sum = 0.0, sum2 = 0.0;
    int kept = 0;
    for (int b = 0; b < resamples; ++b) {
        const double b11 = cell(p11);
        const double b10 = cell(p10);
        const double b01 = cell(p01);
        const double den = b11 + b01;
        if (den <= 0.0) continue;
        const double r = (b11 + b10) / den;
        sum += r;
        sum2 += r * r;
        ++kept;
    }
    if (kept < 2) return 0.0;
    const double mean = sum / kept;
    return std::sqrt(std::max(0.0, sum2 / kept - mean * mean) * kept / (kept - 1));
}

// ---------------------------------------------------------------------------
// Arm sweeps (shared samples across radii)
// ---------------------------------------------------------------------------

struct ArmSweepResult {
    std::vector<double> eps;
    std::vector<Estimate> estimates;       // event: cluster reach >= eps_i
    Estimate normalization;                // reach >= 1 (pi_a resp. pibar_a)
    std::vector<RatioEstimate> ratios;     // p(eps_i) / p(1), coupled
    ExponentFit fit;                       // log p vs log eps
    std::uint64_t n = 0;
};

/// Estimates every arm event of the radius list, plus the radius-1
/// normalization, from one exploration per sample: the maximal cluster
/// reach decides all radii at once, which also couples the numerator and
/// denominator of every renormalized ratio.
inline ArmSweepResult arm_sweep(HalfPlane hp, std::complex<double> z, std::span<const double> eps,
                                const LatticeGeometry& g, std::uint64_t n, std::uint64_t seed,
                                unsigned workers = 0) {
    if (eps.empty()) throw std::invalid_argument("arm_sweep: need at least one radius");
    for (double e : eps)
        if (!(e > 0.0)) throw std::invalid_argument("arm_sweep: radii must be positive");
    const SiteCoord center = hp == HalfPlane::upper ? SiteCoord{0, 0} : nearest_site(z, g);
    std::vector<double> eps2(eps.size());
    for (std::size_t i = 0; i < eps.size(); ++i) eps2[i] = g.units2(eps[i]);
    const double one2 = g.units2(1.0);
    double cap2 = one2;
    for (double e2 : eps2) cap2 = std::max(cap2, e2);

    struct Acc {
        std::vector<std::uint64_t> counts;
        std::uint64_t c_one = 0;
        void merge(const Acc& o) {
            if (counts.size() < o.counts.size()) counts.resize(o.counts.size(), 0);
            for (std::size_t i = 0; i < o.counts.size(); ++i) counts[i] += o.counts[i];
            c_one += o.c_one;
        }
    };
    Acc acc = parallel_samples<Acc>(n, seed, workers,
                                    [&](SampleKey k, ExploreScratch& s, Acc& a) {
                                        if (a.counts.empty()) a.counts.resize(eps2.size(), 0);
                                        const double reach2 =
                                            arm_reach2(SampleStates(k), center, cap2, hp, s);
                                        for (std::size_t i = 0; i < eps2.size(); ++i)
                                            if (reach2 >= eps2[i]) ++a.counts[i];
                                        if (reach2 >= one2) ++a.c_one;
                                    });
    if (acc.counts.empty()) acc.counts.resize(eps2.size(), 0);

    ArmSweepResult result;
    result.eps.assign(eps.begin(), eps.end());
    result.n = n;
    result.normalization = Estimate{acc.c_one, n};
    std::vector<FitPoint> pts;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        result.estimates.push_back(Estimate{acc.counts[i], n});
        // Reach events are nested, so the joint count of (eps_i, 1) is the
        // count of the larger radius.
        const std::uint64_t c_both = eps2[i] >= one2 ? acc.counts[i] : acc.c_one;
        result.ratios.push_back(RatioEstimate::from_joint(n, acc.counts[i], acc.c_one, c_both));
        pts.push_back(FitPoint{eps[i], result.estimates.back()});
    }
    if (eps.size() >= 3) result.fit = fit_power_law(pts);
    return result;
}

// ---------------------------------------------------------------------------
// Shared-sample profiles (anchored and gasket densities)
// ---------------------------------------------------------------------------

/// Per-point estimates plus the full pairwise joint-success counts, all
/// from the same configurations, so any pairwise ratio carries the coupled
/// standard error.
struct ProfileResult {
    std::vector<std::complex<double>> points;
    std::vector<SiteCoord> sites;
    std::vector<std::uint64_t> counts;
    std::vector<std::uint64_t> joint;  // row-major k x k, joint[i*k+j]
    std::uint64_t n = 0;
    std::uint64_t truncated = 0;

    Estimate estimate(std::size_t i) const { return Estimate{counts[i], n}; }

    RatioEstimate ratio(std::size_t num, std::size_t den) const {
        return RatioEstimate::from_joint(n, counts[num], counts[den],
                                         joint[num * points.size() + den]);
    }

    CoupledCounts pair_counts(std::size_t num, std::size_t den) const {
        return CoupledCounts{n, counts[num], counts[den], joint[num * points.size() + den],
                             truncated};
    }
};

namespace estimator_detail {

struct MaskAcc {
    std::vector<std::uint64_t> counts;
    std::vector<std::uint64_t> joint;
    std::uint64_t truncated = 0;
    std::size_t k = 0;

    void init(std::size_t points) {
        k = points;
        counts.assign(k, 0);
        joint.assign(k * k, 0);
    }
    void add(std::uint32_t mask, bool trunc) {
        truncated += trunc ? 1 : 0;
        for (std::size_t i = 0; i < k; ++i) {
            if (!((mask >> i) & 1u)) continue;
            ++counts[i];
            for (std::size_t j = 0; j < k; ++j)
                if ((mask >> j) & 1u) ++joint[i * k + j];
        }
    }
    void merge(const MaskAcc& o) {
        truncated += o.truncated;
        if (o.counts.empty()) return;
        if (counts.empty()) {
            counts = o.counts;
            joint = o.joint;
            k = o.k;
            return;
        }
        for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
        for (std::size_t i = 0; i < joint.size(); ++i) joint[i] += o.joint[i];
    }
};

}  // namespace estimator_detail

/// Anchored-cluster density profile: P(z^a <-H-> 0) for every point on
/// shared samples; one exploration from the origin serves all points.
inline ProfileResult anchored_profile(std::span<const std::complex<double>> points,
                                      const LatticeGeometry& g, std::uint64_t n, std::uint64_t seed,
                                      double box_factor = 4.0, unsigned workers = 0) {
    if (points.empty() || points.size() > 32)
        throw std::invalid_argument("anchored_profile: need 1..32 points");
    ProfileResult result;
    result.points.assign(points.begin(), points.end());
    double max_norm = 0.0;
    for (const auto& z : points) {
        if (!(z.imag() > 0.0))
            throw std::invalid_argument("anchored_profile: points need Im z > 0");
        result.sites.push_back(nearest_site(z, g, SiteRestrict::upper_half_plane));
        max_norm = std::max(max_norm, std::abs(z));
    }
    const double box2 = g.units2(box_factor * max_norm);
    const std::vector<SiteCoord> targets = result.sites;

    using estimator_detail::MaskAcc;
    MaskAcc acc = parallel_samples<MaskAcc>(
        n, seed, workers, [&](SampleKey k, ExploreScratch& scratch, MaskAcc& a) {
            if (a.counts.empty()) a.init(targets.size());
            Region region;
            region.half_plane = HalfPlane::upper;
            Region box;
            box.disk = DiskUnits{SiteCoord{0, 0}, box2};
            const ExplorationResult r = explore(SampleStates(k), SiteCoord{0, 0}, region, targets,
                                                box, scratch, ExploreOptions{});
            a.add(r.targets_hit, r.truncated && !r.all_hit(targets.size()));
        });
    if (acc.counts.empty()) acc.init(targets.size());
    result.counts = std::move(acc.counts);
    result.joint = std::move(acc.joint);
    result.truncated = acc.truncated;
    result.n = n;
    return result;
}

/// Gasket density profile over a bounded domain: one multi-source sweep
/// per sample marks every boundary-connected open site, and all points
/// read the same configuration.
inline ProfileResult gasket_profile(const Domain& dom, std::span<const std::complex<double>> points,
                                    const LatticeGeometry& g, std::uint64_t n, std::uint64_t seed,
                                    unsigned workers = 0) {
    if (points.empty() || points.size() > 32)
        throw std::invalid_argument("gasket_profile: need 1..32 points");
    ProfileResult result;
    result.points.assign(points.begin(), points.end());
    for (const auto& z : points) {
        if (!dom.contains(z)) throw std::domain_error("gasket_profile: point outside the domain");
        result.sites.push_back(nearest_site(z, g));
    }
    const std::vector<SiteCoord> sites = result.sites;

    struct Ctx {
        GasketSweep sweep;
        ExploreScratch scratch;
    };
    using estimator_detail::MaskAcc;
    MaskAcc acc = parallel_samples<MaskAcc>(
        n, seed, workers, [&] { return Ctx{GasketSweep(dom, g), ExploreScratch{}}; },
        [&](SampleKey k, Ctx& ctx, MaskAcc& a) {
            if (a.counts.empty()) a.init(sites.size());
            const SampleStates open(k);
            ctx.sweep.run(open, ctx.scratch);
            std::uint32_t mask = 0;
            for (std::size_t i = 0; i < sites.size(); ++i)
                if (ctx.sweep.point_hit(open, sites[i])) mask |= 1u << i;
            a.add(mask, false);
        });
    if (acc.counts.empty()) acc.init(sites.size());
    result.counts = std::move(acc.counts);
    result.joint = std::move(acc.joint);
    result.truncated = 0;
    result.n = n;
    return result;
}

// ---------------------------------------------------------------------------
// Method-of-images check
// ---------------------------------------------------------------------------

/// Standardized gap between a joint probability and the product of its
/// margins, from shared-sample counts (plug-in delta method).
inline double product_gap_z(std::uint64_t n, std::uint64_t c_a, std::uint64_t c_b,
                            std::uint64_t c_ab) {
    const double nn = static_cast<double>(n);
    const double pa = static_cast<double>(c_a) / nn;
    const double pb = static_cast<double>(c_b) / nn;
    const double pj = static_cast<double>(c_ab) / nn;
    const double d = pj - pa * pb;
    const double vj = pj * (1.0 - pj);
    const double va = pa * (1.0 - pa);
    const double vb = pb * (1.0 - pb);
    const double cov_ja = pj * (1.0 - pa);
    const double cov_jb = pj * (1.0 - pb);
    const double cov_ab = pj - pa * pb;
    double var = vj + pb * pb * va + pa * pa * vb - 2.0 * pb * cov_ja - 2.0 * pa * cov_jb +
                 2.0 * pa * pb * cov_ab;
    var = std::max(var, 0.0) / nn;
    if (var <= 0.0) return d == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return d / std::sqrt(var);
}

struct ImagesReport {
    Estimate upper;
    Estimate lower;
    Estimate both;
    double z_product = 0.0;   // standardized P(both) - P(upper)P(lower)
    double z_symmetry = 0.0;  // standardized P(upper) - P(lower)
    std::uint64_t n = 0;
};

/// Runs the doubled event on a single shared key per sample: the upper and
/// mirrored lower events read disjoint site sets, so P(both) must equal
/// the product of the margins, and reflection symmetry makes the margins
/// equal in distribution.
inline ImagesReport images_check(std::complex<double> z, const LatticeGeometry& g, std::uint64_t n,
                                 std::uint64_t seed, double box_factor = 4.0, unsigned workers = 0) {
    const AnchoredEvent ev(z, g, box_factor);
    struct Acc {
        std::uint64_t cu = 0, cl = 0, cb = 0;
        void merge(const Acc& o) {
            cu += o.cu;
            cl += o.cl;
            cb += o.cb;
        }
    };
    const Acc acc = parallel_samples<Acc>(
        n, seed, workers, [&](SampleKey k, ExploreScratch& scratch, Acc& a) {
            const bool up = ev.run(SampleStates(k), scratch).connected;
            const bool low = ev.run(ReflectedStates(k), scratch).connected;
            a.cu += up ? 1 : 0;
            a.cl += low ? 1 : 0;
            a.cb += (up && low) ? 1 : 0;
        });
    ImagesReport rep;
    rep.upper = Estimate{acc.cu, n};
    rep.lower = Estimate{acc.cl, n};
    rep.both = Estimate{acc.cb, n};
    rep.n = n;
    rep.z_product = product_gap_z(n, acc.cu, acc.cl, acc.cb);
    const double nn = static_cast<double>(n);
    const double pu = rep.upper.p_hat();
    const double pl = rep.lower.p_hat();
    const double pb = rep.both.p_hat();
    const double var_diff = std::max(0.0, pu + pl - 2.0 * pb - (pu - pl) * (pu - pl)) / nn;
    rep.z_symmetry = var_diff > 0.0 ? (pu - pl) / std::sqrt(var_diff) : (pu == pl ? 0.0 : 1e300);
    return rep;
}

// ---------------------------------------------------------------------------
// Multipoint scale covariance
// ---------------------------------------------------------------------------

struct ScaleCovarianceReport {
    Estimate original;
    Estimate dilated;
    RatioEstimate ratio;   // P(dilated points) / P(original points), shared samples
    CoupledCounts counts;  // joint outcome table behind the ratio
    double target = 0.0;   // s^(-5k/48 - n/3)
    double z = 0.0;        // (ratio - target) / se
    std::uint64_t truncated = 0;
    std::uint64_t n = 0;
};

/// Estimates the multipoint connection probability at the original and at
/// the dilated point set on shared samples and compares the ratio to the
/// scale-covariance prediction s^(-5k/48 - n/3).
inline ScaleCovarianceReport multipoint_covariance(std::span<const std::complex<double>> bulk,
                                                   std::span<const double> boundary, double s,
                                                   const LatticeGeometry& g, std::uint64_t n,
                                                   std::uint64_t seed, double box_factor = 4.0,
                                                   unsigned workers = 0) {
    if (!(s > 0.0)) throw std::invalid_argument("multipoint_covariance: scale must be positive");
    const MultipointEvent original(bulk, boundary, g, box_factor);
    std::vector<std::complex<double>> bulk_s(bulk.begin(), bulk.end());
    std::vector<double> boundary_s(boundary.begin(), boundary.end());
    for (auto& zz : bulk_s) zz *= s;
    for (auto& x : boundary_s) x *= s;
    const MultipointEvent dilated(bulk_s, boundary_s, g, box_factor);

    struct Acc {
        std::uint64_t co = 0, cd = 0, cb = 0, trunc = 0;
        void merge(const Acc& o) {
            co += o.co;
            cd += o.cd;
            cb += o.cb;
            trunc += o.trunc;
        }
    };
    const Acc acc = parallel_samples<Acc>(
        n, seed, workers, [&](SampleKey k, ExploreScratch& scratch, Acc& a) {
            const SampleStates open(k);
            const ConnectOutcome oo = original.run(open, scratch);
            const ConnectOutcome od = dilated.run(open, scratch);
            a.co += oo.connected ? 1 : 0;
            a.cd += od.connected ? 1 : 0;
            a.cb += (oo.connected && od.connected) ? 1 : 0;
            a.trunc += (oo.truncated || od.truncated) ? 1 : 0;
        });

    ScaleCovarianceReport rep;
    rep.original = Estimate{acc.co, n};
    rep.dilated = Estimate{acc.cd, n};
    rep.ratio = RatioEstimate::from_joint(n, acc.cd, acc.co, acc.cb);
    rep.counts = CoupledCounts{n, acc.cd, acc.co, acc.cb, acc.trunc};
    const double k_pts = static_cast<double>(bulk.size());
    const double n_pts = static_cast<double>(boundary.size());
    rep.target = std::pow(s, -(5.0 * k_pts / 48.0 + n_pts / 3.0));
    rep.z = z_score(rep.ratio.ratio, rep.target, rep.ratio.se);
    rep.truncated = acc.trunc;
    rep.n = n;
    return rep;
}

// ---------------------------------------------------------------------------
// Per-sample invariant audit
// ---------------------------------------------------------------------------

struct AuditConfig {
    double mesh = 1.0 / 64.0;
    std::complex<double> z{0.0, 0.5};          // anchored point
    double eps_small = 1.0 / 16.0;             // both radii < Im(z)/2
    double eps_big = 1.0 / 8.0;
    Domain domain = Domain::disk({0.0, 0.0}, 0.75);
    std::complex<double> gasket_z{0.25, 0.25};  // dist to boundary > eps_small
    double box_factor = 4.0;
    std::uint64_t n = 10000;
    std::uint64_t seed = 2026;
    unsigned workers = 0;
};

struct AuditReport {
    std::uint64_t samples = 0;
    std::uint64_t violations = 0;
    std::vector<std::string> details;  // first few failing checks
};

/// Audits, per drawn sample, every implication the detectors must satisfy
/// pathwise: radius monotonicity of both arm events, anchored implying
/// both arm events, gasket membership implying the bulk arm event, box
/// monotonicity of the anchored event, and the doubled event being the
/// conjunction of its halves. Any violation is an implementation bug, so
/// the expected count is exactly zero.
inline AuditReport audit_invariants(const AuditConfig& cfg = {}) {
    const LatticeGeometry g{cfg.mesh};
    const SiteCoord z_site = nearest_site(cfg.z, g, SiteRestrict::upper_half_plane);
    const SiteCoord gz_site = nearest_site(cfg.gasket_z, g);
    const double eps_small2 = g.units2(cfg.eps_small);
    const double eps_big2 = g.units2(cfg.eps_big);
    const AnchoredEvent anchored_base(cfg.z, g, cfg.box_factor);
    const AnchoredEvent anchored_wide(cfg.z, g, 2.0 * cfg.box_factor);
    const Domain dom = cfg.domain;

    // Geometric margins that make the implications exact pathwise.
    if (!(cfg.eps_big < cfg.z.imag() / 2.0))
        throw std::invalid_argument("audit: radii must stay below Im(z)/2");
    if (static_cast<double>(norm2_units(z_site)) < eps_big2)
        throw std::invalid_argument("audit: |z^a| must exceed the audit radii");
    const double gz_boundary_dist =
        dom.disk_radius() - std::abs(cfg.gasket_z - dom.disk_center());
    if (!(gz_boundary_dist > cfg.eps_small + 2.0 * cfg.mesh))
        throw std::invalid_argument("audit: gasket point too close to the boundary");

    struct Acc {
        std::uint64_t violations = 0;
        std::vector<std::string> details;
        void fail(const std::string& what, std::uint64_t sample) {
            ++violations;
            if (details.size() < 8)
                details.push_back(what + " at sample " + std::to_string(sample));
        }
        void merge(const Acc& o) {
            violations += o.violations;
            for (const auto& d : o.details)
                if (details.size() < 8) details.push_back(d);
        }
    };

    Acc acc = parallel_samples<Acc>(
        cfg.n, cfg.seed, cfg.workers, [&](SampleKey k, ExploreScratch& s, Acc& a) {
            const SampleStates open(k);

            const bool arm_small = arm_event(open, z_site, eps_small2, HalfPlane::none, s);
            const bool arm_big = arm_event(open, z_site, eps_big2, HalfPlane::none, s);
            if (arm_big && !arm_small) a.fail("one-arm eps-monotonicity", k.sample);

            const bool barm_small = arm_event(open, {0, 0}, eps_small2, HalfPlane::upper, s);
            const bool barm_big = arm_event(open, {0, 0}, eps_big2, HalfPlane::upper, s);
            if (barm_big && !barm_small) a.fail("boundary-arm eps-monotonicity", k.sample);

            const double reach_bulk = arm_reach2(open, z_site, eps_big2, HalfPlane::none, s);
            if ((reach_bulk >= eps_small2) != arm_small)
                a.fail("one-arm reach consistency (small)", k.sample);
            if ((reach_bulk >= eps_big2) != arm_big)
                a.fail("one-arm reach consistency (big)", k.sample);

            const bool anch = anchored_base.run(open, s).connected;
            if (anch && !arm_small) a.fail("anchored => one-arm", k.sample);
            if (anch && !barm_small) a.fail("anchored => boundary-arm", k.sample);

            const bool anch_wide = anchored_wide.run(open, s).connected;
            if (anch && !anch_wide) a.fail("anchored box-monotonicity", k.sample);

            const bool gz_arm = arm_event(open, gz_site, eps_small2, HalfPlane::none, s);
            const bool gasket = gasket_hit_at(open, gz_site, dom, g, s);
            if (gasket && !gz_arm) a.fail("gasket => one-arm", k.sample);

            const ImagesOutcome img = images_event(k, k, cfg.z, g, cfg.box_factor, s);
            if (img.both != (img.upper && img.lower)) a.fail("images both = upper AND lower", k.sample);
            if (img.both && !img.upper) a.fail("images both => upper", k.sample);
        });

    AuditReport rep;
    rep.samples = cfg.n;
    rep.violations = acc.violations;
    rep.details = std::move(acc.details);
    return rep;
}

// ---------------------------------------------------------------------------
// Statistical self-checks (truncation stability, positive association)
// ---------------------------------------------------------------------------

struct BoxStabilityReport {
    Estimate base;
    Estimate doubled;
    double change = 0.0;     // p(doubled box) - p(base box), per-sample nested so >= 0
    double sigma = 0.0;      // one standard error of the base estimate
    bool stable = false;     // change < sigma
};

/// Doubling the safety box may only add successes (the event is monotone
/// in the box); the estimate is accepted as stable when the change stays
/// below one standard error.
inline BoxStabilityReport box_stability(std::complex<double> z, const LatticeGeometry& g,
                                        std::uint64_t n, std::uint64_t seed,
                                        double box_factor = 4.0, unsigned workers = 0) {
    const AnchoredEvent base(z, g, box_factor);
    const AnchoredEvent wide(z, g, 2.0 * box_factor);
    struct Acc {
        std::uint64_t cb = 0, cw = 0;
        void merge(const Acc& o) {
            cb += o.cb;
            cw += o.cw;
        }
    };
    const Acc acc = parallel_samples<Acc>(
        n, seed, workers, [&](SampleKey k, ExploreScratch& s, Acc& a) {
            const SampleStates open(k);
            a.cb += base.run(open, s).connected ? 1 : 0;
            a.cw += wide.run(open, s).connected ? 1 : 0;
        });
    BoxStabilityReport rep;
    rep.base = Estimate{acc.cb, n};
    rep.doubled = Estimate{acc.cw, n};
    rep.change = rep.doubled.p_hat() - rep.base.p_hat();
    rep.sigma = rep.base.se();
    rep.stable = rep.change < rep.sigma;
    return rep;
}

struct HarrisReport {
    Estimate anchored_est;
    Estimate arm_est;
    Estimate joint_est;
    double z = 0.0;  // standardized P(joint) - product; must not be significantly negative
};

/// Increasing events are positively associated, so the joint probability
/// of an anchored event and a one-arm event at a second point must not
/// fall below the product of the margins (one-sided check).
inline HarrisReport harris_check(std::complex<double> z_anchor, std::complex<double> z_arm,
                                 double eps, const LatticeGeometry& g, std::uint64_t n,
                                 std::uint64_t seed, double box_factor = 4.0,
                                 unsigned workers = 0) {
    const AnchoredEvent anch(z_anchor, g, box_factor);
    const SiteCoord arm_site = nearest_site(z_arm, g);
    const double eps2 = g.units2(eps);
    struct Acc {
        std::uint64_t ca = 0, cb = 0, cj = 0;
        void merge(const Acc& o) {
            ca += o.ca;
            cb += o.cb;
            cj += o.cj;
        }
    };
    const Acc acc = parallel_samples<Acc>(
        n, seed, workers, [&](SampleKey k, ExploreScratch& s, Acc& a) {
            const SampleStates open(k);
            const bool ea = anch.run(open, s).connected;
            const bool eb = arm_event(open, arm_site, eps2, HalfPlane::none, s);
            a.ca += ea ? 1 : 0;
            a.cb += eb ? 1 : 0;
            a.cj += (ea && eb) ? 1 : 0;
        });
    HarrisReport rep;
    rep.anchored_est = Estimate{acc.ca, n};
    rep.arm_est = Estimate{acc.cb, n};
    rep.joint_est = Estimate{acc.cj, n};
    rep.z = product_gap_z(n, acc.ca, acc.cb, acc.cj);
    return rep;
}

/// Monte Carlo frequency of a patch event through the production
/// detectors, for comparison against the enumeration oracle.
inline Estimate oracle_mc(const Patch& patch, std::uint64_t n, std::uint64_t seed,
                          unsigned workers = 0) {
    struct Acc {
        std::uint64_t succ = 0;
        void merge(const Acc& o) { succ += o.succ; }
    };
    const Acc acc = parallel_samples<Acc>(n, seed, workers,
                                          [&](SampleKey k, ExploreScratch& s, Acc& a) {
                                              a.succ += oracle_mc_event(patch, k, s) ? 1 : 0;
                                          });
    return Estimate{acc.succ, n};
}

}  // namespace perclab
