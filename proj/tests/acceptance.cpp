// Acceptance suite: the quantitative exit gate of the project. Each
// criterion pins its lattice mesh, sample count and tolerance in code and
// prints one PASS/FAIL line; the process exits nonzero if any fail.
//
// Criteria (tolerances inline):
//   C1  bulk one-arm exponent          -5/48 +- 0.02
//   C2  boundary one-arm exponent      -1/3  +- 0.03
//   C3  anchored angular ratio          2^{11/48} within max(3 sigma, 5%)
//   C4  anchored radial ratio           2^{7/16}  within max(3 sigma, 5%)
//   C5  gasket density ratio            (1/0.19)^{5/48} within max(3 sigma, 5%)
//   C6  method of images               |z| < 3 for product and symmetry
//   C7  multipoint scale covariance     2^{-37/48} within max(3 sigma, 10%)
//   C8  oracle equivalence             |z| < 3 on every builtin patch
//   C9  per-sample invariant audit      zero violations
//   C10 worker-count determinism        identical CSV bytes for 1/4/16
//   C11 mesh stability                  renormalized gasket density drifts < 10%

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <set>
#include <string>
#include <vector>

#include "perclab/csv.hpp"
#include "perclab/estimators.hpp"
#include "perclab/oracle.hpp"
#include "perclab/stats.hpp"

using namespace perclab;

namespace {

int g_failures = 0;
std::set<int> g_selected;

bool selected(int criterion) { return g_selected.empty() || g_selected.count(criterion) > 0; }

void report(int criterion, bool pass, const std::string& what, double seconds) {
    std::printf("[%s] C%-2d %s (%.1fs)\n", pass ? "PASS" : "FAIL", criterion, what.c_str(),
                seconds);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

bool ratio_within(double ratio, double target, double se, double z_max, double rel_tol) {
    return std::abs(ratio - target) <= std::max(z_max * se, rel_tol * target);
}

// --- C1 / C2 ---------------------------------------------------------------

void arm_criterion(int id, HalfPlane hp, double target, double tol) {
    Timer timer;
    const LatticeGeometry g{1.0 / 512.0};
    const double eps[] = {1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0, 1.0 / 2.0};
    const std::uint64_t n = 200000;
    const ArmSweepResult sweep = arm_sweep(hp, {0.0, 0.0}, eps, g, n, /*seed=*/42);
    const bool pass = std::abs(sweep.fit.slope - target) <= tol;
    report(id, pass,
           fmt("%s one-arm slope %.5f +- %.5f vs %.5f +- %.3f (mesh 1/512, n=%llu)",
               hp == HalfPlane::upper ? "boundary" : "bulk", sweep.fit.slope, sweep.fit.slope_se,
               target, tol, static_cast<unsigned long long>(n)),
           timer.seconds());
}

// --- C3 / C4 ---------------------------------------------------------------

void anchored_criteria() {
    Timer timer;
    const LatticeGeometry g{1.0 / 128.0};
    const std::uint64_t n = 1000000;
    // theta = pi/2 and pi/6 at r = 1/2, plus r = 1/4 on the imaginary axis.
    const double pi = 3.14159265358979323846;
    const std::complex<double> z_top{0.0, 0.5};
    const std::complex<double> z_slant{0.5 * std::cos(pi / 6.0), 0.25};
    const std::complex<double> z_near{0.0, 0.25};
    const std::complex<double> pts[] = {z_top, z_slant, z_near};
    const ProfileResult prof = anchored_profile(pts, g, n, /*seed=*/43, /*box_factor=*/4.0);

    if (selected(3)) {
        const RatioEstimate r = prof.ratio(0, 1);
        const double target = std::pow(2.0, 11.0 / 48.0);
        const bool pass = ratio_within(r.ratio, target, r.se, 3.0, 0.05);
        report(3, pass,
               fmt("anchored angular ratio rho(pi/2)/rho(pi/6) = %.4f +- %.4f vs %.4f "
                   "(mesh 1/128, r=1/2, n=%llu)",
                   r.ratio, r.se, target, static_cast<unsigned long long>(n)),
               timer.seconds());
    }
    if (selected(4)) {
        const RatioEstimate r = prof.ratio(2, 0);
        const double target = std::pow(2.0, 7.0 / 16.0);
        const bool pass = ratio_within(r.ratio, target, r.se, 3.0, 0.05);
        report(4, pass,
               fmt("anchored radial ratio rho(0.25i)/rho(0.5i) = %.4f +- %.4f vs %.4f", r.ratio,
                   r.se, target),
               0.0);
    }
}

// --- C5 --------------------------------------------------------------------

void gasket_criterion() {
    Timer timer;
    const LatticeGeometry g{1.0 / 128.0};
    const Domain disk = Domain::disk({0.0, 0.0}, 1.0);
    const std::uint64_t n = 50000;
    const std::complex<double> pts[] = {{0.0, 0.0}, {0.9, 0.0}};
    const ProfileResult prof = gasket_profile(disk, pts, g, n, /*seed=*/44);
    // Theory: g(z) ~ rad(z)^{-5/48}, rad(0)=1, rad(0.9)=0.19, so the
    // density ratio between the two points is (1/0.19)^{5/48} with the
    // near-boundary point on top.
    const RatioEstimate r = prof.ratio(1, 0);
    const double target = std::pow(1.0 / 0.19, 5.0 / 48.0);
    const bool pass = ratio_within(r.ratio, target, r.se, 3.0, 0.05);
    report(5, pass,
           fmt("gasket density ratio g(0.9)/g(0) = %.4f +- %.4f vs %.4f (unit disk, mesh "
               "1/128, n=%llu)",
               r.ratio, r.se, target, static_cast<unsigned long long>(n)),
           timer.seconds());
}

// --- C6 --------------------------------------------------------------------

void images_criterion() {
    Timer timer;
    const LatticeGeometry g{1.0 / 64.0};
    const std::uint64_t n = 1000000;
    const ImagesReport rep = images_check({0.0, 1.0}, g, n, /*seed=*/45);
    const bool pass = std::abs(rep.z_product) < 3.0 && std::abs(rep.z_symmetry) < 3.0;
    report(6, pass,
           fmt("images at z=i: z_product=%+.2f z_symmetry=%+.2f (mesh 1/64, n=%llu)",
               rep.z_product, rep.z_symmetry, static_cast<unsigned long long>(n)),
           timer.seconds());
}

// --- C7 --------------------------------------------------------------------

void multipoint_criterion() {
    Timer timer;
    const LatticeGeometry g{1.0 / 64.0};
    const std::uint64_t n = 400000;
    const std::complex<double> bulk[] = {{0.0, 0.25}};
    const double boundary[] = {0.0, 0.25};
    const ScaleCovarianceReport rep =
        multipoint_covariance(bulk, boundary, /*s=*/2.0, g, n, /*seed=*/46);
    const bool pass = ratio_within(rep.ratio.ratio, rep.target, rep.ratio.se, 3.0, 0.10);
    report(7, pass,
           fmt("multipoint (k=1,n=2,s=2) ratio %.4f +- %.4f vs %.4f (mesh 1/64, n=%llu)",
               rep.ratio.ratio, rep.ratio.se, rep.target, static_cast<unsigned long long>(n)),
           timer.seconds());
}

// --- C8 --------------------------------------------------------------------

void oracle_criterion() {
    Timer timer;
    const std::uint64_t n = 1000000;
    bool pass = true;
    std::string detail;
    std::uint64_t seed = 47;
    for (const Patch& p : builtin_patches()) {
        const double exact = oracle_exact(p);
        const Estimate mc = oracle_mc(p, n, seed++);
        const double sigma = std::sqrt(exact * (1.0 - exact) / static_cast<double>(n));
        const double z = (mc.p_hat() - exact) / sigma;
        if (std::abs(z) >= 3.0) {
            pass = false;
            detail += fmt(" %s(z=%+.2f)", p.name.c_str(), z);
        }
    }
    report(8, pass,
           fmt("oracle equivalence on %zu patches at n=%llu%s", builtin_patches().size(),
               static_cast<unsigned long long>(n),
               pass ? "" : (" failing:" + detail).c_str()),
           timer.seconds());
}

// --- C9 --------------------------------------------------------------------

void audit_criterion() {
    Timer timer;
    AuditConfig cfg;
    cfg.n = 10000;
    const AuditReport rep = audit_invariants(cfg);
    const bool pass = rep.violations == 0;
    std::string detail;
    for (const auto& d : rep.details) detail += " [" + d + "]";
    report(9, pass,
           fmt("invariant audit: %llu violations over %llu samples%s",
               static_cast<unsigned long long>(rep.violations),
               static_cast<unsigned long long>(rep.samples), detail.c_str()),
           timer.seconds());
}

// --- C10 -------------------------------------------------------------------

std::string sweep_csv(unsigned workers) {
    const LatticeGeometry g{1.0 / 64.0};
    const double eps[] = {1.0 / 8.0, 1.0 / 4.0, 1.0 / 2.0};
    const ArmSweepResult sweep =
        arm_sweep(HalfPlane::none, {0.0, 0.0}, eps, g, 20000, /*seed=*/48, workers);
    CsvBuilder csv({"label", "x1", "p_hat", "stderr", "n", "successes"});
    for (std::size_t k = 0; k < 3; ++k) {
        csv.row({"eps" + std::to_string(k), fmt_double(eps[k]),
                 fmt_double(sweep.estimates[k].p_hat()), fmt_double(sweep.estimates[k].se()),
                 fmt_u64(sweep.estimates[k].n), fmt_u64(sweep.estimates[k].successes)});
    }
    csv.row({"norm", fmt_double(1.0), fmt_double(sweep.normalization.p_hat()),
             fmt_double(sweep.normalization.se()), fmt_u64(sweep.normalization.n),
             fmt_u64(sweep.normalization.successes)});
    return csv.str();
}

void determinism_criterion() {
    Timer timer;
    const std::string w1 = sweep_csv(1);
    const std::string w4 = sweep_csv(4);
    const std::string w16 = sweep_csv(16);
    const bool pass = (w1 == w4) && (w4 == w16);
    report(10, pass, "identical CSV bytes for worker counts {1, 4, 16}", timer.seconds());
}

// --- C11 -------------------------------------------------------------------

void mesh_stability_criterion() {
    Timer timer;
    const Domain disk = Domain::disk({0.0, 0.0}, 1.0);
    const std::complex<double> center[] = {{0.0, 0.0}};
    double renorm[2];
    int idx = 0;
    for (const double mesh : {1.0 / 128.0, 1.0 / 256.0}) {
        const LatticeGeometry g{mesh};
        const ProfileResult gasket = gasket_profile(disk, center, g, 50000, /*seed=*/49);
        const Estimate pi_hat =
            mc_probability(EventSpec::one_arm_at({0.0, 0.0}, 1.0, mesh), 100000, /*seed=*/50);
        renorm[idx++] = gasket.estimate(0).p_hat() / pi_hat.p_hat();
    }
    const double drift = std::abs(renorm[1] - renorm[0]) / renorm[0];
    const bool pass = drift < 0.10;
    report(11, pass,
           fmt("renormalized gasket density at 0: %.4f (1/128) vs %.4f (1/256), drift %.1f%%",
               renorm[0], renorm[1], 100.0 * drift),
           timer.seconds());
}

}  // namespace

int main(int argc, char** argv) {
    for (int a = 1; a < argc; ++a) g_selected.insert(std::atoi(argv[a]));

    std::printf("perclab acceptance suite\n");
    if (selected(1)) arm_criterion(1, HalfPlane::none, -5.0 / 48.0, 0.02);
    if (selected(2)) arm_criterion(2, HalfPlane::upper, -1.0 / 3.0, 0.03);
    if (selected(3) || selected(4)) anchored_criteria();
    if (selected(5)) gasket_criterion();
    if (selected(6)) images_criterion();
    if (selected(7)) multipoint_criterion();
    if (selected(8)) oracle_criterion();
    if (selected(9)) audit_criterion();
    if (selected(10)) determinism_criterion();
    if (selected(11)) mesh_stability_criterion();

    if (g_failures == 0) {
        std::printf("all criteria passed\n");
        return 0;
    }
    std::printf("%d criteria FAILED\n", g_failures);
    return 1;
}
