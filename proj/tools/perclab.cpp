// perclab: Monte Carlo experiments for critical site percolation on the
// triangular lattice. One subcommand per experiment; every run emits a CSV
// data file and a JSON manifest that reproduces it bit-exactly.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "perclab/csv.hpp"
#include "perclab/domains.hpp"
#include "perclab/estimators.hpp"
#include "perclab/fraction.hpp"
#include "perclab/manifest.hpp"
#include "perclab/oracle.hpp"
#include "perclab/stats.hpp"
#include "perclab/version.hpp"

using namespace perclab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitTolerance = 2;

constexpr const char* kCsvHeader[] = {"label", "x1",    "x2", "aux",       "p_hat",    "stderr",
                                      "ci_lo", "ci_hi", "n",  "successes", "truncated"};

CsvBuilder make_csv() {
    return CsvBuilder({kCsvHeader[0], kCsvHeader[1], kCsvHeader[2], kCsvHeader[3], kCsvHeader[4],
                       kCsvHeader[5], kCsvHeader[6], kCsvHeader[7], kCsvHeader[8], kCsvHeader[9],
                       kCsvHeader[10]});
}

void csv_estimate_row(CsvBuilder& csv, const std::string& label, double x1, double x2, double aux,
                      const Estimate& e, std::uint64_t truncated) {
    const auto ci = e.ci95();
    csv.row({label, fmt_double(x1), fmt_double(x2), fmt_double(aux), fmt_double(e.p_hat()),
             fmt_double(e.se()), fmt_double(ci.lo), fmt_double(ci.hi), fmt_u64(e.n),
             fmt_u64(e.successes), fmt_u64(truncated)});
}

struct RunResult {
    CsvBuilder csv = make_csv();
    nlohmann::json results;
    bool pass = true;
};

std::vector<double> parse_eps_list(const std::vector<std::string>& eps) {
    std::vector<double> out;
    for (const auto& e : eps) {
        const double v = Fraction::parse(e).value();
        if (!(v > 0.0)) throw std::invalid_argument("--eps values must be positive: '" + e + "'");
        out.push_back(v);
    }
    return out;
}

std::vector<std::complex<double>> parse_points(const std::vector<std::string>& pts) {
    std::vector<std::complex<double>> out;
    out.reserve(pts.size());
    for (const auto& p : pts) out.push_back(parse_point(p));
    return out;
}

bool ratio_check(double ratio, double target, double se, double z_max, double rel_tol) {
    return std::abs(ratio - target) <= std::max(z_max * se, rel_tol * target);
}

// ---------------------------------------------------------------------------
// Subcommand handlers
// ---------------------------------------------------------------------------

RunResult run_arm(const RunConfig& cfg, HalfPlane hp) {
    const LatticeGeometry g{cfg.mesh_value()};
    const std::vector<double> eps = parse_eps_list(cfg.eps);
    if (eps.size() < 3)
        throw std::invalid_argument("--eps needs at least 3 radii for a slope fit");
    const double target = Fraction::parse(cfg.slope_target).value();
    const double tol = Fraction::parse(cfg.slope_tol).value();

    const ArmSweepResult sweep =
        arm_sweep(hp, {0.0, 0.0}, eps, g, cfg.n, cfg.seed_value(), cfg.workers);

    RunResult out;
    for (std::size_t k = 0; k < eps.size(); ++k)
        csv_estimate_row(out.csv, "eps=" + cfg.eps[k], eps[k], 0.0, 0.0, sweep.estimates[k], 0);
    csv_estimate_row(out.csv, "norm", 1.0, 0.0, 0.0, sweep.normalization, 0);

    out.pass = std::abs(sweep.fit.slope - target) <= tol;
    out.results["slope"] = sweep.fit.slope;
    out.results["slope_se"] = sweep.fit.slope_se;
    out.results["r_squared"] = sweep.fit.r_squared;
    out.results["target"] = target;
    out.results["tolerance"] = tol;
    out.results["pass"] = out.pass;
    nlohmann::json ratios = nlohmann::json::array();
    for (std::size_t k = 0; k < eps.size(); ++k) {
        ratios.push_back({{"eps", cfg.eps[k]},
                          {"ratio", sweep.ratios[k].ratio},
                          {"se", sweep.ratios[k].se}});
    }
    out.results["renormalized_ratios"] = ratios;

    std::printf("%s: slope = %.5f +- %.5f (target %.5f, tol %.3f), r^2 = %.6f -> %s\n",
                hp == HalfPlane::upper ? "boundary-arm" : "one-arm", sweep.fit.slope,
                sweep.fit.slope_se, target, tol, sweep.fit.r_squared,
                out.pass ? "PASS" : "FAIL");
    for (std::size_t k = 0; k < eps.size(); ++k)
        std::printf("  eps=%-8s p_hat=%.6f  ratio=%.5f +- %.5f\n", cfg.eps[k].c_str(),
                    sweep.estimates[k].p_hat(), sweep.ratios[k].ratio, sweep.ratios[k].se);
    return out;
}

RunResult run_anchored(const RunConfig& cfg) {
    const LatticeGeometry g{cfg.mesh_value()};
    const std::vector<std::complex<double>> input = parse_points(cfg.points);
    if (input.empty()) throw std::invalid_argument("--point required");
    const double z_max = cfg.z_max_value();
    const double rel_tol = Fraction::parse(cfg.rel_tol).value();

    // Reference point i*|z| for each input point; reuse an existing entry
    // when the reference is already present.
    std::vector<std::complex<double>> pts = input;
    std::vector<std::size_t> ref_index(input.size());
    for (std::size_t k = 0; k < input.size(); ++k) {
        const std::complex<double> ref{0.0, std::abs(input[k])};
        const SiteCoord ref_site = nearest_site(ref, g, SiteRestrict::upper_half_plane);
        std::size_t found = pts.size();
        for (std::size_t j = 0; j < pts.size(); ++j) {
            if (nearest_site(pts[j], g, SiteRestrict::upper_half_plane) == ref_site) {
                found = j;
                break;
            }
        }
        if (found == pts.size()) pts.push_back(ref);
        ref_index[k] = found;
    }

    const ProfileResult prof =
        anchored_profile(pts, g, cfg.n, cfg.seed_value(), cfg.box_factor_value(), cfg.workers);

    RunResult out;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        char label[64];
        std::snprintf(label, sizeof(label), "z=%.10g,%.10g", pts[k].real(), pts[k].imag());
        csv_estimate_row(out.csv, label, pts[k].real(), pts[k].imag(), std::abs(pts[k]),
                         prof.estimate(k), prof.truncated);
    }

    out.results["truncated_samples"] = prof.truncated;
    nlohmann::json checks = nlohmann::json::array();
    std::printf("anchored: mesh=%s n=%llu\n", cfg.mesh.c_str(),
                static_cast<unsigned long long>(cfg.n));
    for (std::size_t k = 0; k < input.size(); ++k) {
        if (ref_index[k] == k) continue;  // the point is its own reference
        const RatioEstimate r = prof.ratio(ref_index[k], k);
        const double theta = std::arg(input[k]);
        const double target = std::pow(std::sin(theta), -11.0 / 48.0);
        const bool ok = ratio_check(r.ratio, target, r.se, z_max, rel_tol);
        out.pass = out.pass && ok;
        nlohmann::json check = {{"point", cfg.points[k]},
                                {"ratio_ref_over_z", r.ratio},
                                {"se", r.se},
                                {"target", target},
                                {"z_score", z_score(r.ratio, target, r.se)},
                                {"pass", ok}};
        if (cfg.bootstrap)
            check["se_bootstrap"] = bootstrap_ratio_se(prof.pair_counts(ref_index[k], k));
        checks.push_back(check);
        std::printf("  rho(i|z|)/rho(z) at z=%s: %.5f +- %.5f (target %.5f, z=%+.2f) -> %s\n",
                    cfg.points[k].c_str(), r.ratio, r.se, target,
                    z_score(r.ratio, target, r.se), ok ? "PASS" : "FAIL");
    }
    out.results["angular_checks"] = checks;
    return out;
}

RunResult run_gasket(const RunConfig& cfg) {
    const LatticeGeometry g{cfg.mesh_value()};
    const Domain dom = Domain::parse(cfg.domain);
    if (!dom.bounded())
        throw std::invalid_argument("--domain must be bounded for the gasket sweep");
    const std::vector<std::complex<double>> pts = parse_points(cfg.points);
    if (pts.empty()) throw std::invalid_argument("--point required");
    const double z_max = cfg.z_max_value();
    const double rel_tol = Fraction::parse(cfg.rel_tol).value();

    const ProfileResult prof = gasket_profile(dom, pts, g, cfg.n, cfg.seed_value(), cfg.workers);

    RunResult out;
    std::vector<double> rad(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) {
        rad[k] = dom.conformal_radius(pts[k]);
        char label[64];
        std::snprintf(label, sizeof(label), "z=%.10g,%.10g", pts[k].real(), pts[k].imag());
        csv_estimate_row(out.csv, label, pts[k].real(), pts[k].imag(), rad[k], prof.estimate(k), 0);
    }

    nlohmann::json checks = nlohmann::json::array();
    std::printf("gasket: domain=%s mesh=%s n=%llu\n", dom.str().c_str(), cfg.mesh.c_str(),
                static_cast<unsigned long long>(cfg.n));
    for (std::size_t k = 1; k < pts.size(); ++k) {
        const RatioEstimate r = prof.ratio(k, 0);
        const double target = std::pow(rad[k] / rad[0], -5.0 / 48.0);
        const bool ok = ratio_check(r.ratio, target, r.se, z_max, rel_tol);
        out.pass = out.pass && ok;
        nlohmann::json check = {{"point", cfg.points[k]},
                                {"ratio_vs_first", r.ratio},
                                {"se", r.se},
                                {"target", target},
                                {"z_score", z_score(r.ratio, target, r.se)},
                                {"pass", ok}};
        if (cfg.bootstrap) check["se_bootstrap"] = bootstrap_ratio_se(prof.pair_counts(k, 0));
        checks.push_back(check);
        std::printf("  g(z_%zu)/g(z_0): %.5f +- %.5f (target %.5f, z=%+.2f) -> %s\n", k, r.ratio,
                    r.se, target, z_score(r.ratio, target, r.se), ok ? "PASS" : "FAIL");
    }
    out.results["ratio_checks"] = checks;
    return out;
}

RunResult run_images(const RunConfig& cfg) {
    const LatticeGeometry g{cfg.mesh_value()};
    const std::complex<double> z = parse_point(cfg.z);
    const double z_max = cfg.z_max_value();

    const ImagesReport rep =
        images_check(z, g, cfg.n, cfg.seed_value(), cfg.box_factor_value(), cfg.workers);

    RunResult out;
    csv_estimate_row(out.csv, "upper", z.real(), z.imag(), 0.0, rep.upper, 0);
    csv_estimate_row(out.csv, "lower", z.real(), z.imag(), 0.0, rep.lower, 0);
    csv_estimate_row(out.csv, "both", z.real(), z.imag(), 0.0, rep.both, 0);

    const bool prod_ok = std::abs(rep.z_product) < z_max;
    const bool sym_ok = std::abs(rep.z_symmetry) < z_max;
    out.pass = prod_ok && sym_ok;
    out.results["p_upper"] = rep.upper.p_hat();
    out.results["p_lower"] = rep.lower.p_hat();
    out.results["p_both"] = rep.both.p_hat();
    out.results["z_product"] = rep.z_product;
    out.results["z_symmetry"] = rep.z_symmetry;
    out.results["pass"] = out.pass;

    std::printf("images at z=%s, mesh=%s, n=%llu\n", cfg.z.c_str(), cfg.mesh.c_str(),
                static_cast<unsigned long long>(cfg.n));
    std::printf("  P(both)=%.6f  P(u)P(l)=%.6f  z_product=%+.2f -> %s\n", rep.both.p_hat(),
                rep.upper.p_hat() * rep.lower.p_hat(), rep.z_product, prod_ok ? "PASS" : "FAIL");
    std::printf("  P(u)=%.6f  P(l)=%.6f  z_symmetry=%+.2f -> %s\n", rep.upper.p_hat(),
                rep.lower.p_hat(), rep.z_symmetry, sym_ok ? "PASS" : "FAIL");
    return out;
}

RunResult run_multipoint(const RunConfig& cfg) {
    const LatticeGeometry g{cfg.mesh_value()};
    const std::vector<std::complex<double>> bulk = parse_points(cfg.bulk);
    std::vector<double> boundary;
    for (const auto& b : cfg.boundary) boundary.push_back(Fraction::parse(b).value());
    const double s = cfg.scale_value();
    const double z_max = cfg.z_max_value();
    const double rel_tol = Fraction::parse(cfg.rel_tol).value();

    const ScaleCovarianceReport rep = multipoint_covariance(
        bulk, boundary, s, g, cfg.n, cfg.seed_value(), cfg.box_factor_value(), cfg.workers);

    RunResult out;
    csv_estimate_row(out.csv, "original", 1.0, 0.0, rep.target, rep.original, rep.truncated);
    csv_estimate_row(out.csv, "dilated", s, 0.0, rep.target, rep.dilated, rep.truncated);

    out.pass = ratio_check(rep.ratio.ratio, rep.target, rep.ratio.se, z_max, rel_tol);
    out.results["ratio"] = rep.ratio.ratio;
    out.results["se"] = rep.ratio.se;
    if (cfg.bootstrap) out.results["se_bootstrap"] = bootstrap_ratio_se(rep.counts);
    out.results["target"] = rep.target;
    out.results["z_score"] = rep.z;
    out.results["pass"] = out.pass;

    std::printf("multipoint scale covariance: k=%zu bulk, n=%zu boundary, s=%s\n", bulk.size(),
                boundary.size(), cfg.scale.c_str());
    std::printf("  P(s*pts)/P(pts) = %.5f +- %.5f (target %.5f, z=%+.2f) -> %s\n",
                rep.ratio.ratio, rep.ratio.se, rep.target, rep.z, out.pass ? "PASS" : "FAIL");
    return out;
}

const char* patch_event_name(const Patch& p) {
    switch (p.mc) {
        case Patch::Mc::one_arm: return "one-arm";
        case Patch::Mc::boundary_one_arm: return "boundary-arm";
        case Patch::Mc::gasket: return "gasket";
        case Patch::Mc::connect_box: return p.targets.size() > 1 ? "multipoint" : "anchored";
    }
    return "unknown";
}

RunResult run_oracle(const RunConfig& cfg) {
    const double z_max = cfg.z_max_value();
    RunResult out;
    nlohmann::json checks = nlohmann::json::array();
    std::uint64_t seed = cfg.seed_value();
    bool matched_any = false;
    for (const Patch& p : builtin_patches()) {
        if (cfg.patch != "all" && cfg.patch != p.name) continue;
        if (cfg.event != "all" && cfg.event != patch_event_name(p)) continue;
        matched_any = true;
        const double exact = oracle_exact(p);
        const Estimate mc = oracle_mc(p, cfg.n, seed++, cfg.workers);
        const double sigma = std::sqrt(exact * (1.0 - exact) / static_cast<double>(cfg.n));
        const double z = (mc.p_hat() - exact) / sigma;
        const bool ok = std::abs(z) < z_max;
        out.pass = out.pass && ok;
        csv_estimate_row(out.csv, p.name, exact, z, 0.0, mc, 0);
        checks.push_back({{"patch", p.name},
                          {"exact", exact},
                          {"mc", mc.p_hat()},
                          {"z_score", z},
                          {"pass", ok}});
        std::printf("  %-20s exact=%.8f mc=%.8f z=%+.2f -> %s\n", p.name.c_str(), exact,
                    mc.p_hat(), z, ok ? "PASS" : "FAIL");
    }
    if (!matched_any)
        throw std::invalid_argument("no patch matches --patch '" + cfg.patch + "' --event '" +
                                    cfg.event + "'");
    out.results["checks"] = checks;
    return out;
}

RunResult run_selftest(const RunConfig& cfg) {
    RunResult out;

    AuditConfig audit_cfg;
    audit_cfg.n = cfg.n;
    audit_cfg.seed = cfg.seed_value();
    audit_cfg.workers = cfg.workers;
    const AuditReport audit = audit_invariants(audit_cfg);
    csv_estimate_row(out.csv, "audit-violations", static_cast<double>(audit.violations),
                     static_cast<double>(audit.samples), 0.0,
                     Estimate{audit.violations, audit.samples}, 0);
    const bool audit_ok = audit.violations == 0;
    std::printf("selftest: %llu samples audited, %llu violations -> %s\n",
                static_cast<unsigned long long>(audit.samples),
                static_cast<unsigned long long>(audit.violations), audit_ok ? "PASS" : "FAIL");
    for (const auto& d : audit.details) std::printf("    violation: %s\n", d.c_str());

    const LatticeGeometry g{1.0 / 32.0};
    const BoxStabilityReport box = box_stability({0.0, 0.5}, g, 50000, cfg.seed_value() + 1,
                                                 cfg.box_factor_value(), cfg.workers);
    csv_estimate_row(out.csv, "box-factor-base", cfg.box_factor_value(), 0.0, 0.0, box.base, 0);
    csv_estimate_row(out.csv, "box-factor-doubled", 2.0 * cfg.box_factor_value(), 0.0, 0.0,
                     box.doubled, 0);
    std::printf("  box doubling: change=%.2e vs sigma=%.2e -> %s\n", box.change, box.sigma,
                box.stable ? "PASS" : "FAIL");

    const HarrisReport harris =
        harris_check({0.0, 0.5}, {0.25, 0.5}, 0.125, g, 100000, cfg.seed_value() + 2,
                     cfg.box_factor_value(), cfg.workers);
    csv_estimate_row(out.csv, "harris-joint", harris.z, 0.0, 0.0, harris.joint_est, 0);
    const bool harris_ok = harris.z > -cfg.z_max_value();
    std::printf("  positive association: z=%+.2f -> %s\n", harris.z, harris_ok ? "PASS" : "FAIL");

    out.pass = audit_ok && box.stable && harris_ok;
    out.results["audit_samples"] = audit.samples;
    out.results["audit_violations"] = audit.violations;
    out.results["box_change"] = box.change;
    out.results["box_sigma"] = box.sigma;
    out.results["harris_z"] = harris.z;
    out.results["pass"] = out.pass;
    return out;
}

int run(RunConfig cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.csv_out.empty()) cfg.csv_out = cfg.command + ".csv";
    if (cfg.manifest_out.empty()) cfg.manifest_out = cfg.command + "_manifest.json";

    RunResult result;
    if (cfg.command == "one-arm") {
        if (cfg.slope_target.empty()) cfg.slope_target = "-5/48";
        if (cfg.slope_tol.empty()) cfg.slope_tol = "0.02";
        result = run_arm(cfg, HalfPlane::none);
    } else if (cfg.command == "boundary-arm") {
        if (cfg.slope_target.empty()) cfg.slope_target = "-1/3";
        if (cfg.slope_tol.empty()) cfg.slope_tol = "0.03";
        result = run_arm(cfg, HalfPlane::upper);
    } else if (cfg.command == "anchored") {
        result = run_anchored(cfg);
    } else if (cfg.command == "gasket") {
        result = run_gasket(cfg);
    } else if (cfg.command == "images") {
        result = run_images(cfg);
    } else if (cfg.command == "multipoint") {
        result = run_multipoint(cfg);
    } else if (cfg.command == "oracle") {
        result = run_oracle(cfg);
    } else if (cfg.command == "selftest") {
        result = run_selftest(cfg);
    } else {
        throw std::invalid_argument("unknown command '" + cfg.command + "'");
    }

    result.csv.write(cfg.csv_out);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(make_manifest(cfg, result.results, wall), cfg.manifest_out);
    std::printf("wrote %s and %s (%.1fs)\n", cfg.csv_out.c_str(), cfg.manifest_out.c_str(), wall);
    return result.pass ? kExitOk : kExitTolerance;
}

void add_common(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--mesh", cfg.mesh, "Lattice mesh a, fraction or decimal");
    cmd->add_option("--n", cfg.n, "Number of Monte Carlo samples");
    cmd->add_option("--seed", cfg.seed, "64-bit seed, decimal or 0x-hex");
    cmd->add_option("--workers", cfg.workers,
                    "Worker threads (0 = PERCLAB_WORKERS env or hardware); never affects results");
    cmd->add_option("--out", cfg.csv_out, "CSV output path (default <command>.csv)");
    cmd->add_option("--manifest", cfg.manifest_out,
                    "Manifest output path (default <command>_manifest.json)");
    cmd->add_option("--zmax", cfg.z_max, "z-score bound for statistical checks");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Critical site percolation laboratory on the triangular lattice"};
    app.set_version_flag("--version", std::string("perclab ") + kVersion);
    app.require_subcommand(1);

    RunConfig cfg;
    std::string rerun_path;

    auto* one_arm_cmd = app.add_subcommand(
        "one-arm", "Bulk one-arm epsilon sweep and exponent fit (target -5/48)");
    cfg.eps = {"1/16", "1/8", "1/4", "1/2"};
    add_common(one_arm_cmd, cfg);
    one_arm_cmd->add_option("--eps", cfg.eps, "Arm radii (fractions)")->delimiter(',');
    one_arm_cmd->add_option("--slope-target", cfg.slope_target, "Expected slope (default -5/48)");
    one_arm_cmd->add_option("--slope-tol", cfg.slope_tol, "Slope tolerance (default 0.02)");

    auto* boundary_cmd = app.add_subcommand(
        "boundary-arm", "Boundary one-arm epsilon sweep and exponent fit (target -1/3)");
    add_common(boundary_cmd, cfg);
    boundary_cmd->add_option("--eps", cfg.eps, "Arm radii (fractions)")->delimiter(',');
    boundary_cmd->add_option("--slope-target", cfg.slope_target, "Expected slope (default -1/3)");
    boundary_cmd->add_option("--slope-tol", cfg.slope_tol, "Slope tolerance (default 0.03)");

    auto* anchored_cmd = app.add_subcommand(
        "anchored", "Anchored-cluster density profile against (sin theta)^{11/48} r^{-7/16}");
    add_common(anchored_cmd, cfg);
    anchored_cmd->add_option("--point", cfg.points, "Profile points 're,im' (repeatable)");
    anchored_cmd->add_option("--box-factor", cfg.box_factor, "Safety box factor (default 4)");
    anchored_cmd->add_option("--rel-tol", cfg.rel_tol,
                             "Relative tolerance floor for ratio targets (default 0.05)");
    anchored_cmd->add_flag("--bootstrap", cfg.bootstrap,
                           "Also report bootstrap ratio errors (1000 resamples)");

    auto* gasket_cmd =
        app.add_subcommand("gasket", "Gasket density profile against rad(z,D)^{-5/48}");
    add_common(gasket_cmd, cfg);
    gasket_cmd->add_option("--domain", cfg.domain,
                           "Domain spec: disk:cx,cy,R | halfplane | strip:h, optional *s+tx,ty");
    gasket_cmd->add_option("--point", cfg.points, "Profile points 're,im' (repeatable)");
    gasket_cmd->add_option("--rel-tol", cfg.rel_tol,
                           "Relative tolerance floor for ratio targets (default 0.05)");
    gasket_cmd->add_flag("--bootstrap", cfg.bootstrap,
                         "Also report bootstrap ratio errors (1000 resamples)");

    auto* images_cmd = app.add_subcommand(
        "images", "Doubled-event product and reflection-symmetry check at one point");
    add_common(images_cmd, cfg);
    images_cmd->add_option("--z", cfg.z, "Point 're,im' with Im > 0 (default 0,1)");
    images_cmd->add_option("--box-factor", cfg.box_factor, "Safety box factor (default 4)");

    auto* multi_cmd = app.add_subcommand(
        "multipoint", "Multipoint scale-covariance check against s^{-5k/48 - n/3}");
    add_common(multi_cmd, cfg);
    multi_cmd->add_option("--bulk", cfg.bulk, "Bulk points 're,im' (repeatable)");
    multi_cmd->add_option("--boundary", cfg.boundary, "Boundary abscissae (repeatable)");
    multi_cmd->add_option("--scale", cfg.scale, "Dilation factor s (default 2)");
    multi_cmd->add_option("--box-factor", cfg.box_factor, "Safety box factor (default 4)");
    multi_cmd->add_option("--rel-tol", cfg.rel_tol,
                          "Relative tolerance floor for the ratio target (default 0.1)");
    multi_cmd->add_flag("--bootstrap", cfg.bootstrap,
                        "Also report bootstrap ratio errors (1000 resamples)");

    auto* oracle_cmd = app.add_subcommand(
        "oracle", "Exhaustive small-patch enumeration versus Monte Carlo frequency");
    add_common(oracle_cmd, cfg);
    oracle_cmd->add_option("--patch", cfg.patch, "Patch name or 'all'");
    oracle_cmd->add_option(
        "--event", cfg.event,
        "Filter by event kind: one-arm|boundary-arm|anchored|multipoint|gasket|all");

    auto* selftest_cmd =
        app.add_subcommand("selftest", "Per-sample invariant audit and statistical self-checks");
    add_common(selftest_cmd, cfg);
    selftest_cmd->add_option("--box-factor", cfg.box_factor, "Safety box factor (default 4)");

    auto* rerun_cmd = app.add_subcommand("rerun", "Re-run a recorded manifest bit-exactly");
    rerun_cmd->add_option("manifest", rerun_path, "Manifest JSON path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (rerun_cmd->parsed()) {
            return run(load_manifest_config(rerun_path));
        }
        // Per-command defaults that differ from the shared RunConfig ones.
        if (one_arm_cmd->parsed()) {
            cfg.command = "one-arm";
            if (!one_arm_cmd->count("--mesh")) cfg.mesh = "1/512";
            if (!one_arm_cmd->count("--n")) cfg.n = 200000;
        } else if (boundary_cmd->parsed()) {
            cfg.command = "boundary-arm";
            if (!boundary_cmd->count("--mesh")) cfg.mesh = "1/512";
            if (!boundary_cmd->count("--n")) cfg.n = 200000;
        } else if (anchored_cmd->parsed()) {
            cfg.command = "anchored";
            if (!anchored_cmd->count("--mesh")) cfg.mesh = "1/128";
            if (!anchored_cmd->count("--n")) cfg.n = 1000000;
            if (cfg.points.empty())
                cfg.points = {"0,0.5", "0.4330127018922193,0.25"};
            if (cfg.rel_tol.empty()) cfg.rel_tol = "0.05";
        } else if (gasket_cmd->parsed()) {
            cfg.command = "gasket";
            if (!gasket_cmd->count("--mesh")) cfg.mesh = "1/128";
            if (!gasket_cmd->count("--n")) cfg.n = 50000;
            if (cfg.points.empty()) cfg.points = {"0,0", "0.9,0"};
            if (cfg.rel_tol.empty()) cfg.rel_tol = "0.05";
        } else if (images_cmd->parsed()) {
            cfg.command = "images";
            if (!images_cmd->count("--mesh")) cfg.mesh = "1/64";
            if (!images_cmd->count("--n")) cfg.n = 1000000;
        } else if (multi_cmd->parsed()) {
            cfg.command = "multipoint";
            if (!multi_cmd->count("--mesh")) cfg.mesh = "1/64";
            if (!multi_cmd->count("--n")) cfg.n = 400000;
            if (cfg.bulk.empty()) cfg.bulk = {"0,1/4"};
            if (cfg.boundary.empty()) cfg.boundary = {"0", "1/4"};
            if (cfg.rel_tol.empty()) cfg.rel_tol = "0.1";
        } else if (oracle_cmd->parsed()) {
            cfg.command = "oracle";
            if (!oracle_cmd->count("--n")) cfg.n = 1000000;
        } else if (selftest_cmd->parsed()) {
            cfg.command = "selftest";
            if (!selftest_cmd->count("--n")) cfg.n = 10000;
        }
        return run(std::move(cfg));
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
}
