#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace perclab {

inline constexpr double kZ95 = 1.959963984540054;  // two-sided 95% normal quantile

/// Bernoulli probability estimate. Stores the integer success count so the
/// estimate is exactly reproducible; p_hat * n is always recoverable.
struct Estimate {
    std::uint64_t successes = 0;
    std::uint64_t n = 0;

    double p_hat() const { return n == 0 ? 0.0 : static_cast<double>(successes) / static_cast<double>(n); }

    /// Wald standard error sqrt(p(1-p)/n).
    double se() const {
        if (n == 0) return 0.0;
        const double p = p_hat();
        return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    }

    struct Interval {
        double lo = 0.0;
        double hi = 0.0;
    };

    /// 95% Wilson score interval.
    Interval ci95() const {
        if (n == 0) return {0.0, 1.0};
        const double z = kZ95;
        const double nn = static_cast<double>(n);
        const double p = p_hat();
        const double denom = 1.0 + z * z / nn;
        const double center = (p + z * z / (2.0 * nn)) / denom;
        const double half =
            z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
        return {center - half, center + half};
    }
};

/// Ratio of two Bernoulli probabilities. With shared-samples coupling the
/// standard error comes from the 2x2 joint outcome counts, so correlation
/// between the coupled events (including exact nesting) is accounted for.
struct RatioEstimate {
    enum class Coupling { shared_samples, independent };

    double ratio = 0.0;
    double se = 0.0;
    Coupling coupling = Coupling::shared_samples;

    /// Delta-method ratio from joint counts over n shared samples:
    /// c_num, c_den successes of the two events, c_both joint successes.
    static RatioEstimate from_joint(std::uint64_t n, std::uint64_t c_num, std::uint64_t c_den,
                                    std::uint64_t c_both) {
        if (c_den == 0) throw std::runtime_error("ratio estimate: denominator event never occurred");
        const double nn = static_cast<double>(n);
        const double pn = static_cast<double>(c_num) / nn;
        const double pd = static_cast<double>(c_den) / nn;
        const double pb = static_cast<double>(c_both) / nn;
        RatioEstimate r;
        r.ratio = pn / pd;
        r.coupling = Coupling::shared_samples;
        if (c_num == 0) {
            r.se = 0.0;
            return r;
        }
        const double vn = pn * (1.0 - pn);
        const double vd = pd * (1.0 - pd);
        const double cov = pb - pn * pd;
        const double rel2 = vn / (pn * pn) + vd / (pd * pd) - 2.0 * cov / (pn * pd);
        r.se = r.ratio * std::sqrt(std::max(0.0, rel2) / nn);
        return r;
    }

    static RatioEstimate from_independent(const Estimate& num, const Estimate& den) {
        if (den.successes == 0)
            throw std::runtime_error("ratio estimate: denominator event never occurred");
        RatioEstimate r;
        r.ratio = num.p_hat() / den.p_hat();
        r.coupling = Coupling::independent;
        if (num.successes == 0) {
            r.se = 0.0;
            return r;
        }
        const double pn = num.p_hat();
        const double pd = den.p_hat();
        const double rel2 = (1.0 - pn) / (pn * static_cast<double>(num.n)) +
                            (1.0 - pd) / (pd * static_cast<double>(den.n));
        r.se = r.ratio * std::sqrt(rel2);
        return r;
    }
};

struct FitPoint {
    double x = 0.0;
    Estimate estimate;
};

/// Weighted least-squares fit of log p against log x. Weights are the
/// delta-method variances of log p_hat, 1/Var = p*n/(1-p), and the slope
/// standard error comes from the same weights.
struct ExponentFit {
    double slope = 0.0;
    double slope_se = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;

    struct Pt {
        double log_x = 0.0;
        double log_p = 0.0;
        double weight = 0.0;
    };
    std::vector<Pt> points;
};

inline ExponentFit fit_power_law(std::span<const FitPoint> data) {
    if (data.size() < 3) throw std::invalid_argument("fit_power_law: need at least 3 points");
    ExponentFit fit;
    fit.points.reserve(data.size());
    for (const FitPoint& fp : data) {
        if (!(fp.x > 0.0)) throw std::invalid_argument("fit_power_law: x values must be positive");
        const double p = fp.estimate.p_hat();
        if (!(p > 0.0))
            throw std::invalid_argument("fit_power_law: estimates must be positive");
        const double var_logp =
            p < 1.0 ? (1.0 - p) / (p * static_cast<double>(fp.estimate.n)) : 0.0;
        // A saturated estimate (p == 1) carries no slope information at
        // finite n worth an infinite weight; give it the weight of one
        // success short of saturation instead.
        const double w = var_logp > 0.0
                             ? 1.0 / var_logp
                             : static_cast<double>(fp.estimate.n) * static_cast<double>(fp.estimate.n);
        fit.points.push_back({std::log(fp.x), std::log(p), w});
    }
    double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& pt : fit.points) {
        sw += pt.weight;
        sx += pt.weight * pt.log_x;
        sy += pt.weight * pt.log_p;
        sxx += pt.weight * pt.log_x * pt.log_x;
        sxy += pt.weight * pt.log_x * pt.log_p;
    }
    const double delta = sw * sxx - sx * sx;
    if (!(delta > 0.0)) throw std::invalid_argument("fit_power_law: degenerate abscissae");
    fit.slope = (sw * sxy - sx * sy) / delta;
    fit.intercept = (sxx * sy - sx * sxy) / delta;
    fit.slope_se = std::sqrt(sw / delta);
    double ss_res = 0.0, ss_tot = 0.0;
    const double mean_y = sy / sw;
    for (const auto& pt : fit.points) {
        const double fitted = fit.intercept + fit.slope * pt.log_x;
        ss_res += pt.weight * (pt.log_p - fitted) * (pt.log_p - fitted);
        ss_tot += pt.weight * (pt.log_p - mean_y) * (pt.log_p - mean_y);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

/// Standardized difference (a - b) / se for a reported z-score.
inline double z_score(double a, double b, double se) {
    if (se <= 0.0) return a == b ? 0.0 : std::numeric_limits<double>::infinity();
    return (a - b) / se;
}

}  // namespace perclab
