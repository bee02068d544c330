#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "perclab/fraction.hpp"
#include "perclab/lattice.hpp"

namespace perclab {

/// A planar domain conformally equivalent to the unit disk, from the small
/// closed-form family {disk, upper half-plane, horizontal strip}, optionally
/// composed with an affine map z = s*w + t (s > 0). Domains are open sets;
/// boundary points are exterior. Affine images compose by flattening, so a
/// scaled scaled domain stays a single (kind, s, t) record and the scaling
/// covariance rad(s*D + t, s*z + t) = s * rad(D, z) is an exact arithmetic
/// identity.
class Domain {
  public:
    enum class Kind { disk, half_plane, strip };

    static Domain disk(std::complex<double> center, double radius) {
        if (!(radius > 0.0)) throw std::invalid_argument("Domain::disk: radius must be positive");
        Domain d;
        d.kind_ = Kind::disk;
        d.center_ = center;
        d.radius_ = radius;
        return d;
    }

    static Domain half_plane() {
        Domain d;
        d.kind_ = Kind::half_plane;
        return d;
    }

    static Domain strip(double height) {
        if (!(height > 0.0)) throw std::invalid_argument("Domain::strip: height must be positive");
        Domain d;
        d.kind_ = Kind::strip;
        d.height_ = height;
        return d;
    }

    /// The affine image s*D + t of this domain.
    Domain scaled(double s, std::complex<double> t = {0.0, 0.0}) const {
        if (!(s > 0.0)) throw std::invalid_argument("Domain::scaled: scale must be positive");
        Domain d = *this;
        d.scale_ = s * scale_;
        d.shift_ = s * shift_ + t;
        return d;
    }

    Kind kind() const { return kind_; }
    bool bounded() const { return kind_ == Kind::disk; }

    bool contains(std::complex<double> z) const {
        const std::complex<double> w = (z - shift_) / scale_;
        switch (kind_) {
            case Kind::disk:
                return std::norm(w - center_) < radius_ * radius_;
            case Kind::half_plane:
                return w.imag() > 0.0;
            case Kind::strip:
                return w.imag() > 0.0 && w.imag() < height_;
        }
        return false;
    }

    /// Conformal radius rad(z, D) = 1/|phi'(z)| for a conformal map
    /// phi: D -> unit disk with phi(z) = 0. Closed forms:
    ///   disk(c, R):        (R^2 - |z-c|^2) / R
    ///   upper half-plane:  2 Im z
    ///   strip(h):          (2h/pi) sin(pi Im z / h)
    /// and rad(s*D + t, z) = s * rad(D, (z-t)/s).
    double conformal_radius(std::complex<double> z) const {
        if (!contains(z)) throw std::domain_error("conformal_radius: point outside the domain");
        const std::complex<double> w = (z - shift_) / scale_;
        double base = 0.0;
        switch (kind_) {
            case Kind::disk:
                base = (radius_ * radius_ - std::norm(w - center_)) / radius_;
                break;
            case Kind::half_plane:
                base = 2.0 * w.imag();
                break;
            case Kind::strip:
                base = (2.0 * height_ / kPi) * std::sin(kPi * w.imag() / height_);
                break;
        }
        return scale_ * base;
    }

    /// Center and radius in the plane (bounded domains only).
    std::complex<double> disk_center() const {
        require_bounded("disk_center");
        return scale_ * center_ + shift_;
    }
    double disk_radius() const {
        require_bounded("disk_radius");
        return scale_ * radius_;
    }

    /// Canonical spec string: "disk:cx,cy,R", "halfplane", "strip:h",
    /// with a "*s+tx,ty" suffix when an affine map is attached.
    std::string str() const;

    /// Parses the grammar emitted by str(); numbers may be fractions or
    /// decimals. Examples: "disk:0,0,1", "strip:1*2+0.5,0", "halfplane".
    static Domain parse(std::string_view spec);

    friend bool operator==(const Domain&, const Domain&) = default;

  private:
    void require_bounded(const char* who) const {
        if (!bounded()) throw std::invalid_argument(std::string(who) + ": domain is unbounded");
    }

    static constexpr double kPi = 3.14159265358979323846;

    Kind kind_ = Kind::disk;
    std::complex<double> center_{0.0, 0.0};  // disk
    double radius_ = 1.0;                    // disk
    double height_ = 1.0;                    // strip
    double scale_ = 1.0;                     // affine z = scale_*w + shift_
    std::complex<double> shift_{0.0, 0.0};
};

namespace detail {

inline std::string num_str(double v) {
    std::string s = std::to_string(v);
    // trim trailing zeros, keep at least one digit after the point
    if (s.find('.') != std::string::npos) {
        while (s.size() > 1 && s.back() == '0') s.pop_back();
        if (s.back() == '.') s.pop_back();
    }
    return s;
}

inline double parse_num(std::string_view s) { return Fraction::parse(s).value(); }

}  // namespace detail

inline std::string Domain::str() const {
    std::string out;
    switch (kind_) {
        case Kind::disk:
            out = "disk:" + detail::num_str(center_.real()) + "," + detail::num_str(center_.imag()) +
                  "," + detail::num_str(radius_);
            break;
        case Kind::half_plane:
            out = "halfplane";
            break;
        case Kind::strip:
            out = "strip:" + detail::num_str(height_);
            break;
    }
    if (scale_ != 1.0 || shift_ != std::complex<double>{0.0, 0.0}) {
        out += "*" + detail::num_str(scale_) + "+" + detail::num_str(shift_.real()) + "," +
               detail::num_str(shift_.imag());
    }
    return out;
}

inline Domain Domain::parse(std::string_view spec) {
    std::string_view body = spec;
    double s = 1.0;
    std::complex<double> t{0.0, 0.0};
    if (auto star = spec.find('*'); star != std::string_view::npos) {
        body = spec.substr(0, star);
        std::string_view suffix = spec.substr(star + 1);
        auto plus = suffix.find('+');
        if (plus == std::string_view::npos) {
            s = detail::parse_num(suffix);
        } else {
            s = detail::parse_num(suffix.substr(0, plus));
            std::string_view tpart = suffix.substr(plus + 1);
            auto comma = tpart.find(',');
            if (comma == std::string_view::npos)
                throw std::invalid_argument("domain spec: translation must be 'tx,ty' in '" +
                                            std::string(spec) + "'");
            t = {detail::parse_num(tpart.substr(0, comma)), detail::parse_num(tpart.substr(comma + 1))};
        }
    }
    Domain base;
    if (body == "halfplane") {
        base = Domain::half_plane();
    } else if (body.rfind("strip:", 0) == 0) {
        base = Domain::strip(detail::parse_num(body.substr(6)));
    } else if (body.rfind("disk:", 0) == 0) {
        std::string_view args = body.substr(5);
        auto c1 = args.find(',');
        auto c2 = c1 == std::string_view::npos ? std::string_view::npos : args.find(',', c1 + 1);
        if (c1 == std::string_view::npos || c2 == std::string_view::npos)
            throw std::invalid_argument("domain spec: disk needs 'cx,cy,R' in '" + std::string(spec) +
                                        "'");
        base = Domain::disk({detail::parse_num(args.substr(0, c1)),
                             detail::parse_num(args.substr(c1 + 1, c2 - c1 - 1))},
                            detail::parse_num(args.substr(c2 + 1)));
    } else {
        throw std::invalid_argument("unknown domain spec '" + std::string(spec) + "'");
    }
    return s == 1.0 && t == std::complex<double>{0.0, 0.0} ? base : base.scaled(s, t);
}

/// Axial-coordinate bounding box (with slack) that covers a bounded domain.
struct AxialBounds {
    std::int64_t i_min, i_max, j_min, j_max;
};

inline AxialBounds axial_bounds(const Domain& dom, const LatticeGeometry& g, std::int64_t slack = 2) {
    if (!dom.bounded()) throw std::invalid_argument("axial_bounds: domain is unbounded");
    const std::complex<double> c = dom.disk_center();
    const double r = dom.disk_radius();
    const double row = g.mesh * LatticeGeometry::kHalfSqrt3;
    const auto j_lo = static_cast<std::int64_t>(std::floor((c.imag() - r) / row)) - slack;
    const auto j_hi = static_cast<std::int64_t>(std::ceil((c.imag() + r) / row)) + slack;
    const auto i_lo =
        static_cast<std::int64_t>(std::floor((c.real() - r) / g.mesh - 0.5 * static_cast<double>(j_hi))) -
        slack;
    const auto i_hi =
        static_cast<std::int64_t>(std::ceil((c.real() + r) / g.mesh - 0.5 * static_cast<double>(j_lo))) +
        slack;
    return {i_lo, i_hi, j_lo, j_hi};
}

/// All sites of the scaled lattice inside the (bounded) domain.
inline std::vector<SiteCoord> interior_sites(const Domain& dom, const LatticeGeometry& g) {
    const AxialBounds b = axial_bounds(dom, g);
    std::vector<SiteCoord> out;
    for (std::int64_t j = b.j_min; j <= b.j_max; ++j)
        for (std::int64_t i = b.i_min; i <= b.i_max; ++i)
            if (dom.contains(g.position({i, j}))) out.push_back({i, j});
    return out;
}

/// Exterior collar: sites outside the domain adjacent to a site inside.
/// Any open path from the interior to the exterior crosses the collar, so
/// exploring interior + collar suffices to detect boundary connection.
inline std::vector<SiteCoord> exterior_collar(const Domain& dom, const LatticeGeometry& g) {
    if (!dom.bounded())
        throw std::invalid_argument("exterior_collar: domain must be bounded for gasket sweeps");
    const AxialBounds b = axial_bounds(dom, g, 3);
    std::vector<SiteCoord> out;
    for (std::int64_t j = b.j_min; j <= b.j_max; ++j) {
        for (std::int64_t i = b.i_min; i <= b.i_max; ++i) {
            const SiteCoord c{i, j};
            if (dom.contains(g.position(c))) continue;
            for (const SiteCoord& n : neighbors(c)) {
                if (dom.contains(g.position(n))) {
                    out.push_back(c);
                    break;
                }
            }
        }
    }
    return out;
}

}  // namespace perclab
