#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>

namespace perclab {

/// Axial coordinates of a triangular-lattice vertex (equivalently, the
/// center of the dual hexagonal cell). The plane embedding is
///
///     position(i, j) = mesh * (i + j/2, j * sqrt(3)/2),
///
/// so row j = 0 lies on the real axis, the vertex (0,0) sits at the origin
/// of the plane, and every neighbor pair is exactly one mesh unit apart.
/// Rows j >= 0 form the discrete upper half-plane, rows j <= -1 the
/// discrete lower half-plane; (0,-1) is the lower half-plane's origin.
struct SiteCoord {
    std::int64_t i = 0;
    std::int64_t j = 0;

    friend constexpr bool operator==(const SiteCoord&, const SiteCoord&) = default;
};

constexpr SiteCoord operator+(SiteCoord a, SiteCoord b) { return {a.i + b.i, a.j + b.j}; }
constexpr SiteCoord operator-(SiteCoord a, SiteCoord b) { return {a.i - b.i, a.j - b.j}; }

constexpr bool lex_less(SiteCoord a, SiteCoord b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
}

/// The six nearest-neighbor offsets of the triangular lattice.
inline constexpr std::array<SiteCoord, 6> kNeighborOffsets = {{
    {1, 0},
    {-1, 0},
    {0, 1},
    {0, -1},
    {1, -1},
    {-1, 1},
}};

constexpr std::array<SiteCoord, 6> neighbors(SiteCoord c) {
    std::array<SiteCoord, 6> out{};
    for (std::size_t k = 0; k < 6; ++k) out[k] = c + kNeighborOffsets[k];
    return out;
}

/// Squared Euclidean distance from the origin in units of mesh^2:
/// |position(i,j)|^2 = mesh^2 * (i^2 + i*j + j^2). Exact in integers, which
/// keeps every disk-membership test deterministic (no rounding at radii).
constexpr std::int64_t norm2_units(SiteCoord c) {
    return c.i * c.i + c.i * c.j + c.j * c.j;
}

constexpr std::int64_t dist2_units(SiteCoord a, SiteCoord b) { return norm2_units(a - b); }

constexpr bool in_upper_half_plane(SiteCoord c) { return c.j >= 0; }
constexpr bool in_lower_half_plane(SiteCoord c) { return c.j <= -1; }

/// Packs a coordinate into a 64-bit hash/queue key. Valid while both
/// components fit in 32 bits, which holds for any site an exploration can
/// reach in practice (|i|, |j| < 2^31).
constexpr std::uint64_t pack_site(SiteCoord c) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.i)) << 32) |
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.j));
}

constexpr SiteCoord unpack_site(std::uint64_t key) {
    return {static_cast<std::int64_t>(static_cast<std::int32_t>(key >> 32)),
            static_cast<std::int64_t>(static_cast<std::int32_t>(key & 0xffffffffULL))};
}

/// Mesh size a of the scaled lattice together with the plane embedding.
struct LatticeGeometry {
    double mesh = 1.0;

    std::complex<double> position(SiteCoord c) const {
        return {mesh * (static_cast<double>(c.i) + 0.5 * static_cast<double>(c.j)),
                mesh * kHalfSqrt3 * static_cast<double>(c.j)};
    }

    /// Length in the plane converted to lattice units (multiples of mesh).
    double units(double length) const { return length / mesh; }

    /// Squared length in lattice units, for comparison against norm2_units.
    double units2(double length) const {
        double u = length / mesh;
        return u * u;
    }

    static constexpr double kHalfSqrt3 = 0.86602540378443864676;
};

/// Reflection composed with a translation taking the discrete upper
/// half-plane bijectively onto the discrete lower half-plane: the origin
/// (0,0) goes to the lower origin (0,-1) and adjacency is preserved (the
/// linear part permutes the neighbor offsets and has determinant -1).
inline SiteCoord reflect_lower(SiteCoord c) {
    if (c.j < 0) throw std::domain_error("reflect_lower: site not in the upper half-plane");
    return {c.i + c.j, -1 - c.j};
}

enum class SiteRestrict { none, upper_half_plane };

/// Site of the scaled lattice closest to the plane point z, with a
/// deterministic lexicographic tie-break so the discretization z^a of a
/// point is reproducible. With the upper-half-plane restriction only rows
/// j >= 0 are considered (requires Im z >= 0).
inline SiteCoord nearest_site(std::complex<double> z, const LatticeGeometry& g,
                              SiteRestrict restrict = SiteRestrict::none) {
    if (restrict == SiteRestrict::upper_half_plane && z.imag() < 0.0)
        throw std::invalid_argument("nearest_site: Im z < 0 with upper-half-plane restriction");
    const double jr = z.imag() / (g.mesh * LatticeGeometry::kHalfSqrt3);
    const double ir = z.real() / g.mesh - 0.5 * jr;
    const auto i0 = static_cast<std::int64_t>(std::floor(ir));
    const auto j0 = static_cast<std::int64_t>(std::floor(jr));
    bool found = false;
    SiteCoord best{};
    double best_d2 = 0.0;
    for (std::int64_t dj = -1; dj <= 2; ++dj) {
        const std::int64_t j = j0 + dj;
        if (restrict == SiteRestrict::upper_half_plane && j < 0) continue;
        for (std::int64_t di = -1; di <= 2; ++di) {
            const SiteCoord c{i0 + di, j};
            const std::complex<double> d = g.position(c) - z;
            const double d2 = d.real() * d.real() + d.imag() * d.imag();
            if (!found || d2 < best_d2 || (d2 == best_d2 && lex_less(c, best))) {
                found = true;
                best = c;
                best_d2 = d2;
            }
        }
    }
    return best;
}

/// Row-0 site closest to the real point x (boundary discretization
/// x^a of a point on the real line); ties resolve to the smaller column.
inline SiteCoord nearest_boundary_site(double x, const LatticeGeometry& g) {
    return {static_cast<std::int64_t>(std::ceil(x / g.mesh - 0.5)), 0};
}

}  // namespace perclab
