#pragma once

#include <cmath>
#include <complex>
#include <iomanip>
#include <ostream>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "core.hpp"
#include "distance.hpp"
#include "flow.hpp"
#include "fuchsian.hpp"
#include "geometry.hpp"
#include "linearization.hpp"
#include "parallel.hpp"

namespace leafgibbs {

/// Point of the ideal circle, as an angle of the Poincare disc boundary.
/// Half-plane endpoints are carried over by the Cayley map, infinity at 0.
struct BoundaryPoint {
    double xi = 0.0;

    BoundaryPoint() = default;
    explicit BoundaryPoint(double angle) : xi(wrap_angle(angle)) {}

    /// Endpoint x of the real line (or +-infinity) of the upper half-plane.
    static BoundaryPoint from_half_plane(double x) {
        if (!std::isfinite(x)) return BoundaryPoint(0.0);
        const cplx i(0.0, 1.0);
        return BoundaryPoint(std::arg((x - i) / (x + i)));
    }
    /// Inverse of from_half_plane; infinity for the angle 0.
    double to_half_plane() const {
        if (xi == 0.0) return INFINITY;
        return -1.0 / std::tan(0.5 * xi);
    }
    cplx on_disc() const { return std::polar(1.0, xi); }
};

/// Finite measure on the ideal circle: weighted atoms or a histogram.
class BoundaryMeasure {
public:
    struct Atom {
        BoundaryPoint xi;
        double weight = 0.0;
    };

    static BoundaryMeasure atoms(std::vector<Atom> atoms) {
        BoundaryMeasure m;
        for (const auto& a : atoms)
            if (!(a.weight >= 0.0)) throw DomainError("boundary measure: negative atom weight");
        m.atoms_ = std::move(atoms);
        return m;
    }
    /// Histogram on equal bins of [0, 2pi).
    static BoundaryMeasure histogram(std::vector<double> masses) {
        if (masses.empty()) throw ConfigError("boundary measure: histogram needs at least one bin");
        BoundaryMeasure m;
        for (double x : masses)
            if (!(x >= 0.0)) throw DomainError("boundary measure: negative bin mass");
        m.masses_ = std::move(masses);
        m.is_histogram_ = true;
        return m;
    }
    static BoundaryMeasure uniform(int bins, double total = 1.0) {
        return histogram(std::vector<double>(static_cast<std::size_t>(bins), total / bins));
    }
    static BoundaryMeasure dirac(BoundaryPoint xi, double weight = 1.0) { return atoms({{xi, weight}}); }

    bool is_histogram() const { return is_histogram_; }
    const std::vector<Atom>& atom_list() const { return atoms_; }
    const std::vector<double>& masses() const { return masses_; }
    int bins() const { return static_cast<int>(masses_.size()); }
    double bin_width() const { return two_pi / bins(); }
    double bin_left(int k) const { return k * bin_width(); }

    double total_mass() const {
        double s = 0.0;
        if (is_histogram_)
            for (double x : masses_) s += x;
        else
            for (const auto& a : atoms_) s += a.weight;
        return s;
    }

    BoundaryMeasure& normalize() {
        const double t = total_mass();
        if (!(t > 0.0)) throw DomainError("boundary measure: cannot normalize zero mass");
        for (auto& x : masses_) x /= t;
        for (auto& a : atoms_) a.weight /= t;
        return *this;
    }

    /// Integral of f: exact sum over atoms, midpoint rule on histograms.
    template <class F>
    double integrate(F&& f) const {
        double s = 0.0;
        if (is_histogram_) {
            for (int k = 0; k < bins(); ++k)
                if (masses_[k] != 0.0) s += masses_[k] * f(BoundaryPoint(bin_left(k) + 0.5 * bin_width()));
        } else {
            for (const auto& a : atoms_)
                if (a.weight != 0.0) s += a.weight * f(a.xi);
        }
        return s;
    }

private:
    std::vector<Atom> atoms_;
    std::vector<double> masses_;
    bool is_histogram_ = false;
};

/// Models whose chart is a global chart of a simply-connected surface.
template <class M>
concept BoundaryModel = SurfaceModel<M> && (std::is_same_v<M, UpperHalfPlane> || std::is_same_v<M, PoincareDisc> ||
                                            requires(const M& m) { m.profile(); });

struct BoundaryParams {
    double T = 20.0;
    FlowParams flow{1e-2, 16, 1e-9};
    ShootingParams shooting{};
    RiccatiParams riccati{{1e-2, 16, 1e-9}, 0.0, 10.0};
    double endpoint_tol = 1e-10;  // ray matching, in boundary angle
    int coarse_angles = 16;
    double diagnostic_tol = 1e-4;
};

/// A truncated limit and its Cauchy diagnostic |value(T) - value(T/2)|.
struct Truncated {
    double value = 0.0;
    double diagnostic = 0.0;
    bool converged(double tol) const { return diagnostic <= tol; }
};

namespace detail {

inline cplx disc_point(ChartPoint p) { return {p.x, p.y}; }

// Unit tangent vector of the half-plane carried to the disc by the Cayley map.
inline UnitTangentVector half_plane_to_disc(const UnitTangentVector& v) {
    const cplx i(0.0, 1.0), z(v.base.x, v.base.y);
    return {cayley(v.base), wrap_angle(v.theta + std::arg(2.0 * i / ((z + i) * (z + i))))};
}

inline BoundaryPoint disc_endpoint(const UnitTangentVector& v) {
    const cplx p = disc_point(v.base), e = std::polar(1.0, v.theta);
    return BoundaryPoint(std::arg((e + p) / (1.0 + std::conj(p) * e)));
}

}  // namespace detail

/// Forward endpoint of the geodesic ray of v. Exact on the constant-curvature
/// models; on rotational models the asymptotic polar angle after flowing for
/// time T (the angle converges like exp(-2 a T)).
template <BoundaryModel M>
BoundaryPoint ray_endpoint(const M& m, const UnitTangentVector& v, double T = 20.0,
                           const FlowParams& fp = {1e-2, 16, 1e-9}) {
    if (!m.admissible(v.base)) throw DomainError(std::string(M::name) + ": ray_endpoint outside the domain");
    if constexpr (std::is_same_v<M, PoincareDisc>) {
        return detail::disc_endpoint(v);
    } else if constexpr (std::is_same_v<M, UpperHalfPlane>) {
        return detail::disc_endpoint(detail::half_plane_to_disc(v));
    } else {
        return BoundaryPoint(flow(m, v, T, fp).base.y);
    }
}

namespace detail {

// Launch angle at z whose ray ends at xi, on a rotational model. The endpoint
// map is an increasing circle homeomorphism; bracket xi between consecutive
// scan angles and bisect.
template <WarpingProfile P>
double rotational_direction(const RotationalModel<P>& m, ChartPoint z, BoundaryPoint xi, const BoundaryParams& bp) {
    if (z.x == 0.0) return xi.xi;
    auto end = [&](double th) { return ray_endpoint(m, {z, th}, bp.T, bp.flow).xi; };
    const int n = std::max(bp.coarse_angles, 8);
    std::vector<double> e(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k < n; ++k) e[k] = end(two_pi * k / n);
    e[n] = e[0];
    double turn = 0.0;
    for (int k = 0; k < n; ++k) turn += wrap_angle(e[k + 1] - e[k]);
    if (std::abs(turn - two_pi) > 1e-6)
        throw ConvergenceError("Rotational: endpoint map is not monotone at this resolution", std::abs(turn - two_pi));
    for (int k = 0; k < n; ++k) {
        const double span = wrap_angle(e[k + 1] - e[k]);
        if (!(wrap_angle(xi.xi - e[k]) < span)) continue;
        double lo = two_pi * k / n, hi = two_pi * (k + 1) / n, e_lo = e[k];
        if (std::abs(angle_diff(e_lo, xi.xi)) < bp.endpoint_tol) return wrap_angle(lo);
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid == lo || mid == hi) break;
            const double em = end(mid);
            if (std::abs(angle_diff(em, xi.xi)) < bp.endpoint_tol) return wrap_angle(mid);
            if (wrap_angle(xi.xi - e_lo) < wrap_angle(em - e_lo)) {
                hi = mid;
            } else {
                lo = mid;
                e_lo = em;
            }
        }
        const double miss = std::abs(angle_diff(end(0.5 * (lo + hi)), xi.xi));
        if (miss < 1e3 * bp.endpoint_tol) return wrap_angle(0.5 * (lo + hi));
        throw ConvergenceError("Rotational: ray matching did not reach the boundary point", miss);
    }
    throw ConvergenceError("Rotational: boundary point not bracketed by the endpoint scan", INFINITY);
}

}  // namespace detail

/// Direction angle at z of the ray whose forward endpoint is xi.
template <BoundaryModel M>
double direction_towards(const M& m, ChartPoint z, BoundaryPoint xi, const BoundaryParams& bp = {}) {
    if (!m.admissible(z)) throw DomainError(std::string(M::name) + ": direction_towards outside the domain");
    if constexpr (std::is_same_v<M, PoincareDisc>) {
        const cplx p = detail::disc_point(z), e = xi.on_disc();
        return wrap_angle(std::arg((e - p) / (1.0 - std::conj(p) * e)));
    } else if constexpr (std::is_same_v<M, UpperHalfPlane>) {
        const cplx i(0.0, 1.0), w(z.x, z.y);
        const double in_disc = direction_towards(PoincareDisc{}, detail::cayley(z), xi, bp);
        return wrap_angle(in_disc - std::arg(2.0 * i / ((w + i) * (w + i))));
    } else {
        return detail::rotational_direction(m, z, xi, bp);
    }
}

/// v_{xi,z}: the unit vector at z whose backward ray tends to xi.
template <BoundaryModel M>
UnitTangentVector vector_from(const M& m, BoundaryPoint xi, ChartPoint z, const BoundaryParams& bp = {}) {
    return flip(UnitTangentVector{z, direction_towards(m, z, xi, bp)});
}

/// Base point at time t along the geodesic of v (closed form on the disc,
/// where flowing toward the ideal circle loses relative precision).
template <BoundaryModel M>
ChartPoint ray_point(const M& m, const UnitTangentVector& v, double t, const FlowParams& fp) {
    if constexpr (std::is_same_v<M, PoincareDisc>) {
        const cplx p = detail::disc_point(v.base), w = std::tanh(0.5 * t) * std::polar(1.0, v.theta);
        const cplx c = (w + p) / (1.0 + std::conj(p) * w);
        return {c.real(), c.imag()};
    } else {
        return flow(m, v, t, fp).base;
    }
}

/// beta_xi(y, z) truncated at T: dist(c(T), z) - T for the ray c from y to xi.
template <BoundaryModel M>
Truncated busemann(const M& m, BoundaryPoint xi, ChartPoint y, ChartPoint z, const BoundaryParams& bp = {}) {
    if (!m.admissible(y) || !m.admissible(z)) throw DomainError(std::string(M::name) + ": busemann outside the domain");
    if (y == z) return {0.0, 0.0};
    const UnitTangentVector ray{y, direction_towards(m, y, xi, bp)};
    const double T = bp.T;
    const double full = distance(m, ray_point(m, ray, T, bp.flow), z, bp.shooting) - T;
    const double half = distance(m, ray_point(m, ray, 0.5 * T, bp.flow), z, bp.shooting) - 0.5 * T;
    return {full, std::abs(full - half)};
}

namespace detail {

// Integral of phi^u along the directed segment of length len ending with w.
template <BoundaryModel M>
double phi_integral_into(const M& m, const UnitTangentVector& w, double len, const BoundaryParams& bp) {
    if (len <= 0.0) return 0.0;
    return unstable_trace(m, w, -len, 0.0, bp.riccati).phi_integral;
}

template <BoundaryModel M>
double log_kernel_potential(const M& m, ChartPoint z, const UnitTangentVector& ray, double t,
                            const BoundaryParams& bp) {
    const ChartPoint c = ray_point(m, ray, t, bp.flow);
    double theta, len;
    if constexpr (std::is_same_v<M, PoincareDisc> || std::is_same_v<M, UpperHalfPlane>) {
        theta = direction_to(m, z, c);
        len = distance(m, z, c);
    } else {
        const Shot s = shoot(m, z, c, bp.shooting);
        theta = s.theta;
        len = s.length;
    }
    const double into_z = phi_integral_into(m, flip(UnitTangentVector{z, theta}), len, bp);
    const double into_o = phi_integral_into(m, flip(ray), t, bp);
    return into_z - into_o;
}

template <BoundaryModel M>
double log_kernel_jacobian(const M& m, const UnitTangentVector& vz, const UnitTangentVector& vo, double beta, double t,
                           const BoundaryParams& bp) {
    return log_unstable_jacobian(m, vz, -(t + beta), bp.riccati) - log_unstable_jacobian(m, vo, -t, bp.riccati);
}

}  // namespace detail

/// k^u(o, z; xi) from potential integrals: phi^u integrated along the
/// directed geodesics from c(T) to z and from c(T) to o, c being the ray from
/// o to xi.
template <BoundaryModel M>
Truncated gibbs_kernel_potential_form(const M& m, ChartPoint o, ChartPoint z, BoundaryPoint xi,
                                      const BoundaryParams& bp = {}) {
    if (!m.admissible(o) || !m.admissible(z)) throw DomainError(std::string(M::name) + ": kernel outside the domain");
    if (o == z) return {1.0, 0.0};
    const UnitTangentVector ray{o, direction_towards(m, o, xi, bp)};
    const double full = std::exp(detail::log_kernel_potential(m, z, ray, bp.T, bp));
    const double half = std::exp(detail::log_kernel_potential(m, z, ray, 0.5 * bp.T, bp));
    return {full, std::abs(full - half)};
}

/// k^u(o, z; xi) as the ratio J^u G_{-T-beta}(v_{xi,z}) / J^u G_{-T}(v_{xi,o}).
template <BoundaryModel M>
Truncated gibbs_kernel_jacobian_form(const M& m, ChartPoint o, ChartPoint z, BoundaryPoint xi,
                                     const BoundaryParams& bp = {}) {
    if (!m.admissible(o) || !m.admissible(z)) throw DomainError(std::string(M::name) + ": kernel outside the domain");
    if (o == z) return {1.0, 0.0};
    const auto vz = vector_from(m, xi, z, bp), vo = vector_from(m, xi, o, bp);
    const double beta = busemann(m, xi, o, z, bp).value;
    const double full = std::exp(detail::log_kernel_jacobian(m, vz, vo, beta, bp.T, bp));
    const double half = std::exp(detail::log_kernel_jacobian(m, vz, vo, beta, 0.5 * bp.T, bp));
    return {full, std::abs(full - half)};
}

/// Histogram of the endpoints of n equally spaced directions at z.
template <BoundaryModel M>
BoundaryMeasure visibility_measure(const M& m, ChartPoint z, int n, int bins = 64, const BoundaryParams& bp = {},
                                   int workers = 1) {
    if (n < 1 || bins < 1) throw ConfigError("visibility_measure: need n >= 1 and bins >= 1");
    const auto ends = parallel_map(static_cast<std::size_t>(n), workers, [&](std::size_t k) {
        return ray_endpoint(m, {z, two_pi * (static_cast<double>(k) + 0.5) / n}, bp.T, bp.flow).xi;
    });
    std::vector<double> masses(static_cast<std::size_t>(bins), 0.0);
    for (double e : ends) masses[std::min(bins - 1, static_cast<int>(e / two_pi * bins))] += 1.0 / n;
    return BoundaryMeasure::histogram(std::move(masses));
}

// Isometries acting on points and on the ideal circle.

inline ChartPoint apply(const DiscIsometry& g, ChartPoint p) {
    const cplx w = g(detail::disc_point(p));
    return {w.real(), w.imag()};
}

inline BoundaryPoint apply(const DiscIsometry& g, BoundaryPoint xi) { return BoundaryPoint(std::arg(g(xi.on_disc()))); }

/// Real Moebius map z -> (a z + b)/(c z + d) on the upper half-plane.
inline ChartPoint apply(const Mat2& g, ChartPoint p) {
    const cplx z(p.x, p.y), w = (g.a * z + g.b) / (g.c * z + g.d);
    return {w.real(), w.imag()};
}

inline BoundaryPoint apply(const Mat2& g, BoundaryPoint xi) { return apply(DiscIsometry::from_real(g), xi); }

// MetricModel dispatch; the tabulated-grid model has no global boundary chart.

namespace detail {

template <class F>
auto visit_boundary(const MetricModel& m, const char* op, F&& f) {
    return std::visit(
        [&](const auto& x) -> decltype(f(std::declval<const PoincareDisc&>())) {
            using X = std::decay_t<decltype(x)>;
            if constexpr (BoundaryModel<X>) return f(x);
            else throw DomainError(std::string(X::name) + ": " + op + " needs a simply-connected global chart");
        },
        m);
}

}  // namespace detail

inline BoundaryPoint ray_endpoint(const MetricModel& m, const UnitTangentVector& v, double T = 20.0,
                                  const FlowParams& fp = {1e-2, 16, 1e-9}) {
    return detail::visit_boundary(m, "ray_endpoint", [&](const auto& x) { return ray_endpoint(x, v, T, fp); });
}

inline Truncated busemann(const MetricModel& m, BoundaryPoint xi, ChartPoint y, ChartPoint z,
                          const BoundaryParams& bp = {}) {
    return detail::visit_boundary(m, "busemann", [&](const auto& x) { return busemann(x, xi, y, z, bp); });
}

inline Truncated gibbs_kernel_potential_form(const MetricModel& m, ChartPoint o, ChartPoint z, BoundaryPoint xi,
                                             const BoundaryParams& bp = {}) {
    return detail::visit_boundary(m, "gibbs kernel",
                                  [&](const auto& x) { return gibbs_kernel_potential_form(x, o, z, xi, bp); });
}

inline Truncated gibbs_kernel_jacobian_form(const MetricModel& m, ChartPoint o, ChartPoint z, BoundaryPoint xi,
                                            const BoundaryParams& bp = {}) {
    return detail::visit_boundary(m, "gibbs kernel",
                                  [&](const auto& x) { return gibbs_kernel_jacobian_form(x, o, z, xi, bp); });
}

inline BoundaryMeasure visibility_measure(const MetricModel& m, ChartPoint z, int n, int bins = 64,
                                          const BoundaryParams& bp = {}, int workers = 1) {
    return detail::visit_boundary(m, "visibility_measure",
                                  [&](const auto& x) { return visibility_measure(x, z, n, bins, bp, workers); });
}

struct KernelRow {
    ChartPoint o, z;
    BoundaryPoint xi;
    double k_potential = 0.0, k_jacobian = 0.0, diagnostic = 0.0;
};

inline void write_kernel_csv(std::ostream& os, const std::vector<KernelRow>& rows) {
    os << "o_x,o_y,z_x,z_y,xi,k_potential,k_jacobian,diagnostic\n" << std::setprecision(15);
    for (const auto& r : rows)
        os << r.o.x << ',' << r.o.y << ',' << r.z.x << ',' << r.z.y << ',' << r.xi.xi << ',' << r.k_potential << ','
           << r.k_jacobian << ',' << r.diagnostic << '\n';
}

}  // namespace leafgibbs
