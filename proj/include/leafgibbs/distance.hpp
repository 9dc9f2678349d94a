#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <variant>

#include "core.hpp"
#include "geometry.hpp"
#include "flow.hpp"
#include "integrator.hpp"

namespace leafgibbs {

struct ShootingParams {
    FlowParams flow{1e-2, 16, 1e-9};
    int max_iterations = 60;
    double residual_tol = 1e-8;
    int coarse_angles = 16;
};

/// Result of a two-point shot p -> q: launch angle at p, arc length and the
/// metric size of the miss at the closest approach.
struct Shot {
    double theta = 0.0;
    double length = 0.0;
    double residual = 0.0;
};

namespace detail {

struct Approach {
    double time = 0.0;
    double miss = 0.0;  // signed: positive when q lies to the left of the orbit
    bool interior = false;
};

template <SurfaceModel M>
double metric_dot(const M& m, const PhaseState& s, const std::array<double, 2>& a, const std::array<double, 2>& b) {
    const auto g = m.state_metric(s);
    return g.g11 * a[0] * b[0] + g.g12 * (a[0] * b[1] + a[1] * b[0]) + g.g22 * a[1] * b[1];
}

template <SurfaceModel M>
double approach_rate(const M& m, const PhaseState& s, ChartPoint q) {
    const auto d = m.local_offset(s, q);
    return metric_dot(m, s, {s.y[2], s.y[3]}, d);
}

template <SurfaceModel M>
Approach measure_miss(const M& m, const PhaseState& s, ChartPoint q, double t, bool interior) {
    const auto d = m.local_offset(s, q);
    const auto g = m.state_metric(s);
    const double side = std::sqrt(g.g11 * g.g22 - g.g12 * g.g12) * (s.y[2] * d[1] - s.y[3] * d[0]);
    const double size = std::sqrt(std::max(0.0, metric_dot(m, s, d, d)));
    return {t, side >= 0.0 ? size : -size, interior};
}

/// Follows the geodesic from v until it stops approaching q (or max_len).
template <SurfaceModel M>
Approach closest_approach(const M& m, const UnitTangentVector& v, ChartPoint q, double max_len, const FlowParams& fp) {
    Orbit<M> orbit(m, v, fp);
    if (approach_rate(m, orbit.state(), q) <= 0.0) return measure_miss(m, orbit.state(), q, 0.0, false);
    const long n = step_count(max_len, fp.dt);
    const double h = max_len / static_cast<double>(n);
    for (long i = 0; i < n; ++i) {
        Orbit<M> before = orbit;
        try {
            orbit.step(h);
        } catch (const ExcursionError&) {
            return measure_miss(m, before.state(), q, before.time(), false);
        }
        if (approach_rate(m, orbit.state(), q) > 0.0) continue;
        // Sign change inside the step: bisect the sub-step length.
        double lo = 0.0, hi = h;
        for (int k = 0; k < 50; ++k) {
            const double mid = 0.5 * (lo + hi);
            Orbit<M> probe = before;
            probe.step(mid);
            (approach_rate(m, probe.state(), q) > 0.0 ? lo : hi) = mid;
        }
        Orbit<M> best = before;
        const double sub = 0.5 * (lo + hi);
        if (sub > 0.0) best.step(sub);
        return measure_miss(m, best.state(), q, before.time() + sub, true);
    }
    return measure_miss(m, orbit.state(), q, orbit.time(), false);
}

template <SurfaceModel M>
double length_bound(const M& m, ChartPoint p, ChartPoint q) {
    if constexpr (requires { m.lambda(0.0, 0.0); }) {
        constexpr int k = 64;
        double len = 0.0;
        for (int i = 0; i < k; ++i) {
            const double s = (i + 0.5) / k;
            len += std::exp(m.lambda(p.x + s * (q.x - p.x), p.y + s * (q.y - p.y)).l);
        }
        return 1.1 * len * std::hypot(q.x - p.x, q.y - p.y) / k + 1.0;
    } else {
        return p.x + q.x + 1.0;
    }
}

inline ChartPoint cayley(ChartPoint z) {
    const std::complex<double> w(z.x, z.y), i(0.0, 1.0);
    const auto c = (w - i) / (w + i);
    return {c.real(), c.imag()};
}

}  // namespace detail

namespace detail {

struct Crossing {
    double time = 0.0;
    double phi = 0.0;
};

// First outward crossing of the circle r = rq by the geodesic from v
// (v.base.x <= rq). Distance to the pole is convex along geodesics, so the
// crossing exists and is unique.
template <WarpingProfile P>
Crossing circle_crossing(const RotationalModel<P>& m, const UnitTangentVector& v, double rq, const FlowParams& fp) {
    using M = RotationalModel<P>;
    if (v.base.x >= rq && std::cos(v.theta) >= 0.0) return {0.0, v.base.y};
    Orbit<M> orbit(m, v, fp);
    const double max_len = v.base.x + rq + 1.0;
    const long n = step_count(max_len, fp.dt);
    const double h = max_len / static_cast<double>(n);
    for (long i = 0; i < n; ++i) {
        Orbit<M> before = orbit;
        orbit.step(h);
        if (m.project(orbit.state()).base.x < rq) continue;
        double lo = 0.0, hi = h;
        for (int k = 0; k < 50; ++k) {
            const double mid = 0.5 * (lo + hi);
            Orbit<M> probe = before;
            probe.step(mid);
            (m.project(probe.state()).base.x < rq ? lo : hi) = mid;
        }
        const double sub = 0.5 * (lo + hi);
        Orbit<M> at = before;
        if (sub > 0.0) at.step(sub);
        return {before.time() + sub, m.project(at.state()).base.y};
    }
    throw ConvergenceError(std::string(M::name) + ": geodesic never reached the target circle", INFINITY);
}

// Shooting on a rotational model from the inner point p (p.x <= q.x):
// bisection on the launch angle for the crossing angle of the circle r = q.x.
template <WarpingProfile P>
Shot shoot_rotational(const RotationalModel<P>& m, ChartPoint p, ChartPoint q, const ShootingParams& sp) {
    const double fq = m.profile().jet(q.x).f;
    if (p.x == 0.0) return {wrap_angle(q.y - p.y), q.x, 0.0};
    auto miss = [&](double th) {
        const auto c = circle_crossing(m, {p, th}, q.x, sp.flow);
        return std::pair{angle_diff(c.phi, q.y), c.time};
    };
    const int n = std::max(sp.coarse_angles, 8);
    std::vector<std::pair<double, double>> scan;
    for (int k = 0; k <= n; ++k) scan.push_back(miss(two_pi * k / n));
    for (int k = 0; k < n; ++k) {
        const double d0 = scan[k].first, d1 = scan[k + 1].first;
        if (d0 == 0.0) return {wrap_angle(two_pi * k / n), scan[k].second, 0.0};
        if ((d0 > 0.0) == (d1 > 0.0) || std::abs(d1 - d0) >= pi) continue;
        double lo = two_pi * k / n, hi = two_pi * (k + 1) / n, dlo = d0;
        Shot best{lo, scan[k].second, fq * std::abs(d0)};
        for (int it = 0; it < sp.max_iterations && best.residual >= sp.residual_tol; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid == lo || mid == hi) break;
            const auto [d, t] = miss(mid);
            if (fq * std::abs(d) < best.residual) best = {mid, t, fq * std::abs(d)};
            if ((d > 0.0) == (dlo > 0.0)) {
                lo = mid;
                dlo = d;
            } else {
                hi = mid;
            }
        }
        if (best.residual >= sp.residual_tol && best.residual * best.residual >= sp.residual_tol)
            throw ConvergenceError("Rotational: shooting did not converge", best.residual);
        best.theta = wrap_angle(best.theta);
        return best;
    }
    throw ConvergenceError("Rotational: shooting could not bracket the target", INFINITY);
}

}  // namespace detail

/// Two-point shooting: bisection on the launch angle at p until the orbit
/// passes through q. Throws ConvergenceError with the best residual.
template <SurfaceModel M>
Shot shoot(const M& m, ChartPoint p, ChartPoint q, const ShootingParams& sp = {}) {
    if constexpr (requires { m.profile(); }) {
        if (p.x <= q.x) return detail::shoot_rotational(m, p, q, sp);
        // Shoot from the inner point and reverse the arriving direction.
        const Shot s = detail::shoot_rotational(m, q, p, sp);
        const auto arrive = flow(m, {q, s.theta}, s.length, sp.flow);
        return {wrap_angle(arrive.theta + pi), s.length, s.residual};
    }
    const double max_len = detail::length_bound(m, p, q);
    auto probe = [&](double th) { return detail::closest_approach(m, {p, th}, q, max_len, sp.flow); };

    const int n = sp.coarse_angles;
    std::vector<detail::Approach> scan(static_cast<std::size_t>(n));
    int best = -1;
    for (int k = 0; k < n; ++k) {
        scan[k] = probe(two_pi * k / n);
        if (scan[k].interior && (best < 0 || std::abs(scan[k].miss) < std::abs(scan[best].miss))) best = k;
    }
    if (best < 0) throw ConvergenceError(std::string(M::name) + ": shooting found no approaching direction", INFINITY);

    double lo = two_pi * best / n, hi = lo;
    double miss_lo = scan[best].miss;
    bool bracketed = false;
    for (int side : {-1, 1}) {
        const int k = (best + side + n) % n;
        if (scan[k].interior && (scan[k].miss > 0.0) != (miss_lo > 0.0)) {
            hi = lo + side * two_pi / n;
            bracketed = true;
            break;
        }
    }
    if (!bracketed) throw ConvergenceError(std::string(M::name) + ": shooting could not bracket the target",
                                           std::abs(miss_lo));

    Shot shot{lo, scan[best].time, std::abs(miss_lo)};
    for (int it = 0; it < sp.max_iterations; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const auto a = probe(mid);
        if (a.interior && std::abs(a.miss) < shot.residual) shot = {mid, a.time, std::abs(a.miss)};
        if (shot.residual < sp.residual_tol) break;
        if (!a.interior || (a.miss > 0.0) == (miss_lo > 0.0)) {
            lo = mid;
            miss_lo = a.miss;
        } else {
            hi = mid;
        }
    }
    // At long range the angle resolution limits the miss; the length error is
    // second order in the miss, so accept when that is within tolerance.
    if (shot.residual >= sp.residual_tol && shot.residual * shot.residual >= sp.residual_tol)
        throw ConvergenceError(std::string(M::name) + ": shooting did not converge", shot.residual);
    shot.theta = wrap_angle(shot.theta);
    return shot;
}

/// Geodesic distance. Closed form on the constant-curvature models,
/// shooting otherwise (launched from the point nearer the pole on rotational
/// models, where the shot is best conditioned).
template <SurfaceModel M>
double distance(const M& m, ChartPoint p, ChartPoint q, const ShootingParams& sp = {}) {
    if (!m.admissible(p) || !m.admissible(q)) throw DomainError(std::string(M::name) + ": distance outside domain");
    if constexpr (std::is_same_v<M, UpperHalfPlane>) {
        const double num = (p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y);
        return 2.0 * std::asinh(0.5 * std::sqrt(num / (p.y * q.y)));
    } else if constexpr (std::is_same_v<M, PoincareDisc>) {
        const double da = (1.0 - std::hypot(p.x, p.y)) * (1.0 + std::hypot(p.x, p.y));
        const double db = (1.0 - std::hypot(q.x, q.y)) * (1.0 + std::hypot(q.x, q.y));
        return 2.0 * std::asinh(std::hypot(p.x - q.x, p.y - q.y) / std::sqrt(da * db));
    } else {
        if (p == q) return 0.0;
        if constexpr (requires { m.profile(); }) {
            if (p.x == q.x && angle_diff(p.y, q.y) == 0.0) return 0.0;
        }
        return shoot(m, p, q, sp).length;
    }
}

inline double distance(const MetricModel& m, ChartPoint p, ChartPoint q, const ShootingParams& sp = {}) {
    return std::visit([&](const auto& x) { return distance(x, p, q, sp); }, m);
}

/// Direction angle at p of the geodesic towards q.
template <SurfaceModel M>
double direction_to(const M& m, ChartPoint p, ChartPoint q, const ShootingParams& sp = {}) {
    if constexpr (std::is_same_v<M, PoincareDisc>) {
        const std::complex<double> a(p.x, p.y), b(q.x, q.y);
        return wrap_angle(std::arg((b - a) / (1.0 - std::conj(a) * b)));
    } else if constexpr (std::is_same_v<M, UpperHalfPlane>) {
        const std::complex<double> i(0.0, 1.0), w(p.x, p.y);
        const double in_disc = direction_to(PoincareDisc{}, detail::cayley(p), detail::cayley(q));
        return wrap_angle(in_disc - std::arg(2.0 * i / ((w + i) * (w + i))));
    } else {
        return shoot(m, p, q, sp).theta;
    }
}

}  // namespace leafgibbs
