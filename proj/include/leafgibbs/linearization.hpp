#pragma once

#include <cmath>
#include <ostream>
#include <iomanip>
#include <optional>
#include <variant>
#include <vector>

#include "core.hpp"
#include "flow.hpp"
#include "geometry.hpp"
#include "integrator.hpp"

namespace leafgibbs {

/// Riccati slope u along an orbit and the accumulated log-Jacobian int u dt.
struct RiccatiState {
    double u = 0.0;
    double logJ = 0.0;
};

struct RiccatiParams {
    FlowParams flow{1e-3, 16, 1e-9};
    double burn_in = 0.0;  // 0 selects 20 / a
    double u_max_factor = 10.0;
};

struct RiccatiSample {
    double t = 0.0;
    double u = 0.0;
    double logJ = 0.0;
};

/// Stable and unstable slopes at a vector (E^s, E^u in Jacobi coordinates).
struct TangentSplitting {
    double U = 1.0;
    double S = -1.0;
};

template <SurfaceModel M>
double burn_in_time(const M& m, const RiccatiParams& rp) {
    return rp.burn_in > 0.0 ? rp.burn_in : 20.0 / m.bounds().a;
}

namespace detail {

template <class M>
concept ConstantCurvature = requires { M::constant_curvature; };

// Potential rate of the Sasaki unstable Jacobian for slope u and curvature k.
inline double phi_rate(double u, double k) { return -u - u * (-k - u * u) / (1.0 + u * u); }

struct SlopeRun {
    RiccatiState state;
    double phi_integral = 0.0;  // int phi^u dt, same orientation as logJ
    double first = 0.0;         // u when the recorded segment starts
    UnitTangentVector end;
};

/// Integrates u' = -K - u^2 along the orbit of G_pre v: first for time warm
/// (slope only), then for time t accumulating int u and int phi^u. Both spans
/// share one integrator state, so nearly radial headings far out keep their
/// precision. On constant-curvature models the base is only flowed for want_end.
template <SurfaceModel M>
SlopeRun integrate_slope(const M& m, const UnitTangentVector& v, double t, double u0, const RiccatiParams& rp,
                         bool want_end, std::vector<RiccatiSample>* trace = nullptr, int every = 1,
                         double pre = 0.0, double warm = 0.0) {
    const double u_max = rp.u_max_factor * m.bounds().b;
    SlopeRun run{{u0, 0.0}, 0.0, u0, v};
    auto check = [&](double time, double u) {
        if (!(std::abs(u) <= u_max)) throw BlowUpError(time, u);
    };
    if constexpr (ConstantCurvature<M>) {
        const double k = M::constant_curvature;
        double u = u0, lj = 0.0, ph = 0.0;
        auto rhs = [k](double x) { return -k - x * x; };
        auto segment = [&](double span, double t0, bool record) {
            if (span == 0.0) return;
            const long n = step_count(span, rp.flow.dt);
            const double h = span / static_cast<double>(n);
            for (long i = 0; i < n; ++i) {
                const double k1 = rhs(u), k2 = rhs(u + 0.5 * h * k1), k3 = rhs(u + 0.5 * h * k2),
                             k4 = rhs(u + h * k3);
                const double u1 = u + 0.5 * h * k1, u2 = u + 0.5 * h * k2, u3 = u + h * k3;
                lj += h / 6.0 * (u + 2.0 * u1 + 2.0 * u2 + u3);
                ph += h / 6.0 * (phi_rate(u, k) + 2.0 * phi_rate(u1, k) + 2.0 * phi_rate(u2, k) + phi_rate(u3, k));
                u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                check(t0 + (i + 1) * h, u);
                if (record && trace && (i + 1) % every == 0) trace->push_back({(i + 1) * h, u, lj});
            }
        };
        segment(warm, 0.0, false);
        run.first = u;
        lj = ph = 0.0;
        if (trace) trace->push_back({0.0, u, 0.0});
        segment(t, warm, true);
        run.state = {u, lj};
        run.phi_integral = ph;
        if (want_end) run.end = flow(m, v, pre + warm + t, rp.flow);
        return run;
    } else {
        Orbit<M, 3> orbit(m, v, rp.flow);
        orbit.advance(
            pre, [](Chart, const double*, const double*, double* de) { de[0] = de[1] = de[2] = 0.0; },
            [](Orbit<M, 3>&) {});
        const double t_pre = orbit.time();
        orbit.extras() = {u0, 0.0, 0.0};
        auto extra = [&m](Chart c, const double* y, const double* e, double* de) {
            const double k = m.state_curvature(c, y);
            de[0] = -k - e[0] * e[0];
            de[1] = e[0];
            de[2] = phi_rate(e[0], k);
        };
        auto segment = [&](double span, bool record) {
            if (span == 0.0) return;
            const double t_start = orbit.time();
            const long n = step_count(span, rp.flow.dt);
            const double h = span / static_cast<double>(n);
            for (long i = 0; i < n; ++i) {
                orbit.step(h, extra);
                check(orbit.time() - t_pre, orbit.extras()[0]);
                if (record && trace && (i + 1) % every == 0)
                    trace->push_back({orbit.time() - t_start, orbit.extras()[0], orbit.extras()[1]});
            }
        };
        segment(warm, false);
        run.first = orbit.extras()[0];
        orbit.extras()[1] = orbit.extras()[2] = 0.0;
        if (trace) trace->push_back({0.0, run.first, 0.0});
        segment(t, true);
        run.state = {orbit.extras()[0], orbit.extras()[1]};
        run.phi_integral = orbit.extras()[2];
        run.end = orbit.vector();
        return run;
    }
}

}  // namespace detail

/// Integrates the Riccati equation u' = -K(c(t)) - u^2 along the geodesic
/// through v for time t (backward when t < 0), accumulating logJ = int u.
template <SurfaceModel M>
RiccatiState riccati_flow(const M& m, const UnitTangentVector& v, double t, double u0,
                          const RiccatiParams& rp = {}) {
    if (!std::isfinite(u0)) throw DomainError("riccati_flow: non-finite seed");
    return detail::integrate_slope(m, v, t, u0, rp, false).state;
}

/// (t, u, logJ) samples of a Riccati run, every `every` steps.
template <SurfaceModel M>
std::vector<RiccatiSample> riccati_trace(const M& m, const UnitTangentVector& v, double t, double u0,
                                         const RiccatiParams& rp = {}, int every = 1) {
    std::vector<RiccatiSample> out;
    detail::integrate_slope(m, v, t, u0, rp, false, &out, every);
    return out;
}

inline void write_riccati_csv(std::ostream& os, const std::vector<RiccatiSample>& samples) {
    os << "t,u,logJ\n" << std::setprecision(15);
    for (const auto& s : samples) os << s.t << ',' << s.u << ',' << s.logJ << '\n';
}

/// Unstable slope U(v): pull back by burn_in, seed u0 (default a), flow forward.
template <SurfaceModel M>
double unstable_slope(const M& m, const UnitTangentVector& v, const RiccatiParams& rp = {},
                      std::optional<double> seed = std::nullopt) {
    const double b = burn_in_time(m, rp);
    if (!(b > 0.0)) throw ConfigError("unstable_slope: burn_in must be positive");
    return detail::integrate_slope(m, v, b, seed.value_or(m.bounds().a), rp, false, nullptr, 1, -b).state.u;
}

/// Stable slope S(v): push forward by burn_in, seed u0 (default -a), flow backward.
template <SurfaceModel M>
double stable_slope(const M& m, const UnitTangentVector& v, const RiccatiParams& rp = {},
                    std::optional<double> seed = std::nullopt) {
    const double b = burn_in_time(m, rp);
    if (!(b > 0.0)) throw ConfigError("stable_slope: burn_in must be positive");
    return detail::integrate_slope(m, v, -b, seed.value_or(-m.bounds().a), rp, false, nullptr, 1, b).state.u;
}

template <SurfaceModel M>
TangentSplitting splitting(const M& m, const UnitTangentVector& v, const RiccatiParams& rp = {}) {
    return {unstable_slope(m, v, rp), stable_slope(m, v, rp)};
}

/// Invariant slope along the orbit segment between times t0 <= t1.
struct SlopeTrace {
    double first = 0.0;     // slope at G_{t0} v
    double last = 0.0;      // slope at G_{t1} v
    double integral = 0.0;  // int_{t0}^{t1} slope
    double phi_integral = 0.0;  // int_{t0}^{t1} phi^u (unstable traces only)
};

/// U along G_t v for t in [t0, t1]; always integrated forward (the unstable
/// solution is attracting forward in time).
template <SurfaceModel M>
SlopeTrace unstable_trace(const M& m, const UnitTangentVector& v, double t0, double t1, const RiccatiParams& rp = {}) {
    if (t1 < t0) throw DomainError("unstable_trace: t1 < t0");
    const double b = burn_in_time(m, rp);
    const auto run = detail::integrate_slope(m, v, t1 - t0, m.bounds().a, rp, false, nullptr, 1, t0 - b, b);
    return {run.first, run.state.u, run.state.logJ, run.phi_integral};
}

/// S along G_t v for t in [t0, t1]; always integrated backward.
template <SurfaceModel M>
SlopeTrace stable_trace(const M& m, const UnitTangentVector& v, double t0, double t1, const RiccatiParams& rp = {}) {
    if (t1 < t0) throw DomainError("stable_trace: t1 < t0");
    const double b = burn_in_time(m, rp);
    const auto run = detail::integrate_slope(m, v, -(t1 - t0), -m.bounds().a, rp, false, nullptr, 1, t1 + b, -b);
    return {run.state.u, run.first, -run.state.logJ, 0.0};
}

namespace detail {

// log of the Sasaki-norm Jacobian of DG_t on the line of slope u.
inline double log_line_jacobian(double integral, double u_from, double u_to) {
    return integral + 0.5 * std::log1p(u_to * u_to) - 0.5 * std::log1p(u_from * u_from);
}

}  // namespace detail

/// log J^u G_t(v): expansion of DG_t on E^u in the Sasaki norm, either sign of t.
template <SurfaceModel M>
double log_unstable_jacobian(const M& m, const UnitTangentVector& v, double t, const RiccatiParams& rp = {}) {
    if (t == 0.0) return 0.0;
    if (t > 0.0) {
        const auto tr = unstable_trace(m, v, 0.0, t, rp);
        return detail::log_line_jacobian(tr.integral, tr.first, tr.last);
    }
    const auto tr = unstable_trace(m, v, t, 0.0, rp);
    return detail::log_line_jacobian(-tr.integral, tr.last, tr.first);
}

template <SurfaceModel M>
double unstable_jacobian(const M& m, const UnitTangentVector& v, double t, const RiccatiParams& rp = {}) {
    return std::exp(log_unstable_jacobian(m, v, t, rp));
}

/// log J^cs G_t(v) (the flow direction contributes a factor 1).
template <SurfaceModel M>
double log_center_stable_jacobian(const M& m, const UnitTangentVector& v, double t, const RiccatiParams& rp = {}) {
    if (t == 0.0) return 0.0;
    if (t > 0.0) {
        const auto tr = stable_trace(m, v, 0.0, t, rp);
        return detail::log_line_jacobian(tr.integral, tr.first, tr.last);
    }
    const auto tr = stable_trace(m, v, t, 0.0, rp);
    return detail::log_line_jacobian(-tr.integral, tr.last, tr.first);
}

/// phi^u(v) = -d/dt log J^u G_t(v) at t = 0.
template <SurfaceModel M>
double potential_phi_u(const M& m, const UnitTangentVector& v, const RiccatiParams& rp = {}) {
    const double u = unstable_slope(m, v, rp);
    return detail::phi_rate(u, m.curvature(v.base));
}

/// Sine of the angle between E^u and E^cs.
inline double angle_alpha(const TangentSplitting& s) {
    if (s.U == s.S) throw DomainError("angle_alpha: degenerate splitting (U == S)");
    return std::abs(s.U - s.S) / std::sqrt((1.0 + s.U * s.U) * (1.0 + s.S * s.S));
}

/// Angle between the centre-unstable leaf and the unit tangent fibre.
inline double angle_theta(double U) { return 1.0 / std::sqrt(1.0 + U * U); }
inline double angle_theta(const TangentSplitting& s) { return angle_theta(s.U); }

/// |alpha(G_t v)/alpha(v) * J^u G_t(v) * J^cs G_t(v) - 1|.
template <SurfaceModel M>
double liouville_identity_residual(const M& m, const UnitTangentVector& v, double t, const RiccatiParams& rp = {}) {
    if (t == 0.0) return 0.0;
    const double t0 = std::min(0.0, t), t1 = std::max(0.0, t);
    const auto u = unstable_trace(m, v, t0, t1, rp);
    const auto s = stable_trace(m, v, t0, t1, rp);
    const bool fwd = t > 0.0;
    const TangentSplitting at_v{fwd ? u.first : u.last, fwd ? s.first : s.last};
    const TangentSplitting at_tv{fwd ? u.last : u.first, fwd ? s.last : s.first};
    const double sign = fwd ? 1.0 : -1.0;
    const double log_ju = detail::log_line_jacobian(sign * u.integral, at_v.U, at_tv.U);
    const double log_jcs = detail::log_line_jacobian(sign * s.integral, at_v.S, at_tv.S);
    const double log_alpha = std::log(angle_alpha(at_tv)) - std::log(angle_alpha(at_v));
    return std::abs(std::expm1(log_alpha + log_ju + log_jcs));
}

/// log of J^u G_{-T}(v) / J^u G_{-T}(w), the distortion ratio on an unstable leaf.
template <SurfaceModel M>
double log_distortion_ratio(const M& m, const UnitTangentVector& v, const UnitTangentVector& w, double T,
                            const RiccatiParams& rp = {}) {
    return log_unstable_jacobian(m, v, -T, rp) - log_unstable_jacobian(m, w, -T, rp);
}

}  // namespace leafgibbs
