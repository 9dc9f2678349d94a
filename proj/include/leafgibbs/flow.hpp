#pragma once

#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "core.hpp"
#include "geometry.hpp"
#include "integrator.hpp"

namespace leafgibbs {

struct TrajectorySample {
    double t = 0.0;
    UnitTangentVector v;
    std::vector<int> word;  // deck word accumulated so far (quotient flows only)
};

/// Advances v by dt with the fourth-order integrator, in equal substeps no
/// longer than params.dt.
template <SurfaceModel M>
UnitTangentVector geodesic_step(const M& m, const UnitTangentVector& v, double dt, const FlowParams& params = {}) {
    if (dt == 0.0) return v;
    Orbit<M> orbit(m, v, params);
    orbit.advance(dt);
    return orbit.vector();
}

inline UnitTangentVector geodesic_step(const MetricModel& m, const UnitTangentVector& v, double dt,
                                       const FlowParams& params = {}) {
    return std::visit([&](const auto& x) { return geodesic_step(x, v, dt, params); }, m);
}

/// The geodesic flow G_t(v); optionally records the orbit every sample_every steps.
template <SurfaceModel M>
UnitTangentVector flow(const M& m, const UnitTangentVector& v, double t, const FlowParams& params,
                       std::vector<TrajectorySample>* trajectory = nullptr, int sample_every = 1) {
    if (t == 0.0) {
        if (trajectory) trajectory->push_back({0.0, v, {}});
        return v;
    }
    Orbit<M> orbit(m, v, params);
    if (trajectory) trajectory->push_back({0.0, orbit.vector(), {}});
    orbit.advance(
        t, [](Chart, const double*, const double*, double*) {},
        [&](Orbit<M>& o) {
            if (trajectory && o.steps() % sample_every == 0) trajectory->push_back({o.time(), o.vector(), {}});
        });
    return orbit.vector();
}

inline UnitTangentVector flow(const MetricModel& m, const UnitTangentVector& v, double t, const FlowParams& params,
                              std::vector<TrajectorySample>* trajectory = nullptr, int sample_every = 1) {
    return std::visit([&](const auto& x) { return flow(x, v, t, params, trajectory, sample_every); }, m);
}

/// First-order Sasaki distance proxy: sqrt(|base offset|^2 + defect^2), the
/// defect being the angle between w and the parallel transport of v along the
/// short chart segment. Valid only at small scales.
template <SurfaceModel M>
double sasaki_proximity(const M& m, const UnitTangentVector& v, const UnitTangentVector& w, double max_scale = 0.5) {
    double dx, dy, g11, g12, g22, rotation;
    if constexpr (requires { m.lambda(0.0, 0.0); }) {
        const double mx = 0.5 * (v.base.x + w.base.x), my = 0.5 * (v.base.y + w.base.y);
        const auto j = m.lambda(mx, my);
        dx = w.base.x - v.base.x;
        dy = w.base.y - v.base.y;
        g11 = g22 = std::exp(2.0 * j.l);
        g12 = 0.0;
        rotation = j.ly * dx - j.lx * dy;
    } else {
        const double rm = 0.5 * (v.base.x + w.base.x);
        const auto j = m.profile().jet(rm);
        dx = w.base.x - v.base.x;
        dy = angle_diff(w.base.y, v.base.y);
        g11 = 1.0;
        g12 = 0.0;
        g22 = j.f * j.f;
        rotation = -j.f1 * dy;
    }
    const double base2 = g11 * dx * dx + 2.0 * g12 * dx * dy + g22 * dy * dy;
    if (!(std::sqrt(base2) <= max_scale))
        throw ScaleError("sasaki_proximity: vectors farther apart than the proxy scale");
    const double defect = angle_diff(w.theta, v.theta + rotation);
    return std::sqrt(base2 + defect * defect);
}

inline double sasaki_proximity(const MetricModel& m, const UnitTangentVector& v, const UnitTangentVector& w,
                               double max_scale = 0.5) {
    return std::visit([&](const auto& x) { return sasaki_proximity(x, v, w, max_scale); }, m);
}

/// CSV rows (t, x, y, theta, word_so_far) preceded by a comment header.
inline void write_trajectory_csv(std::ostream& os, const std::string& model, const FlowParams& p,
                                 const std::vector<TrajectorySample>& samples) {
    os << "# model=" << model << " dt=" << p.dt << " renormalize_every=" << p.renormalize_every << '\n';
    os << "t,x,y,theta,word_so_far\n";
    os << std::setprecision(12);
    for (const auto& s : samples) {
        os << s.t << ',' << s.v.base.x << ',' << s.v.base.y << ',' << s.v.theta << ',';
        for (std::size_t i = 0; i < s.word.size(); ++i) os << (i ? " " : "") << s.word[i];
        os << '\n';
    }
}

}  // namespace leafgibbs
