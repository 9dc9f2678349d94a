#pragma once

#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <variant>

#include "core.hpp"
#include "grid.hpp"
#include "profile.hpp"

namespace leafgibbs {

/// Declared pinching -b^2 <= K <= -a^2 < 0.
struct CurvatureBounds {
    double a = 1.0;
    double b = 1.0;
};

struct MetricTensor {
    double g11 = 1.0;
    double g12 = 0.0;
    double g22 = 1.0;
};

/// Levi-Civita symbols Gamma^k_ij in the model chart (indices 1, 2 follow
/// the chart coordinates).
struct Christoffel {
    double g1_11 = 0.0, g1_12 = 0.0, g1_22 = 0.0;
    double g2_11 = 0.0, g2_12 = 0.0, g2_22 = 0.0;
};

enum class Chart : std::uint8_t { cartesian, polar };

/// Integration state (position, coordinate velocity) in one of the model's
/// internal charts. Only rotational models ever use the polar chart.
struct PhaseState {
    std::array<double, 4> y{};
    Chart chart = Chart::cartesian;
};

/// Compile-time interface shared by every surface model.
template <class M>
concept SurfaceModel = requires(const M& m, ChartPoint p, const PhaseState& s, PhaseState& ms,
                                const UnitTangentVector& v, const double* y, double* dy) {
    { m.bounds() } -> std::convertible_to<CurvatureBounds>;
    { m.admissible(p) } -> std::convertible_to<bool>;
    { m.metric(p) } -> std::same_as<MetricTensor>;
    { m.christoffel(p) } -> std::same_as<Christoffel>;
    { m.curvature(p) } -> std::convertible_to<double>;
    { m.lift(v) } -> std::same_as<PhaseState>;
    { m.project(s) } -> std::same_as<UnitTangentVector>;
    { m.state_admissible(s) } -> std::convertible_to<bool>;
    { m.state_curvature(s.chart, y) } -> std::convertible_to<double>;
    m.derivative(s.chart, y, dy);
    m.normalize(ms);
    m.rechart(ms);
    { m.local_offset(s, p) } -> std::same_as<std::array<double, 2>>;
    { m.state_metric(s) } -> std::same_as<MetricTensor>;
};

namespace detail {

struct LambdaJet {
    double l = 0.0, lx = 0.0, ly = 0.0;
};

/// Shared machinery for metrics e^{2 lambda} (dx^2 + dy^2). The orthonormal
/// frame is e^{-lambda} (d/dx, d/dy), so direction angles are Euclidean.
template <class Derived>
class ConformalModel {
public:
    MetricTensor metric(ChartPoint p) const {
        check(p);
        const double e = std::exp(2.0 * self().lambda(p.x, p.y).l);
        return {e, 0.0, e};
    }

    Christoffel christoffel(ChartPoint p) const {
        check(p);
        const auto j = self().lambda(p.x, p.y);
        return {j.lx, j.ly, -j.lx, -j.ly, j.lx, j.ly};
    }

    PhaseState lift(const UnitTangentVector& v) const {
        const double s = std::exp(-self().lambda(v.base.x, v.base.y).l);
        return {{v.base.x, v.base.y, s * std::cos(v.theta), s * std::sin(v.theta)}, Chart::cartesian};
    }

    UnitTangentVector project(const PhaseState& s) const {
        return {{s.y[0], s.y[1]}, wrap_angle(std::atan2(s.y[3], s.y[2]))};
    }

    bool state_admissible(const PhaseState& s) const { return self().admissible({s.y[0], s.y[1]}); }

    double state_curvature(Chart, const double* y) const { return self().curvature_unchecked(y[0], y[1]); }

    void derivative(Chart, const double* y, double* dy) const {
        const auto j = self().lambda(y[0], y[1]);
        const double vx = y[2], vy = y[3];
        dy[0] = vx;
        dy[1] = vy;
        dy[2] = -(j.lx * (vx * vx - vy * vy) + 2.0 * j.ly * vx * vy);
        dy[3] = -(j.ly * (vy * vy - vx * vx) + 2.0 * j.lx * vx * vy);
    }

    void normalize(PhaseState& s) const {
        const double speed = std::exp(self().lambda(s.y[0], s.y[1]).l) * std::hypot(s.y[2], s.y[3]);
        s.y[2] /= speed;
        s.y[3] /= speed;
    }

    void rechart(PhaseState&) const {}

    std::array<double, 2> local_offset(const PhaseState& s, ChartPoint target) const {
        return {target.x - s.y[0], target.y - s.y[1]};
    }

    MetricTensor state_metric(const PhaseState& s) const {
        const double e = std::exp(2.0 * self().lambda(s.y[0], s.y[1]).l);
        return {e, 0.0, e};
    }

protected:
    void check(ChartPoint p) const {
        if (!self().admissible(p))
            throw DomainError(std::string(Derived::name) + ": point (" + std::to_string(p.x) + ", " +
                              std::to_string(p.y) + ") outside the admissible domain");
    }

private:
    const Derived& self() const { return static_cast<const Derived&>(*this); }
};

}  // namespace detail

/// Upper half-plane (dx^2 + dy^2) / y^2, curvature -1.
class UpperHalfPlane : public detail::ConformalModel<UpperHalfPlane> {
public:
    static constexpr const char* name = "UpperHalfPlane";
    static constexpr bool closed_form = true;
    static constexpr double constant_curvature = -1.0;

    CurvatureBounds bounds() const { return {1.0, 1.0}; }
    bool admissible(ChartPoint p) const { return p.y > 0.0 && std::isfinite(p.x) && std::isfinite(p.y); }
    detail::LambdaJet lambda(double, double y) const { return {-std::log(y), 0.0, -1.0 / y}; }
    double curvature(ChartPoint p) const {
        check(p);
        return -1.0;
    }
    double curvature_unchecked(double, double) const { return -1.0; }
};

/// Poincare disc 4 |dz|^2 / (1 - |z|^2)^2, curvature -1.
class PoincareDisc : public detail::ConformalModel<PoincareDisc> {
public:
    static constexpr const char* name = "PoincareDisc";
    static constexpr bool closed_form = true;
    static constexpr double constant_curvature = -1.0;

    CurvatureBounds bounds() const { return {1.0, 1.0}; }
    bool admissible(ChartPoint p) const { return p.x * p.x + p.y * p.y < 1.0; }
    detail::LambdaJet lambda(double x, double y) const {
        const double q = 1.0 - x * x - y * y;
        return {std::log(2.0 / q), 2.0 * x / q, 2.0 * y / q};
    }
    double curvature(ChartPoint p) const {
        check(p);
        return -1.0;
    }
    double curvature_unchecked(double, double) const { return -1.0; }
};

/// Conformal factor lambda tabulated on a rectangle; curvature by centred
/// second differences of the interpolant at the grid spacing.
class ConformalGrid : public detail::ConformalModel<ConformalGrid> {
public:
    static constexpr const char* name = "Conformal";
    static constexpr bool closed_form = false;
    static constexpr int margin_cells = 3;

    ConformalGrid(ScalarGrid grid, CurvatureBounds bounds)
        : grid_(std::make_shared<const ScalarGrid>(std::move(grid))), bounds_(bounds) {
        if (grid_->rows < 2 * margin_cells + 2 || grid_->cols < 2 * margin_cells + 2)
            throw ConfigError("conformal grid too small for its interpolation margin");
    }

    CurvatureBounds bounds() const { return bounds_; }
    const ScalarGrid& grid() const { return *grid_; }

    double x_min() const { return grid_->x0 + margin_cells * grid_->dx; }
    double x_max() const { return grid_->x_max() - margin_cells * grid_->dx; }
    double y_min() const { return grid_->y0 + margin_cells * grid_->dy; }
    double y_max() const { return grid_->y_max() - margin_cells * grid_->dy; }

    bool admissible(ChartPoint p) const {
        return p.x >= x_min() && p.x <= x_max() && p.y >= y_min() && p.y <= y_max();
    }

    detail::LambdaJet lambda(double x, double y) const {
        const auto j = interpolate(*grid_, x, y);
        return {j.f, j.fx, j.fy};
    }

    double curvature(ChartPoint p) const {
        check(p);
        return curvature_unchecked(p.x, p.y);
    }

    double curvature_unchecked(double x, double y) const {
        const double hx = grid_->dx, hy = grid_->dy;
        const double c = interpolate(*grid_, x, y).f;
        const double lxx = (interpolate(*grid_, x + hx, y).f - 2.0 * c + interpolate(*grid_, x - hx, y).f) / (hx * hx);
        const double lyy = (interpolate(*grid_, x, y + hy).f - 2.0 * c + interpolate(*grid_, x, y - hy).f) / (hy * hy);
        return -(lxx + lyy) * std::exp(-2.0 * c);
    }

private:
    std::shared_ptr<const ScalarGrid> grid_;
    CurvatureBounds bounds_;
};

/// Rotationally symmetric metric dr^2 + f(r)^2 dphi^2 with a smooth pole.
///
/// Chart points are geodesic polar coordinates (r, phi). Direction angles are
/// measured in the frame (d/dr, f^{-1} d/dphi); at the pole the frame is the
/// limit along the ray of angle phi. Integration runs in Cartesian normal
/// coordinates near the pole and in polar coordinates away from it.
template <WarpingProfile Profile>
class RotationalModel {
public:
    static constexpr const char* name = "Rotational";
    static constexpr bool closed_form = false;
    static constexpr double polar_above = 1.0;
    static constexpr double cartesian_below = 0.5;

    RotationalModel(Profile profile, CurvatureBounds bounds, double r_max = 150.0)
        : profile_(std::move(profile)), bounds_(bounds), r_max_(r_max) {
        const auto j0 = profile_.jet(0.0);
        if (std::abs(j0.f) > 1e-12 || std::abs(j0.f1 - 1.0) > 1e-9)
            throw ConfigError("rotational profile needs f(0)=0, f'(0)=1");
    }

    const Profile& profile() const { return profile_; }
    CurvatureBounds bounds() const { return bounds_; }
    double r_max() const { return r_max_; }

    bool admissible(ChartPoint p) const { return p.x >= 0.0 && p.x <= r_max_ && std::isfinite(p.y); }

    MetricTensor metric(ChartPoint p) const {
        check(p);
        const double f = profile_.jet(p.x).f;
        return {1.0, 0.0, f * f};
    }

    Christoffel christoffel(ChartPoint p) const {
        check(p);
        if (p.x <= 0.0) throw DomainError("Rotational: polar chart is singular at the pole");
        const auto j = profile_.jet(p.x);
        Christoffel c;
        c.g1_22 = -j.f * j.f1;
        c.g2_12 = j.f1 / j.f;
        return c;
    }

    double curvature(ChartPoint p) const {
        check(p);
        return profile_.curvature(p.x);
    }

    PhaseState lift(const UnitTangentVector& v) const {
        const double r = v.base.x, phi = v.base.y, c = std::cos(v.theta), s = std::sin(v.theta);
        if (r >= polar_above) return {{r, phi, c, s / profile_.jet(r).f}, Chart::polar};
        const double cp = std::cos(phi), sp = std::sin(phi), tang = s / profile_.f_over_r(r);
        return {{r * cp, r * sp, c * cp - tang * sp, c * sp + tang * cp}, Chart::cartesian};
    }

    UnitTangentVector project(const PhaseState& s) const {
        if (s.chart == Chart::polar) {
            const double f = profile_.jet(s.y[0]).f;
            return {{s.y[0], wrap_angle(s.y[1])}, wrap_angle(std::atan2(f * s.y[3], s.y[2]))};
        }
        const double r = std::hypot(s.y[0], s.y[1]);
        if (r == 0.0) return {{0.0, wrap_angle(std::atan2(s.y[3], s.y[2]))}, 0.0};
        const double cp = s.y[0] / r, sp = s.y[1] / r;
        const double rdot = cp * s.y[2] + sp * s.y[3], w = -sp * s.y[2] + cp * s.y[3];
        return {{r, wrap_angle(std::atan2(sp, cp))}, wrap_angle(std::atan2(profile_.f_over_r(r) * w, rdot))};
    }

    bool state_admissible(const PhaseState& s) const {
        const double r = s.chart == Chart::polar ? s.y[0] : std::hypot(s.y[0], s.y[1]);
        return r >= 0.0 && r <= r_max_ && std::isfinite(s.y[2]) && std::isfinite(s.y[3]);
    }

    double state_curvature(Chart chart, const double* y) const {
        return profile_.curvature(chart == Chart::polar ? y[0] : std::hypot(y[0], y[1]));
    }

    void derivative(Chart chart, const double* y, double* dy) const {
        if (chart == Chart::polar) {
            const auto j = profile_.jet(y[0]);
            dy[0] = y[2];
            dy[1] = y[3];
            dy[2] = j.f * j.f1 * y[3] * y[3];
            dy[3] = -2.0 * (j.f1 / j.f) * y[2] * y[3];
            return;
        }
        dy[0] = y[2];
        dy[1] = y[3];
        const double r = std::hypot(y[0], y[1]);
        if (r < 1e-300) {
            dy[2] = dy[3] = 0.0;
            return;
        }
        const double cp = y[0] / r, sp = y[1] / r;
        const double rdot = cp * y[2] + sp * y[3], w = -sp * y[2] + cp * y[3];
        const auto j = profile_.jet(r);
        const double fr = profile_.f_over_r(r);
        // Both brackets vanish to second order at the pole.
        const double radial = (w * w / r) * (fr * j.f1 - 1.0);
        const double tangential = (2.0 * rdot * w / r) * (1.0 - j.f1 / fr);
        dy[2] = radial * cp - tangential * sp;
        dy[3] = radial * sp + tangential * cp;
    }

    void normalize(PhaseState& s) const {
        double speed;
        if (s.chart == Chart::polar) {
            const double f = profile_.jet(s.y[0]).f;
            speed = std::hypot(s.y[2], f * s.y[3]);
        } else {
            const double r = std::hypot(s.y[0], s.y[1]);
            if (r == 0.0) {
                speed = std::hypot(s.y[2], s.y[3]);
            } else {
                const double cp = s.y[0] / r, sp = s.y[1] / r;
                const double rdot = cp * s.y[2] + sp * s.y[3], w = -sp * s.y[2] + cp * s.y[3];
                speed = std::hypot(rdot, profile_.f_over_r(r) * w);
            }
        }
        s.y[2] /= speed;
        s.y[3] /= speed;
    }

    void rechart(PhaseState& s) const {
        if (s.chart == Chart::polar && s.y[0] < cartesian_below) {
            const double r = s.y[0], cp = std::cos(s.y[1]), sp = std::sin(s.y[1]);
            const double rdot = s.y[2], w = r * s.y[3];
            s = {{r * cp, r * sp, rdot * cp - w * sp, rdot * sp + w * cp}, Chart::cartesian};
        } else if (s.chart == Chart::cartesian) {
            const double r = std::hypot(s.y[0], s.y[1]);
            if (r <= polar_above) return;
            const double cp = s.y[0] / r, sp = s.y[1] / r;
            const double rdot = cp * s.y[2] + sp * s.y[3], w = -sp * s.y[2] + cp * s.y[3];
            s = {{r, std::atan2(sp, cp), rdot, w / r}, Chart::polar};
        }
    }

    std::array<double, 2> local_offset(const PhaseState& s, ChartPoint target) const {
        if (s.chart == Chart::polar) return {target.x - s.y[0], angle_diff(target.y, s.y[1])};
        return {target.x * std::cos(target.y) - s.y[0], target.x * std::sin(target.y) - s.y[1]};
    }

    MetricTensor state_metric(const PhaseState& s) const {
        if (s.chart == Chart::polar) {
            const double f = profile_.jet(s.y[0]).f;
            return {1.0, 0.0, f * f};
        }
        const double r = std::hypot(s.y[0], s.y[1]);
        if (r == 0.0) return {};
        const double cp = s.y[0] / r, sp = s.y[1] / r, h = std::pow(profile_.f_over_r(r), 2);
        return {cp * cp + h * sp * sp, cp * sp * (1.0 - h), sp * sp + h * cp * cp};
    }

private:
    void check(ChartPoint p) const {
        if (!admissible(p))
            throw DomainError("Rotational: point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                              ") outside the admissible domain");
    }

    Profile profile_;
    CurvatureBounds bounds_;
    double r_max_;
};

using RotationalSinh = RotationalModel<SinhMixture>;
using RotationalTabulated = RotationalModel<TabulatedProfile>;

static_assert(SurfaceModel<UpperHalfPlane>);
static_assert(SurfaceModel<PoincareDisc>);
static_assert(SurfaceModel<ConformalGrid>);
static_assert(SurfaceModel<RotationalSinh>);
static_assert(SurfaceModel<RotationalTabulated>);

/// Any of the supported leaf models.
using MetricModel = std::variant<UpperHalfPlane, PoincareDisc, RotationalSinh, RotationalTabulated, ConformalGrid>;

inline std::string model_name(const MetricModel& m) {
    return std::visit([](const auto& x) { return std::string(std::decay_t<decltype(x)>::name); }, m);
}

inline CurvatureBounds bounds(const MetricModel& m) {
    return std::visit([](const auto& x) { return x.bounds(); }, m);
}

inline bool admissible(const MetricModel& m, ChartPoint p) {
    return std::visit([&](const auto& x) { return x.admissible(p); }, m);
}

inline double curvature(const MetricModel& m, ChartPoint p) {
    return std::visit([&](const auto& x) { return x.curvature(p); }, m);
}

inline Christoffel christoffel(const MetricModel& m, ChartPoint p) {
    return std::visit([&](const auto& x) { return x.christoffel(p); }, m);
}

inline MetricTensor metric(const MetricModel& m, ChartPoint p) {
    return std::visit([&](const auto& x) { return x.metric(p); }, m);
}

/// Rectangular sampling grid over a chart region.
struct GridSpec {
    double x_min = 0.0, x_max = 1.0;
    double y_min = 0.0, y_max = 1.0;
    int nx = 16, ny = 16;
};

struct PinchingReport {
    double k_min = std::numeric_limits<double>::infinity();
    double k_max = -std::numeric_limits<double>::infinity();
    bool pass = false;
    int samples = 0;
};

/// Samples the curvature on the grid and checks -b^2 - tol <= K <= -a^2 + tol.
inline PinchingReport verify_pinching(const MetricModel& m, const GridSpec& g, double tol = 1e-6) {
    PinchingReport rep;
    const auto cb = bounds(m);
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            const double x = g.nx > 1 ? g.x_min + (g.x_max - g.x_min) * i / (g.nx - 1) : g.x_min;
            const double y = g.ny > 1 ? g.y_min + (g.y_max - g.y_min) * j / (g.ny - 1) : g.y_min;
            const double k = curvature(m, {x, y});
            rep.k_min = std::min(rep.k_min, k);
            rep.k_max = std::max(rep.k_max, k);
            ++rep.samples;
        }
    }
    rep.pass = rep.samples > 0 && rep.k_min >= -cb.b * cb.b - tol && rep.k_max <= -cb.a * cb.a + tol;
    return rep;
}

/// Conformal factor of the shipped example grid: the upper half-plane metric
/// with a Gaussian bump added to lambda.
inline double perturbed_hyperbolic_lambda(double x, double y, double amplitude = 0.01, double cx = 0.0,
                                          double cy = 1.5, double sigma = 0.5) {
    const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
    return -std::log(y) + amplitude * std::exp(-d2 / (2.0 * sigma * sigma));
}

inline ScalarGrid perturbed_hyperbolic_grid() {
    return ScalarGrid::sample(57, 65, -1.6, 0.4, 0.05, 0.05,
                              [](double x, double y) { return perturbed_hyperbolic_lambda(x, y); });
}

/// Declared pinching constants of the shipped grid (measured sweep, rounded outward).
inline CurvatureBounds shipped_grid_bounds() { return {0.88, 1.04}; }

}  // namespace leafgibbs
