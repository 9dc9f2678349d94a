#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace leafgibbs {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2, Vec2) = default;
};

inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

/// Two chart coordinates of a point on a leaf. The meaning of (x, y) is fixed
/// by the model: Cartesian for the conformal models, geodesic polar (r, phi)
/// for rotational models.
struct ChartPoint {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const ChartPoint&, const ChartPoint&) = default;
};

/// A point of the unit tangent bundle: basepoint plus direction angle in the
/// model's orthonormal frame at the basepoint.
struct UnitTangentVector {
    ChartPoint base;
    double theta = 0.0;
};

/// Reduces an angle to [0, 2pi).
inline double wrap_angle(double a) {
    double r = std::fmod(a, two_pi);
    if (r < 0.0) r += two_pi;
    if (r >= two_pi) r = 0.0;
    return r;
}

/// Signed angular difference a - b reduced to (-pi, pi].
inline double angle_diff(double a, double b) {
    double d = std::remainder(a - b, two_pi);
    if (d <= -pi) d += two_pi;
    return d;
}

/// The flip involution v -> -v.
inline UnitTangentVector flip(const UnitTangentVector& v) { return {v.base, wrap_angle(v.theta + pi)}; }

/// Reduces a fiber coordinate to [0, 1).
inline double wrap_unit(double x) {
    double r = x - std::floor(x);
    if (r >= 1.0) r = 0.0;
    return r;
}

// Error hierarchy. Every numerical failure is reported, never clamped.

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual)
        : Error(what + " (best residual " + std::to_string(residual) + ")"), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

class ExcursionError : public Error {
public:
    ExcursionError(const std::string& what, UnitTangentVector last_valid)
        : Error(what), last_valid_(last_valid) {}
    const UnitTangentVector& last_valid() const { return last_valid_; }

private:
    UnitTangentVector last_valid_;
};

class BlowUpError : public Error {
public:
    BlowUpError(double time, double slope)
        : Error("Riccati slope blew up at t=" + std::to_string(time) + " (u=" + std::to_string(slope) + ")"),
          time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

class FoldingError : public Error {
public:
    using Error::Error;
};

class ScaleError : public Error {
public:
    using Error::Error;
};

}  // namespace leafgibbs
