#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <vector>

#include "core.hpp"
#include "grid.hpp"

namespace leafgibbs {

/// Warping function f of a rotationally symmetric metric dr^2 + f(r)^2 dphi^2
/// and its first two derivatives.
struct ProfileJet {
    double f = 0.0;
    double f1 = 0.0;
    double f2 = 0.0;
};

template <class P>
concept WarpingProfile = requires(const P& p, double r) {
    { p.jet(r) } -> std::same_as<ProfileJet>;
    { p.f_over_r(r) } -> std::convertible_to<double>;
    { p.curvature(r) } -> std::convertible_to<double>;
};

namespace detail {

// sinh(x)/x, accurate at the origin.
inline double sinhc(double x) {
    if (std::abs(x) < 1e-4) {
        const double x2 = x * x;
        return 1.0 + x2 / 6.0 * (1.0 + x2 / 20.0);
    }
    return std::sinh(x) / x;
}

}  // namespace detail

/// f(r) = sum_i w_i sinh(k_i r) / k_i with sum_i w_i = 1.
///
/// Curvature -f''/f is a weighted mean of the -k_i^2, so a mixture of rates
/// a and b is pinched in [-b^2, -a^2]. A single term of rate 1 is the
/// hyperbolic plane in geodesic polar coordinates.
class SinhMixture {
public:
    struct Term {
        double weight;
        double rate;
    };

    SinhMixture() : terms_{{1.0, 1.0}} {}
    explicit SinhMixture(std::vector<Term> terms) : terms_(std::move(terms)) {
        if (terms_.empty()) throw ConfigError("sinh mixture: no terms");
        double total = 0.0;
        for (const auto& t : terms_) {
            if (!(t.weight >= 0.0) || !(t.rate > 0.0)) throw ConfigError("sinh mixture: weights >= 0, rates > 0");
            total += t.weight;
        }
        if (std::abs(total - 1.0) > 1e-12) throw ConfigError("sinh mixture: weights must sum to 1 (f'(0)=1)");
    }

    /// Mixture of rates a and b whose curvature at the pole is -(w a^2 + (1-w) b^2).
    static SinhMixture pinched(double a, double b, double weight_a) {
        return SinhMixture({{weight_a, a}, {1.0 - weight_a, b}});
    }

    ProfileJet jet(double r) const {
        ProfileJet j;
        for (const auto& t : terms_) {
            const double s = std::sinh(t.rate * r), c = std::cosh(t.rate * r);
            j.f += t.weight * s / t.rate;
            j.f1 += t.weight * c;
            j.f2 += t.weight * t.rate * s;
        }
        return j;
    }

    double f_over_r(double r) const {
        double s = 0.0;
        for (const auto& t : terms_) s += t.weight * detail::sinhc(t.rate * r);
        return s;
    }

    double curvature(double r) const {
        double num = 0.0, den = 0.0;
        for (const auto& t : terms_) {
            const double sc = detail::sinhc(t.rate * r);
            num += t.weight * t.rate * t.rate * sc;
            den += t.weight * sc;
        }
        return -num / den;
    }

    const std::vector<Term>& terms() const { return terms_; }

private:
    std::vector<Term> terms_;
};

/// Warping function obtained by solving the Jacobi equation f'' = -K f,
/// f(0) = 0, f'(0) = 1, for a tabulated curvature K(r) (Catmull-Rom spline,
/// even extension through r = 0, constant beyond the last node).
class TabulatedProfile {
public:
    TabulatedProfile(std::vector<double> curvature_samples, double dr)
        : k_(std::move(curvature_samples)), dr_(dr) {
        if (k_.size() < 4) throw ConfigError("tabulated profile: need at least 4 curvature samples");
        if (!(dr_ > 0.0)) throw ConfigError("tabulated profile: dr must be positive");
        for (double k : k_)
            if (!(k < 0.0)) throw ConfigError("tabulated profile: curvature samples must be negative");
        integrate();
    }

    double curvature(double r) const {
        r = std::abs(r);
        const double u = r / dr_;
        const int n = static_cast<int>(k_.size());
        if (u >= n - 1) return k_.back();
        const int i = static_cast<int>(std::floor(u));
        double w[4], dw[4];
        detail::catmull_rom(u - i, w, dw);
        double s = 0.0;
        for (int a = 0; a < 4; ++a) s += w[a] * sample(i - 1 + a);
        return s;
    }

    ProfileJet jet(double r) const {
        const double last = dr_ * static_cast<double>(k_.size() - 1);
        ProfileJet j;
        if (r >= last) {
            const double k = std::sqrt(-k_.back()), s = r - last;
            const double fN = f_.back(), dN = df_.back();
            j.f = fN * std::cosh(k * s) + dN * std::sinh(k * s) / k;
            j.f1 = fN * k * std::sinh(k * s) + dN * std::cosh(k * s);
        } else {
            const int i = std::min(static_cast<int>(r / dr_), static_cast<int>(k_.size()) - 2);
            const double t = (r - i * dr_) / dr_;
            const double h00 = 2 * t * t * t - 3 * t * t + 1, h10 = t * t * t - 2 * t * t + t;
            const double h01 = -2 * t * t * t + 3 * t * t, h11 = t * t * t - t * t;
            j.f = h00 * f_[i] + h10 * dr_ * df_[i] + h01 * f_[i + 1] + h11 * dr_ * df_[i + 1];
            const double g00 = 6 * t * t - 6 * t, g10 = 3 * t * t - 4 * t + 1;
            const double g01 = -6 * t * t + 6 * t, g11 = 3 * t * t - 2 * t;
            j.f1 = (g00 * f_[i] + g01 * f_[i + 1]) / dr_ + g10 * df_[i] + g11 * df_[i + 1];
        }
        j.f2 = -curvature(r) * j.f;
        return j;
    }

    double f_over_r(double r) const {
        if (r < 1e-6) return 1.0 - curvature(0.0) * r * r / 6.0;
        return jet(r).f / r;
    }

private:
    double sample(int i) const {
        const int n = static_cast<int>(k_.size());
        if (i < 0) i = -i;
        return k_[static_cast<std::size_t>(std::min(i, n - 1))];
    }

    void integrate() {
        constexpr int sub = 32;
        const double h = dr_ / sub;
        double f = 0.0, d = 1.0, r = 0.0;
        f_.assign(1, 0.0);
        df_.assign(1, 1.0);
        auto acc = [this](double rr, double ff) { return -curvature(rr) * ff; };
        for (std::size_t node = 1; node < k_.size(); ++node) {
            for (int s = 0; s < sub; ++s) {
                const double k1f = d, k1d = acc(r, f);
                const double k2f = d + 0.5 * h * k1d, k2d = acc(r + 0.5 * h, f + 0.5 * h * k1f);
                const double k3f = d + 0.5 * h * k2d, k3d = acc(r + 0.5 * h, f + 0.5 * h * k2f);
                const double k4f = d + h * k3d, k4d = acc(r + h, f + h * k3f);
                f += h / 6.0 * (k1f + 2 * k2f + 2 * k3f + k4f);
                d += h / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d);
                r += h;
            }
            f_.push_back(f);
            df_.push_back(d);
        }
    }

    std::vector<double> k_;
    double dr_;
    std::vector<double> f_, df_;
};

}  // namespace leafgibbs
