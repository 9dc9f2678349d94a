#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "core.hpp"
#include "fuchsian.hpp"
#include "geometry.hpp"
#include "linearization.hpp"
#include "parallel.hpp"

namespace leafgibbs {

/// Rigid rotation x -> x + rho of the fiber circle [0, 1).
struct RotationMap {
    double rho = 0.0;
};

/// Circle Moebius map x -> arg(e^{i rot} (w + c)/(1 + conj(c) w)) / 2pi, w = e^{2 pi i x}.
struct MoebiusMap {
    cplx c{0.0, 0.0};
    double rotation = 0.0;

    static MoebiusMap from_isometry(const DiscIsometry& g) {
        return {g.beta / g.alpha, 2.0 * std::arg(g.alpha)};
    }
};

/// Piecewise-linear degree-one map through (k/N, lift[k]); lift increasing
/// with lift[N-1] < lift[0] + 1.
struct TabulatedMap {
    std::vector<double> lift;
};

using FiberMapSpec = std::variant<RotationMap, MoebiusMap, TabulatedMap>;

/// An orientation-preserving circle homeomorphism with its inverse and derivative.
class FiberMap {
public:
    FiberMap() : spec_(RotationMap{}) {}
    explicit FiberMap(FiberMapSpec spec) : spec_(std::move(spec)) { validate(); }

    const FiberMapSpec& spec() const { return spec_; }

    double operator()(double x) const { return eval(x, false); }
    double inverse(double x) const { return eval(x, true); }

    /// Derivative of the map (of its inverse when inverse is set) at x.
    double derivative(double x, bool inverse = false) const {
        return std::visit(
            [&](const auto& s) -> double {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, RotationMap>) {
                    return 1.0;
                } else if constexpr (std::is_same_v<S, MoebiusMap>) {
                    const cplx w = std::polar(1.0, two_pi * x);
                    const cplx den = inverse ? 1.0 - std::conj(s.c) * w * std::polar(1.0, -s.rotation)
                                             : 1.0 + std::conj(s.c) * w;
                    return (1.0 - std::norm(s.c)) / std::norm(den);
                } else {
                    const double y = inverse ? eval(x, true) : x;
                    const double slope = segment_slope(s, knot_of(s.lift.size(), y).first);
                    return inverse ? 1.0 / slope : slope;
                }
            },
            spec_);
    }

private:
    static std::pair<std::size_t, double> knot_of(std::size_t n, double x) {
        const double u = wrap_unit(x) * static_cast<double>(n);
        const auto k = std::min(n - 1, static_cast<std::size_t>(u));
        return {k, u - static_cast<double>(k)};
    }
    static double segment_slope(const TabulatedMap& s, std::size_t k) {
        const std::size_t n = s.lift.size();
        const double next = k + 1 < n ? s.lift[k + 1] : s.lift[0] + 1.0;
        return (next - s.lift[k]) * static_cast<double>(n);
    }

    double eval(double x, bool inverse) const {
        return std::visit(
            [&](const auto& s) -> double {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, RotationMap>) {
                    return wrap_unit(inverse ? x - s.rho : x + s.rho);
                } else if constexpr (std::is_same_v<S, MoebiusMap>) {
                    const cplx w = std::polar(1.0, two_pi * x);
                    cplx out;
                    if (!inverse) {
                        out = std::polar(1.0, s.rotation) * (w + s.c) / (1.0 + std::conj(s.c) * w);
                    } else {
                        const cplx u = w * std::polar(1.0, -s.rotation);
                        out = (u - s.c) / (1.0 - std::conj(s.c) * u);
                    }
                    return wrap_unit(std::arg(out) / two_pi);
                } else {
                    const std::size_t n = s.lift.size();
                    if (!inverse) {
                        const auto [k, frac] = knot_of(n, x);
                        const double next = k + 1 < n ? s.lift[k + 1] : s.lift[0] + 1.0;
                        return wrap_unit(s.lift[k] + frac * (next - s.lift[k]));
                    }
                    // Segment k covers [lift[k], next) modulo 1.
                    for (std::size_t k = 0; k < n; ++k) {
                        const double next = k + 1 < n ? s.lift[k + 1] : s.lift[0] + 1.0;
                        const double off = wrap_unit(x - s.lift[k]);
                        if (off < next - s.lift[k])
                            return wrap_unit((static_cast<double>(k) + off / (next - s.lift[k])) / static_cast<double>(n));
                    }
                    return wrap_unit(static_cast<double>(n - 1) / static_cast<double>(n));
                }
            },
            spec_);
    }

    void validate() const {
        if (const auto* m = std::get_if<MoebiusMap>(&spec_)) {
            if (!(std::abs(m->c) < 1.0)) throw ConfigError("moebius fiber map: need |c| < 1");
        } else if (const auto* t = std::get_if<TabulatedMap>(&spec_)) {
            if (t->lift.size() < 2) throw ConfigError("tabulated fiber map: need at least 2 knots");
            for (std::size_t k = 0; k < t->lift.size(); ++k)
                if (!(segment_slope(*t, k) > 0.0))
                    throw ConfigError("tabulated fiber map: not monotone of degree one");
        }
    }

    FiberMapSpec spec_;
};

/// Suspension of a fiber-circle action of the octagon surface group.
class SuspensionFoliation {
public:
    SuspensionFoliation(FuchsianDomain base, std::vector<FiberMap> maps, double relation_tol = 1e-6)
        : base_(std::move(base)), maps_(std::move(maps)) {
        if (static_cast<int>(maps_.size()) != base_.generator_count())
            throw ConfigError("suspension: need one fiber map per generator (" +
                              std::to_string(base_.generator_count()) + ")");
        relation_defect_ = measure_relation_defect();
        if (!(relation_defect_ <= relation_tol))
            throw ConfigError("suspension: holonomy violates a group relation by " + std::to_string(relation_defect_));
    }

    static SuspensionFoliation rotations(const std::vector<double>& rho) {
        std::vector<FiberMap> maps;
        for (double r : rho) maps.emplace_back(RotationMap{r});
        return {FuchsianDomain::regular_octagon(), std::move(maps)};
    }
    static SuspensionFoliation trivial() { return rotations({0.0, 0.0, 0.0, 0.0}); }
    /// The boundary action of the octagon group itself: a minimal,
    /// strongly contracting (north-south) Moebius holonomy.
    static SuspensionFoliation fuchsian_moebius() {
        auto domain = FuchsianDomain::regular_octagon();
        std::vector<FiberMap> maps;
        for (int k = 1; k <= domain.generator_count(); ++k)
            maps.emplace_back(MoebiusMap::from_isometry(domain.element(k)));
        return {std::move(domain), std::move(maps)};
    }

    const FuchsianDomain& base() const { return base_; }
    const std::vector<FiberMap>& maps() const { return maps_; }
    int generator_count() const { return base_.generator_count(); }
    double relation_defect() const { return relation_defect_; }

    double apply_letter(int letter, double x) const {
        const int k = std::abs(letter);
        if (k < 1 || k > generator_count()) throw DomainError("unknown generator index " + std::to_string(letter));
        return letter > 0 ? maps_[k - 1](x) : maps_[k - 1].inverse(x);
    }

private:
    double measure_relation_defect() const {
        double worst = 0.0;
        for (const auto& r : base_.relators()) {
            for (int i = 0; i < 64; ++i) {
                const double x = (i + 0.5) / 64.0;
                double y = x;
                for (int l : r) y = apply_letter(l, y);
                worst = std::max(worst, std::abs(std::remainder(y - x, 1.0)));
            }
        }
        return worst;
    }

    FuchsianDomain base_;
    std::vector<FiberMap> maps_;
    double relation_defect_ = 0.0;
};

/// Composes fiber maps in word order (first letter acts first).
inline double holonomy_apply(const SuspensionFoliation& susp, const std::vector<int>& word, double x) {
    double y = wrap_unit(x);
    for (int l : word) y = susp.apply_letter(l, y);
    return y;
}

struct FoliatedState {
    UnitTangentVector v;  // in the polygon of the disc model
    double fiber = 0.0;
};

/// Foliated geodesic flow on the suspension: each deck letter applied to the
/// base also acts on the fiber coordinate.
class FoliatedOrbit {
public:
    FoliatedOrbit(const SuspensionFoliation& susp, const FoliatedState& s, const FlowParams& p)
        : susp_(&susp), fiber_(wrap_unit(s.fiber)), orbit_(disc_, susp.base(), entry(susp, s, fiber_), p) {}

    void advance(double t) {
        orbit_.advance(t, [&](int l) { fiber_ = susp_->apply_letter(l, fiber_); });
    }

    FoliatedState state() const { return {orbit_.vector(), fiber_}; }

private:
    // Folds the initial vector into the polygon, carrying the fiber along.
    static UnitTangentVector entry(const SuspensionFoliation& susp, const FoliatedState& s, double& fiber) {
        const auto f = fold(susp.base(), s.v);
        fiber = holonomy_apply(susp, f.word, fiber);
        return f.v;
    }

    static inline const PoincareDisc disc_{};
    const SuspensionFoliation* susp_;
    double fiber_;
    QuotientOrbit orbit_;
};

inline FoliatedState foliated_flow(const SuspensionFoliation& susp, const FoliatedState& s, double t,
                                   const FlowParams& p = {1e-2, 16, 1e-9}) {
    FoliatedOrbit o(susp, s, p);
    o.advance(t);
    return o.state();
}

/// Histogram on the fiber circle [0, 1) with equal bins.
class TransverseMeasure {
public:
    explicit TransverseMeasure(int bins = 256) : masses_(static_cast<std::size_t>(bins), 0.0) {
        if (bins < 1) throw ConfigError("transverse measure: need at least one bin");
    }
    explicit TransverseMeasure(std::vector<double> masses) : masses_(std::move(masses)) {
        if (masses_.empty()) throw ConfigError("transverse measure: need at least one bin");
        for (double m : masses_)
            if (!(m >= 0.0)) throw DomainError("transverse measure: negative mass");
    }

    static TransverseMeasure uniform(int bins, double total = 1.0) {
        return TransverseMeasure(std::vector<double>(static_cast<std::size_t>(bins), total / bins));
    }

    int bins() const { return static_cast<int>(masses_.size()); }
    double bin_left(int k) const { return static_cast<double>(k) / bins(); }
    const std::vector<double>& masses() const { return masses_; }
    std::vector<double>& masses() { return masses_; }
    int bin_of(double x) const { return std::min(bins() - 1, static_cast<int>(wrap_unit(x) * bins())); }
    void add(double x, double w = 1.0) { masses_[static_cast<std::size_t>(bin_of(x))] += w; }

    double total() const {
        double s = 0.0;
        for (double m : masses_) s += m;
        return s;
    }
    TransverseMeasure& normalize() {
        const double t = total();
        if (!(t > 0.0)) throw DomainError("transverse measure: cannot normalize zero mass");
        for (auto& m : masses_) m /= t;
        return *this;
    }

    double l1_distance(const TransverseMeasure& o) const {
        if (o.bins() != bins()) throw DomainError("transverse measure: bin counts differ");
        double s = 0.0;
        for (int k = 0; k < bins(); ++k) s += std::abs(masses_[k] - o.masses_[k]);
        return s;
    }

    /// Image under a fiber map; each bin's mass is spread uniformly over the
    /// image of the bin (linear rebinning).
    TransverseMeasure pushforward(const FiberMap& f) const {
        const int n = bins();
        TransverseMeasure out(n);
        for (int k = 0; k < n; ++k) {
            const double m = masses_[k];
            if (m == 0.0) continue;
            const double a = f(bin_left(k));
            const double len = wrap_unit(f(bin_left(k + 1)) - a);
            if (!(len > 0.0)) throw DomainError("pushforward: fiber map collapses a bin below resolution");
            spread(out, a, len, m);
        }
        return out;
    }

private:
    static void spread(TransverseMeasure& out, double start, double len, double mass) {
        const int n = out.bins();
        const double density = mass / len;
        double x = start * n, remaining = len * n;
        while (remaining > 1e-15) {
            const double cell = std::floor(x);
            const double take = std::min(remaining, cell + 1.0 - x);
            out.masses_[static_cast<std::size_t>(((static_cast<long>(cell) % n) + n) % n)] += density * take / n;
            x += take;
            remaining -= take;
        }
    }

    std::vector<double> masses_;
};

/// max over generators of || g_* nu - nu ||_1.
inline double invariance_defect(const SuspensionFoliation& susp, const TransverseMeasure& nu) {
    double worst = 0.0;
    for (const auto& f : susp.maps()) worst = std::max(worst, nu.pushforward(f).l1_distance(nu));
    return worst;
}

struct RadonNikodymEstimate {
    std::vector<double> ratio;  // NaN on flagged bins
    std::vector<int> flagged;   // bins where nu vanishes
};

/// Binwise d[g_* nu]/d nu for generator g (1-based).
inline RadonNikodymEstimate radon_nikodym_estimate(const SuspensionFoliation& susp, const TransverseMeasure& nu,
                                                   int generator) {
    if (generator < 1 || generator > susp.generator_count())
        throw DomainError("unknown generator index " + std::to_string(generator));
    const auto push = nu.pushforward(susp.maps()[static_cast<std::size_t>(generator - 1)]);
    RadonNikodymEstimate out;
    out.ratio.resize(static_cast<std::size_t>(nu.bins()));
    for (int k = 0; k < nu.bins(); ++k) {
        if (nu.masses()[k] > 0.0) {
            out.ratio[k] = push.masses()[k] / nu.masses()[k];
        } else {
            out.ratio[k] = std::numeric_limits<double>::quiet_NaN();
            out.flagged.push_back(k);
        }
    }
    return out;
}

inline void write_transverse_csv(std::ostream& os, const TransverseMeasure& nu) {
    os << "bin_left,mass\n" << std::setprecision(15);
    for (int k = 0; k < nu.bins(); ++k) os << nu.bin_left(k) << ',' << nu.masses()[k] << '\n';
}

/// h0(x): mean of theta = 1/sqrt(1 + U^2) over n equally spaced directions at x.
template <SurfaceModel M>
double h0(const M& m, ChartPoint x, int n, const RiccatiParams& rp = {{1e-2, 16, 1e-9}, 0.0, 10.0}, int workers = 1) {
    if (n < 1) throw ConfigError("h0: need n >= 1");
    const auto th = parallel_map(static_cast<std::size_t>(n), workers, [&](std::size_t k) {
        return angle_theta(unstable_slope(m, {x, two_pi * (static_cast<double>(k) + 0.5) / n}, rp));
    });
    double s = 0.0;
    for (double t : th) s += t;
    return s / n;
}

/// Point of the polygon with hyperbolic area density, by rejection from the
/// Euclidean disc through the vertices.
inline ChartPoint sample_polygon_point(const FuchsianDomain& domain, Rng& rng) {
    const double R = domain.vertex_radius_euclid();
    const double peak = 1.0 / std::pow(1.0 - R * R, 2);
    for (;;) {
        const double r = R * std::sqrt(rng.uniform()), a = two_pi * rng.uniform();
        const cplx z = std::polar(r, a);
        if (!domain.inside(z, 0.0)) continue;
        if (rng.uniform() * peak <= 1.0 / std::pow(1.0 - r * r, 2)) return {z.real(), z.imag()};
    }
}

/// Liouville measure of the unit tangent bundle of the quotient surface.
inline UnitTangentVector sample_liouville(const FuchsianDomain& domain, Rng& rng) {
    const ChartPoint p = sample_polygon_point(domain, rng);
    return {p, two_pi * rng.uniform()};
}

}  // namespace leafgibbs
