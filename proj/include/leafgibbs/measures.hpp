#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <vector>

#include "boundary.hpp"
#include "foliated.hpp"

namespace leafgibbs {

struct WeightedSample {
    UnitTangentVector v;
    double fiber = 0.0;
    double weight = 1.0;
    double time = 0.0;  // flow time that produced the sample
};

class EmpiricalMeasure {
public:
    EmpiricalMeasure() = default;
    explicit EmpiricalMeasure(std::vector<WeightedSample> s) : samples_(std::move(s)) {
        for (const auto& x : samples_)
            if (!(x.weight >= 0.0)) throw DomainError("EmpiricalMeasure: negative weight");
    }

    const std::vector<WeightedSample>& samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }
    void add(const WeightedSample& s) {
        if (!(s.weight >= 0.0)) throw DomainError("EmpiricalMeasure: negative weight");
        samples_.push_back(s);
    }
    double total_weight() const {
        double t = 0.0;
        for (const auto& s : samples_) t += s.weight;
        return t;
    }
    void normalize() {
        const double t = total_weight();
        if (t <= 0.0) throw DomainError("EmpiricalMeasure: zero total weight");
        for (auto& s : samples_) s.weight /= t;
    }

private:
    std::vector<WeightedSample> samples_;
};

inline void write_ensemble_csv(std::ostream& os, const EmpiricalMeasure& m) {
    os << "x,y,theta,fiber,weight\n";
    os.precision(17);
    for (const auto& s : m.samples())
        os << s.v.base.x << ',' << s.v.base.y << ',' << s.v.theta << ',' << s.fiber << ',' << s.weight << '\n';
}

/// Product binning of (base square [-radius, radius]^2) x direction x fiber.
struct PhaseBinning {
    double radius = 1.0;
    int nx = 1, ny = 1, ntheta = 1, nfiber = 1;

    static PhaseBinning for_domain(const FuchsianDomain& d, int nx, int ny, int ntheta, int nfiber = 1) {
        return {d.vertex_radius_euclid() * (1.0 + 1e-12), nx, ny, ntheta, nfiber};
    }
    std::size_t size() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(ntheta) *
               static_cast<std::size_t>(nfiber);
    }
    long index(const UnitTangentVector& v, double fiber) const {
        const auto cell = [](double u, int n) { return std::clamp(static_cast<int>(std::floor(u * n)), 0, n - 1); };
        const double ux = (v.base.x + radius) / (2.0 * radius), uy = (v.base.y + radius) / (2.0 * radius);
        if (ux < 0.0 || ux >= 1.0 || uy < 0.0 || uy >= 1.0) return -1;
        return flat(cell(ux, nx), cell(uy, ny), cell(wrap_angle(v.theta) / two_pi, ntheta), cell(wrap_unit(fiber), nfiber));
    }
    long flat(int ix, int iy, int it, int ifb) const {
        return ((static_cast<long>(ix) * ny + iy) * ntheta + it) * nfiber + ifb;
    }
};

/// Binned density with per-bin sample counts; masses integrate to the total
/// weight of the binned samples.
class Histogram {
public:
    explicit Histogram(PhaseBinning b) : binning_(b), mass_(b.size(), 0.0), count_(b.size(), 0) {}

    static Histogram of(const EmpiricalMeasure& m, const PhaseBinning& b) {
        Histogram h(b);
        for (const auto& s : m.samples()) {
            const long k = b.index(s.v, s.fiber);
            if (k < 0) {
                ++h.outside_;
                continue;
            }
            h.mass_[k] += s.weight;
            ++h.count_[k];
        }
        return h;
    }

    const PhaseBinning& binning() const { return binning_; }
    const std::vector<double>& masses() const { return mass_; }
    std::vector<double>& masses() { return mass_; }
    const std::vector<long>& counts() const { return count_; }
    long outside() const { return outside_; }
    long total_count() const {
        long n = 0;
        for (long c : count_) n += c;
        return n;
    }
    double total() const {
        double t = 0.0;
        for (double x : mass_) t += x;
        return t;
    }
    Histogram& normalize() {
        const double t = total();
        if (t <= 0.0) throw DomainError("Histogram: zero mass");
        for (double& x : mass_) x /= t;
        return *this;
    }
    /// Binomial standard error of the normalized mass of bin k.
    double standard_error(std::size_t k) const {
        const double n = static_cast<double>(total_count());
        if (n == 0.0) return 0.0;
        const double p = static_cast<double>(count_[k]) / n;
        return std::sqrt(p * (1.0 - p) / n);
    }
    std::size_t low_confidence_bins(long min_count = 5) const {
        return static_cast<std::size_t>(std::count_if(count_.begin(), count_.end(), [&](long c) { return c < min_count; }));
    }

    /// Merges groups of `factor` adjacent bins along axis 0..3 (x, y, theta, fiber).
    Histogram coarsen(int axis, int factor) const {
        int dims[4] = {binning_.nx, binning_.ny, binning_.ntheta, binning_.nfiber};
        if (axis < 0 || axis > 3 || factor < 1 || dims[axis] % factor != 0)
            throw ConfigError("Histogram::coarsen: factor must divide the axis size");
        PhaseBinning b = binning_;
        int* target[4] = {&b.nx, &b.ny, &b.ntheta, &b.nfiber};
        *target[axis] /= factor;
        Histogram out(b);
        out.outside_ = outside_;
        for (int i = 0; i < dims[0]; ++i)
            for (int j = 0; j < dims[1]; ++j)
                for (int t = 0; t < dims[2]; ++t)
                    for (int f = 0; f < dims[3]; ++f) {
                        int c[4] = {i, j, t, f};
                        c[axis] /= factor;
                        const long from = binning_.flat(i, j, t, f), to = b.flat(c[0], c[1], c[2], c[3]);
                        out.mass_[to] += mass_[from];
                        out.count_[to] += count_[from];
                    }
        return out;
    }

    /// Marginal along one axis.
    std::vector<double> marginal(int axis) const {
        const int dims[4] = {binning_.nx, binning_.ny, binning_.ntheta, binning_.nfiber};
        std::vector<double> out(static_cast<std::size_t>(dims[axis]), 0.0);
        for (int i = 0; i < dims[0]; ++i)
            for (int j = 0; j < dims[1]; ++j)
                for (int t = 0; t < dims[2]; ++t)
                    for (int f = 0; f < dims[3]; ++f) {
                        const int c[4] = {i, j, t, f};
                        out[c[axis]] += mass_[binning_.flat(i, j, t, f)];
                    }
        return out;
    }

private:
    PhaseBinning binning_;
    std::vector<double> mass_;
    std::vector<long> count_;
    long outside_ = 0;
};

using DensityEstimate = Histogram;

/// Total variation 0.5 * sum |p - q| of two mass vectors, each normalized.
inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw ConfigError("total_variation: binnings differ");
    double sp = 0.0, sq = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        sp += p[k];
        sq += q[k];
    }
    if (sp <= 0.0 || sq <= 0.0) throw DomainError("total_variation: empty histogram");
    double tv = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) tv += std::abs(p[k] / sp - q[k] / sq);
    return 0.5 * tv;
}

inline double total_variation(const Histogram& a, const Histogram& b) { return total_variation(a.masses(), b.masses()); }

/// Liouville x Lebesgue on the phase binning of the quotient surface, by
/// midpoint quadrature of the hyperbolic area density on sub x sub cells.
inline Histogram liouville_histogram(const FuchsianDomain& domain, const PhaseBinning& b, int sub = 8) {
    Histogram h(b);
    const double hx = 2.0 * b.radius / b.nx, hy = 2.0 * b.radius / b.ny;
    for (int i = 0; i < b.nx; ++i)
        for (int j = 0; j < b.ny; ++j) {
            double area = 0.0;
            for (int a = 0; a < sub; ++a)
                for (int c = 0; c < sub; ++c) {
                    const double x = -b.radius + hx * (i + (a + 0.5) / sub), y = -b.radius + hy * (j + (c + 0.5) / sub);
                    const double r2 = x * x + y * y;
                    if (r2 >= 1.0 || !domain.inside({x, y}, 0.0)) continue;
                    area += 4.0 / ((1.0 - r2) * (1.0 - r2));
                }
            area *= hx * hy / (sub * sub);
            for (int t = 0; t < b.ntheta; ++t)
                for (int f = 0; f < b.nfiber; ++f) h.masses()[b.flat(i, j, t, f)] = area / (b.ntheta * b.nfiber);
        }
    return h.normalize();
}

// Unstable arcs, realized as outward normals of a circle of radius R centred
// at G_{-R}(v0), all in the disc.

inline UnitTangentVector unstable_arc_vector(const UnitTangentVector& v0, double angle_offset, double R = 15.0) {
    const PoincareDisc disc;
    const ChartPoint c = ray_point(disc, flip(v0), R, {});
    const double toward = direction_to(disc, c, v0.base);
    const ChartPoint p = ray_point(disc, UnitTangentVector{c, toward + angle_offset}, R, {});
    return {p, wrap_angle(direction_to(disc, p, c) + pi)};
}

/// Ensemble approximating (1/T) int_0^T G_t*(Leb on the unstable arc of
/// length `arc` through v0) dt on the quotient surface.
inline EmpiricalMeasure ugibbs_estimate(const FuchsianDomain& domain, const UnitTangentVector& v0, double arc, double T,
                                       std::size_t n, std::uint64_t seed, int workers = 1,
                                       const FlowParams& fp = {1e-2, 16, 1e-9}, double R = 15.0) {
    if (n == 0 || !(arc > 0.0) || !(T >= 0.0)) throw ConfigError("ugibbs_estimate: need n > 0, arc > 0, T >= 0");
    const double delta = arc / std::sinh(R);
    const PoincareDisc disc;
    auto out = parallel_map(n, workers, [&](std::size_t i) {
        Rng rng(seed, i);
        const double s = delta * (rng.uniform() - 0.5), t = T * rng.uniform();
        QuotientOrbit q(disc, domain, unstable_arc_vector(v0, s, R), fp);
        q.advance(t);
        return WeightedSample{q.vector(), 0.0, 1.0 / static_cast<double>(n), t};
    });
    return EmpiricalMeasure(std::move(out));
}

/// Time-t image of an ensemble on the quotient surface (fibers carried by
/// the suspension holonomy).
inline EmpiricalMeasure flow_image(const SuspensionFoliation& susp, const EmpiricalMeasure& m, double t, int workers = 1,
                                   const FlowParams& fp = {1e-2, 16, 1e-9}) {
    auto out = parallel_map(m.size(), workers, [&](std::size_t i) {
        const auto& s = m.samples()[i];
        const auto st = foliated_flow(susp, {s.v, s.fiber}, t, fp);
        return WeightedSample{st.v, st.fiber, s.weight, s.time + t};
    });
    return EmpiricalMeasure(std::move(out));
}

/// The vector of the unstable manifold of v based at q.
template <BoundaryModel M>
UnitTangentVector horocycle_point(const M& m, const UnitTangentVector& v, ChartPoint q, const BoundaryParams& bp = {}) {
    const BoundaryPoint xi = ray_endpoint(m, flip(v), bp.T, bp.flow);
    const UnitTangentVector vq = vector_from(m, xi, q, bp);
    const double beta = busemann(m, xi, v.base, q, bp).value;
    // vq lies on the horocycle of q; flowing back by beta reaches that of v
    return flow(m, vq, -beta, bp.flow);
}

/// Truncated limit of J^u G_{-t}(z2) / J^u G_{-t}(z1) for z1, z2 on one
/// unstable manifold, with diagnostic |ratio(T) - ratio(T/2)|.
template <SurfaceModel M>
Truncated gibbs_density_ratio_check(const M& m, const UnitTangentVector& z1, const UnitTangentVector& z2, double T,
                                    const RiccatiParams& rp = {{1e-2, 16, 1e-9}, 0.0, 10.0}) {
    if (z1.base == z2.base && z1.theta == z2.theta) return {1.0, 0.0};
    const auto ratio = [&](double t) {
        return std::exp(log_unstable_jacobian(m, z2, -t, rp) - log_unstable_jacobian(m, z1, -t, rp));
    };
    const double full = ratio(T);
    return {full, std::abs(full - ratio(0.5 * T))};
}

/// Endpoints of G_t for n uniform random directions at x in a simply
/// connected model.
template <class M>
EmpiricalMeasure diffuse_dirac(const M& m, ChartPoint x, double t, std::size_t n, std::uint64_t seed, int workers = 1,
                               const FlowParams& fp = {1e-2, 16, 1e-9}) {
    if (n == 0) throw ConfigError("diffuse_dirac: need n > 0");
    auto out = parallel_map(n, workers, [&](std::size_t i) {
        Rng rng(seed, i);
        const UnitTangentVector v{x, two_pi * rng.uniform()};
        return WeightedSample{t == 0.0 ? v : flow(m, v, t, fp), 0.0, 1.0 / static_cast<double>(n), t};
    });
    return EmpiricalMeasure(std::move(out));
}

namespace detail {

// Samples G_{t_i}(x, theta_i) on the suspension with time_of(rng) choosing t_i.
template <class TimeOf>
EmpiricalMeasure suspension_ensemble(const SuspensionFoliation& susp, ChartPoint x, double fiber, std::size_t n,
                                     std::uint64_t seed, int workers, const FlowParams& fp, TimeOf&& time_of) {
    if (n == 0) throw ConfigError("diffusion: need n > 0");
    if (!susp.base().inside({x.x, x.y}, 0.0)) throw DomainError("diffusion: basepoint outside the polygon");
    auto out = parallel_map(n, workers, [&](std::size_t i) {
        Rng rng(seed, i);
        const double theta = two_pi * rng.uniform(), t = time_of(rng);
        const auto st = foliated_flow(susp, {{x, theta}, fiber}, t, fp);
        return WeightedSample{st.v, st.fiber, 1.0 / static_cast<double>(n), t};
    });
    return EmpiricalMeasure(std::move(out));
}

}  // namespace detail

/// m_{t,x} on the suspension: n uniform directions at (x, fiber) flowed for t.
inline EmpiricalMeasure diffuse_dirac(const SuspensionFoliation& susp, ChartPoint x, double fiber, double t,
                                     std::size_t n, std::uint64_t seed, int workers = 1,
                                     const FlowParams& fp = {1e-2, 16, 1e-9}) {
    return detail::suspension_ensemble(susp, x, fiber, n, seed, workers, fp, [t](Rng&) { return t; });
}

/// m_T: directions and times uniform in [0, T].
inline EmpiricalMeasure cesaro_diffusion(const SuspensionFoliation& susp, ChartPoint x, double fiber, double T,
                                        std::size_t n, std::uint64_t seed, int workers = 1,
                                        const FlowParams& fp = {1e-2, 16, 1e-9}) {
    if (!(T >= 0.0)) throw ConfigError("cesaro_diffusion: need T >= 0");
    return detail::suspension_ensemble(susp, x, fiber, n, seed, workers, fp, [T](Rng& r) { return T * r.uniform(); });
}

/// Fiber marginal of an ensemble as a transverse histogram.
inline TransverseMeasure fiber_marginal(const EmpiricalMeasure& m, int bins) {
    TransverseMeasure nu(bins);
    for (const auto& s : m.samples()) nu.add(s.fiber, s.weight);
    return nu;
}

using Observable = std::function<double(const UnitTangentVector&, double fiber)>;

/// Running Cesaro averages of D_t f at T/4, T/2 and T.
struct BirkhoffEstimate {
    double quarter = 0.0, half = 0.0, full = 0.0;
    double cauchy() const { return std::abs(full - half); }
};

inline std::vector<BirkhoffEstimate> birkhoff_averages(const EmpiricalMeasure& m, double T,
                                                       const std::vector<Observable>& fs) {
    std::vector<BirkhoffEstimate> out(fs.size());
    for (std::size_t j = 0; j < fs.size(); ++j) {
        double sum[3] = {0, 0, 0}, w[3] = {0, 0, 0};
        for (const auto& s : m.samples()) {
            const double v = fs[j](s.v, s.fiber);
            const double cut[3] = {0.25 * T, 0.5 * T, T};
            for (int c = 0; c < 3; ++c)
                if (s.time <= cut[c]) {
                    sum[c] += s.weight * v;
                    w[c] += s.weight;
                }
        }
        const auto avg = [&](int c) { return w[c] > 0.0 ? sum[c] / w[c] : std::nan(""); };
        out[j] = {avg(0), avg(1), avg(2)};
    }
    return out;
}

inline std::vector<BirkhoffEstimate> birkhoff_Dt(const SuspensionFoliation& susp, const std::vector<Observable>& fs,
                                                 ChartPoint x, double fiber, double T, std::size_t n,
                                                 std::uint64_t seed, int workers = 1,
                                                 const FlowParams& fp = {1e-2, 16, 1e-9}) {
    return birkhoff_averages(cesaro_diffusion(susp, x, fiber, T, n, seed, workers, fp), T, fs);
}

/// Point of the leaf through (x, fiber) reached by a geodesic segment of
/// length s in direction theta whose holonomy word is trivial.
inline FoliatedState same_leaf_point(const SuspensionFoliation& susp, ChartPoint x, double fiber, double theta, double s,
                                     const FlowParams& fp = {1e-3, 16, 1e-9}) {
    const auto r = quotient_flow(PoincareDisc{}, susp.base(), {x, theta}, s, fp);
    if (!r.word.empty()) throw DomainError("same_leaf_point: path crosses a side of the polygon");
    return {r.v, fiber};
}

/// Indicator of (polar sector of the base) x (fiber interval).
inline Observable sector_indicator(double angle_lo, double angle_hi, double fiber_lo, double fiber_hi) {
    return [=](const UnitTangentVector& v, double f) {
        const double a = wrap_angle(std::atan2(v.base.y, v.base.x));
        return (a >= angle_lo && a < angle_hi && f >= fiber_lo && f < fiber_hi) ? 1.0 : 0.0;
    };
}

enum class KernelForm { potential, jacobian };

/// h(z) = int k^u(o, z; xi) d eta(xi); atoms summed exactly, histograms by
/// the midpoint rule.
template <BoundaryModel M>
double phiu_harmonic_density(const M& m, const BoundaryMeasure& eta, ChartPoint o, ChartPoint z,
                             KernelForm form = KernelForm::potential, const BoundaryParams& bp = {}) {
    const auto k = [&](double xi) {
        const BoundaryPoint p(xi);
        return form == KernelForm::potential ? gibbs_kernel_potential_form(m, o, z, p, bp).value
                                             : gibbs_kernel_jacobian_form(m, o, z, p, bp).value;
    };
    if (o == z) return eta.total_mass();
    double h = 0.0;
    if (eta.is_histogram()) {
        for (int i = 0; i < eta.bins(); ++i)
            if (eta.masses()[i] != 0.0) h += eta.masses()[i] * k(eta.bin_left(i) + 0.5 * eta.bin_width());
    } else {
        for (const auto& a : eta.atom_list()) h += a.weight * k(a.xi.xi);
    }
    return h;
}

/// Exact visibility (harmonic) measure from x of equal bins of the ideal
/// circle of the disc.
inline std::vector<double> disc_visibility_bins(ChartPoint x, int bins) {
    const cplx p(x.x, x.y);
    const auto to_centre = [&](double a) { return std::arg((std::polar(1.0, a) - p) / (1.0 - std::conj(p) * std::polar(1.0, a))); };
    std::vector<double> out(static_cast<std::size_t>(bins));
    for (int k = 0; k < bins; ++k) {
        double d = to_centre(two_pi * (k + 1) / bins) - to_centre(two_pi * k / bins);
        if (d < 0.0) d += two_pi;
        out[k] = d / two_pi;
    }
    return out;
}

struct CharacteristicLevel {
    std::size_t samples = 0;
    std::size_t accepted = 0;
    int bins = 0;
    double tv = 0.0;
    std::size_t low_confidence = 0;  // bins with expected count below 5
};

struct CharacteristicReport {
    std::vector<CharacteristicLevel> levels;
    bool decreasing() const {
        for (std::size_t k = 1; k < levels.size(); ++k)
            if (!(levels[k].tv < levels[k - 1].tv)) return false;
        return true;
    }
    bool non_decreasing() const {
        for (std::size_t k = 1; k < levels.size(); ++k)
            if (!(levels[k].tv >= levels[k - 1].tv)) return false;
        return true;
    }
};

/// Conditional of the Cesaro ensemble on a thin neighbourhood of the leaf
/// basepoint (x, fiber), pushed to the ideal circle by the backward endpoint
/// seen from x, against the visibility measure of x. Each level is a
/// (sample count, bin count, fiber half-width) triple; levels share one
/// ensemble.
struct ResolutionLevel {
    std::size_t samples;
    int bins;
    double eps_fiber;
};

inline CharacteristicReport characteristic_vs_visibility(const SuspensionFoliation& susp, ChartPoint x, double fiber,
                                                         double T, const std::vector<ResolutionLevel>& levels,
                                                         double eps_base, std::uint64_t seed,
                                                         int workers = 1, const FlowParams& fp = {1e-2, 16, 1e-9}) {
    if (levels.empty()) throw ConfigError("characteristic_vs_visibility: no resolution levels");
    std::size_t n = 0;
    double eps_fiber = 0.0;
    for (const auto& l : levels) {
        eps_fiber = std::max(eps_fiber, l.eps_fiber);
        if (l.samples == 0 || l.bins < 1) throw ConfigError("characteristic_vs_visibility: empty level");
        n = std::max(n, l.samples);
    }
    const PoincareDisc disc;
    const cplx px(x.x, x.y);
    // (endpoint angle transported from the sample base z to x, fiber offset),
    // NaN angle when rejected
    const auto ends = parallel_map(n, workers, [&](std::size_t i) {
        Rng rng(seed, i);
        const double theta = two_pi * rng.uniform(), t = T * rng.uniform();
        const auto st = foliated_flow(susp, {{x, theta}, fiber}, t, fp);
        const double df = std::abs(std::remainder(st.fiber - fiber, 1.0));
        if (df > eps_fiber || distance(disc, st.v.base, x) > eps_base) return std::pair{std::nan(""), df};
        const cplx z(st.v.base.x, st.v.base.y), e = detail::disc_endpoint(flip(st.v)).on_disc();
        const cplx w = (e - z) / (1.0 - std::conj(z) * e);
        return std::pair{wrap_angle(std::arg((w + px) / (1.0 + std::conj(px) * w))), df};
    });
    CharacteristicReport rep;
    for (const auto& level : levels) {
        CharacteristicLevel lv;
        lv.samples = level.samples;
        lv.bins = level.bins;
        const auto vis = disc_visibility_bins(x, lv.bins);
        std::vector<double> hist(vis.size(), 0.0);
        for (std::size_t i = 0; i < lv.samples; ++i)
            if (!std::isnan(ends[i].first) && ends[i].second <= level.eps_fiber) {
                hist[std::min(lv.bins - 1, static_cast<int>(ends[i].first / two_pi * lv.bins))] += 1.0;
                ++lv.accepted;
            }
        for (double v : vis) lv.low_confidence += (v * static_cast<double>(lv.accepted) < 5.0) ? 1 : 0;
        lv.tv = lv.accepted > 0 ? total_variation(hist, vis) : 1.0;
        rep.levels.push_back(lv);
    }
    return rep;
}

}  // namespace leafgibbs
