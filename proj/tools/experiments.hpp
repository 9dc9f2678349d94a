#pragma once

#include <chrono>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "leafgibbs/measures.hpp"

#ifndef LEAFGIBBS_DATA_DIR
#define LEAFGIBBS_DATA_DIR "data"
#endif

namespace leafgibbs::cli {

struct Context {
    std::uint64_t seed = 0;
    int workers = 1;
};

struct Outcome {
    json statistics = json::object();
    json diagnostics = json::object();
    std::string csv;
    std::string summary;
    std::vector<std::string> flags;  // convergence diagnostics over tolerance
};

using Runner = std::function<Outcome(Params&, const Context&)>;

struct Experiment {
    std::string name;
    std::string description;
    Runner run;
};

namespace detail {

inline std::ostringstream csv_stream() {
    std::ostringstream os;
    os.precision(17);
    return os;
}

inline MetricModel make_model(Params& P, const std::string& fallback) {
    const auto type = P.get<std::string>("model.type", fallback);
    if (type == "upper_half_plane") return UpperHalfPlane{};
    if (type == "disc") return PoincareDisc{};
    if (type == "rotational") {
        const double a = P.positive("model.a", 0.8), b = P.positive("model.b", 1.25);
        const double w = P.get<double>("model.weight_a", 0.9);
        if (!(a <= b) || !(w >= 0.0 && w <= 1.0)) throw ConfigError("model: need a <= b and weight_a in [0, 1]");
        return RotationalSinh(SinhMixture::pinched(a, b, w), {a, b});
    }
    if (type == "conformal_grid") {
        const auto path = P.get<std::string>("model.grid", LEAFGIBBS_DATA_DIR "/perturbed_hyperbolic.grid");
        const auto cb = shipped_grid_bounds();
        return ConformalGrid(load_grid(path), {P.positive("model.a", cb.a), P.positive("model.b", cb.b)});
    }
    throw ConfigError("model.type: unknown model '" + type + "'");
}

inline SuspensionFoliation make_suspension(Params& P, const std::string& fallback) {
    const auto type = P.get<std::string>("suspension.holonomy", fallback);
    if (type == "rotation")
        return SuspensionFoliation::rotations(P.get<std::vector<double>>(
            "suspension.rotations", {std::sqrt(2.0) - 1.0, 0.5 * (std::sqrt(5.0) - 1.0), pi - 3.0, std::numbers::e - 2.0}));
    if (type == "moebius") return SuspensionFoliation::fuchsian_moebius();
    if (type == "trivial") return SuspensionFoliation::trivial();
    throw ConfigError("suspension.holonomy: unknown holonomy '" + type + "'");
}

inline RiccatiParams riccati_params(Params& P) {
    return {{P.positive("params.dt", 1e-2), 16, 1e-9}, P.get<double>("params.burn_in", 0.0), 10.0};
}

inline FlowParams flow_params(Params& P) { return {P.positive("params.dt", 1e-2), 16, 1e-9}; }

inline BoundaryParams boundary_params(Params& P) {
    BoundaryParams bp;
    bp.T = P.positive("params.T", 20.0);
    bp.flow = flow_params(P);
    bp.riccati = riccati_params(P);
    bp.shooting.flow = bp.flow;
    bp.diagnostic_tol = P.positive("params.diagnostic_tol", 1e-4);
    return bp;
}

// Point of the model given by its position w in a disc chart centred at the
// model's reference point.
inline ChartPoint from_disc(const MetricModel& m, cplx w) {
    return std::visit(
        [&](const auto& x) -> ChartPoint {
            using M = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<M, PoincareDisc>) {
                return {w.real(), w.imag()};
            } else if constexpr (std::is_same_v<M, UpperHalfPlane>) {
                const cplx z = cplx(0.0, 1.0) * (1.0 + w) / (1.0 - w);
                return {z.real(), z.imag()};
            } else if constexpr (std::is_same_v<M, ConformalGrid>) {
                return {0.8 * w.real(), 1.6 + 0.8 * w.imag()};
            } else {
                return {2.0 * std::atanh(std::abs(w)), wrap_angle(std::arg(w))};
            }
        },
        m);
}

inline ChartPoint reference_point(const MetricModel& m) { return from_disc(m, 0.0); }

inline ChartPoint sample_point(const MetricModel& m, Rng& rng, double radius = 0.7) {
    return from_disc(m, std::polar(radius * std::sqrt(rng.uniform()), two_pi * rng.uniform()));
}

inline json point_json(ChartPoint p) { return json::array({p.x, p.y}); }

inline ChartPoint point_param(Params& P, const std::string& key, ChartPoint fallback) {
    const auto v = P.get<std::vector<double>>(key, {fallback.x, fallback.y});
    if (v.size() != 2) throw ConfigError(key + " must be [x, y]");
    return {v[0], v[1]};
}

template <class F>
auto with_boundary(const MetricModel& m, const char* op, F&& f) {
    return leafgibbs::detail::visit_boundary(m, op, std::forward<F>(f));
}

// Isometry of the model: acts on points and on boundary points.
struct ModelIsometry {
    std::function<ChartPoint(ChartPoint)> point;
    std::function<BoundaryPoint(BoundaryPoint)> boundary;
};

inline ModelIsometry sample_isometry(const MetricModel& m, Rng& rng) {
    const double a = two_pi * rng.uniform(), s = 0.3 + rng.uniform();
    if (std::holds_alternative<UpperHalfPlane>(m)) {
        const Mat2 g{std::cosh(0.5 * s), std::sinh(0.5 * s), std::sinh(0.5 * s), std::cosh(0.5 * s)};
        const Mat2 h{1.0, 2.0 * rng.uniform() - 1.0, 0.0, 1.0};
        return {[=](ChartPoint p) { return apply(h, apply(g, p)); },
                [=](BoundaryPoint xi) { return apply(h, apply(g, xi)); }};
    }
    if (std::holds_alternative<PoincareDisc>(m)) {
        const auto g = DiscIsometry::translation(s, a) * DiscIsometry::rotation(a);
        return {[=](ChartPoint p) { return apply(g, p); }, [=](BoundaryPoint xi) { return apply(g, xi); }};
    }
    // rotations about the pole
    return {[=](ChartPoint p) { return ChartPoint{p.x, wrap_angle(p.y + a)}; },
            [=](BoundaryPoint xi) { return BoundaryPoint(xi.xi + a); }};
}

inline double max_of(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, x);
    return m;
}

inline std::string fmt(double x) {
    std::ostringstream os;
    os.precision(3);
    os << x;
    return os.str();
}

inline void flag_if(Outcome& o, bool bad, const std::string& what) {
    if (bad) o.flags.push_back(what);
}

}  // namespace detail

// Curvature, slopes, Jacobian chain rule and distortion on a sample of
// unit vectors.
inline Outcome run_pinching(Params& P, const Context& ctx) {
    using namespace detail;
    const auto model = make_model(P, "rotational");
    const std::size_t n = P.count("params.n", 1000), n_chain = P.count("params.n_chain", 50),
                      n_dist = P.count("params.n_distortion", 20);
    const auto rp = riccati_params(P);
    const double tol = P.positive("params.tol", 1e-6), tol_chain = P.positive("params.tol_chain", 1e-6),
                 tol_dist = P.positive("params.tol_distortion", 1e-5);
    const double T1 = P.positive("params.T", 20.0), T2 = P.positive("params.T_long", 40.0);
    P.finish();
    const auto cb = bounds(model);
    struct Row {
        UnitTangentVector v;
        double K, U, S;
    };
    const auto rows = parallel_map(n, ctx.workers, [&](std::size_t i) {
        Rng rng(ctx.seed, i);
        const UnitTangentVector v{sample_point(model, rng), two_pi * rng.uniform()};
        return std::visit(
            [&](const auto& m) { return Row{v, m.curvature(v.base), unstable_slope(m, v, rp), stable_slope(m, v, rp)}; },
            model);
    });
    Outcome o;
    auto os = csv_stream();
    os << "x,y,theta,K,U,S\n";
    double kmin = 1e300, kmax = -1e300, umin = 1e300, umax = -1e300, smin = 1e300, smax = -1e300;
    std::size_t violations = 0;
    for (const auto& r : rows) {
        os << r.v.base.x << ',' << r.v.base.y << ',' << r.v.theta << ',' << r.K << ',' << r.U << ',' << r.S << '\n';
        kmin = std::min(kmin, r.K), kmax = std::max(kmax, r.K);
        umin = std::min(umin, r.U), umax = std::max(umax, r.U);
        smin = std::min(smin, r.S), smax = std::max(smax, r.S);
        const bool bad = r.K < -cb.b * cb.b - tol || r.K > -cb.a * cb.a + tol || r.U < cb.a - tol || r.U > cb.b + tol ||
                         r.S < -cb.b - tol || r.S > -cb.a + tol;
        violations += bad ? 1 : 0;
    }
    const auto chain = parallel_map(n_chain, ctx.workers, [&](std::size_t i) {
        Rng rng(ctx.seed ^ 0x5bd1e995ULL, i);
        const UnitTangentVector v{sample_point(model, rng), two_pi * rng.uniform()};
        const double s = 3.0 * rng.uniform(), t = 0.5 + 4.0 * rng.uniform();
        return std::visit(
            [&](const auto& m) {
                const double lhs = log_unstable_jacobian(m, v, s + t, rp);
                const double rhs = log_unstable_jacobian(m, flow(m, v, s, rp.flow), t, rp) + log_unstable_jacobian(m, v, s, rp);
                return std::abs(std::expm1(lhs - rhs));
            },
            model);
    });
    // distortion: pairs on one unstable horocycle, truncation T against T_long
    std::vector<double> dist_cauchy, dist_log;
    if (!std::holds_alternative<ConformalGrid>(model)) {
        const auto res = parallel_map(n_dist, ctx.workers, [&](std::size_t i) {
            Rng rng(ctx.seed ^ 0x27d4eb2fULL, i);
            const UnitTangentVector v{sample_point(model, rng, 0.5), two_pi * rng.uniform()};
            return with_boundary(model, "distortion", [&](const auto& m) {
                BoundaryParams bp;
                bp.flow = rp.flow;
                bp.riccati = rp;
                bp.shooting.flow = rp.flow;
                const ChartPoint q = flow(m, UnitTangentVector{v.base, v.theta + 0.5 * pi}, 0.5, rp.flow).base;
                const auto w = horocycle_point(m, v, q, bp);
                const double l1 = log_distortion_ratio(m, v, w, T1, rp), l2 = log_distortion_ratio(m, v, w, T2, rp);
                return std::pair{std::abs(std::exp(l2) - std::exp(l1)), l2};
            });
        });
        for (const auto& [c, l] : res) {
            dist_cauchy.push_back(c);
            dist_log.push_back(std::abs(l));
        }
    }
    o.csv = os.str();
    o.statistics = {{"model", model_name(model)},
                    {"K", {kmin, kmax}},
                    {"U", {umin, umax}},
                    {"S", {smin, smax}},
                    {"bounds", {cb.a, cb.b}},
                    {"violations", violations},
                    {"chain_rule_max_rel_error", max_of(chain)},
                    {"distortion_cauchy_max", max_of(dist_cauchy)},
                    {"distortion_log_ratio_max", max_of(dist_log)}};
    o.diagnostics = {{"samples", n}, {"chain_samples", n_chain}, {"distortion_pairs", dist_cauchy.size()}};
    flag_if(o, violations > 0, "pinching bounds violated at " + std::to_string(violations) + " samples");
    flag_if(o, max_of(chain) > tol_chain, "chain rule error " + fmt(max_of(chain)));
    flag_if(o, max_of(dist_cauchy) > tol_dist, "distortion Cauchy difference " + fmt(max_of(dist_cauchy)));
    o.summary = "U in [" + fmt(umin) + ", " + fmt(umax) + "], S in [" + fmt(smin) + ", " + fmt(smax) + "], " +
                std::to_string(violations) + " violations";
    return o;
}

// Integrated geodesics against closed forms on the constant-curvature models.
inline Outcome run_flow_oracle(Params& P, const Context& ctx) {
    using namespace detail;
    const auto model = make_model(P, "upper_half_plane");
    const std::size_t n = P.count("params.n", 20);
    const double t_max = P.positive("params.t", 5.0), every = P.positive("params.sample_every", 0.5);
    const auto fp = flow_params(P);
    const double tol = P.positive("params.tol", 1e-6);
    P.finish();
    const bool half = std::holds_alternative<UpperHalfPlane>(model);
    if (!half && !std::holds_alternative<PoincareDisc>(model))
        throw ConfigError("flow-oracle needs model.type upper_half_plane or disc");
    const int stride = std::max(1, static_cast<int>(std::lround(every / fp.dt)));
    // exact position at time t: move the base point to the centre of the disc
    const auto exact = [&](const UnitTangentVector& v, double t) {
        const cplx z(v.base.x, v.base.y), w = std::tanh(0.5 * t) * std::polar(1.0, half ? v.theta - 0.5 * pi : v.theta);
        const cplx p = half ? (z - std::conj(z) * w) / (1.0 - w) : (w + z) / (1.0 + std::conj(z) * w);
        return ChartPoint{p.real(), p.imag()};
    };
    const auto runs = parallel_map(n, ctx.workers, [&](std::size_t i) {
        Rng rng(ctx.seed, i);
        const UnitTangentVector v{sample_point(model, rng, 0.5), two_pi * rng.uniform()};
        std::vector<TrajectorySample> traj;
        flow(model, v, t_max, fp, &traj, stride);
        return std::pair{v, traj};
    });
    Outcome o;
    auto os = csv_stream();
    os << "orbit,t,x,y,theta,x_exact,y_exact,error\n";
    double worst = 0.0;
    for (std::size_t i = 0; i < runs.size(); ++i)
        for (const auto& s : runs[i].second) {
            const ChartPoint e = exact(runs[i].first, s.t);
            const double err = std::hypot(s.v.base.x - e.x, s.v.base.y - e.y);
            worst = std::max(worst, err);
            os << i << ',' << s.t << ',' << s.v.base.x << ',' << s.v.base.y << ',' << s.v.theta << ',' << e.x << ','
               << e.y << ',' << err << '\n';
        }
    o.csv = os.str();
    o.statistics = {{"model", model_name(model)}, {"max_position_error", worst}};
    o.diagnostics = {{"orbits", n}, {"t_max", t_max}};
    flag_if(o, worst > tol, "closed-form mismatch " + fmt(worst));
    o.summary = "max position error " + fmt(worst) + " over " + std::to_string(n) + " orbits";
    return o;
}

// Slopes, potential and the Liouville identity residual.
inline Outcome run_riccati(Params& P, const Context& ctx) {
    using namespace detail;
    const auto model = make_model(P, "upper_half_plane");
    const std::size_t n = P.count("params.n", 100);
    const double t = P.get<double>("params.t", 5.0);
    const auto rp = riccati_params(P);
    const double tol = P.positive("params.tol", 1e-4);
    P.finish();
    struct Row {
        UnitTangentVector v;
        double U, S, phi, residual;
    };
    const auto rows = parallel_map(n, ctx.workers, [&](std::size_t i) {
        Rng rng(ctx.seed, i);
        const UnitTangentVector v{sample_point(model, rng), two_pi * rng.uniform()};
        return std::visit(
            [&](const auto& m) {
                return Row{v, unstable_slope(m, v, rp), stable_slope(m, v, rp), potential_phi_u(m, v, rp),
                           liouville_identity_residual(m, v, t, rp)};
            },
            model);
    });
    Outcome o;
    auto os = csv_stream();
    os << "x,y,theta,U,S,phi_u,liouville_residual\n";
    std::vector<double> res, du, ds, dphi;
    const bool constant = std::holds_alternative<UpperHalfPlane>(model) || std::holds_alternative<PoincareDisc>(model);
    for (const auto& r : rows) {
        os << r.v.base.x << ',' << r.v.base.y << ',' << r.v.theta << ',' << r.U << ',' << r.S << ',' << r.phi << ','
           << r.residual << '\n';
        res.push_back(std::abs(r.residual));
        du.push_back(std::abs(r.U - 1.0));
        ds.push_back(std::abs(r.S + 1.0));
        dphi.push_back(std::abs(r.phi + 1.0));
    }
    o.csv = os.str();
    o.statistics = {{"model", model_name(model)}, {"liouville_residual_max", max_of(res)}};
    if (constant) {
        o.statistics["U_minus_1_max"] = max_of(du);
        o.statistics["S_plus_1_max"] = max_of(ds);
        o.statistics["phi_u_plus_1_max"] = max_of(dphi);
    }
    o.diagnostics = {{"samples", n}, {"t", t}};
    flag_if(o, max_of(res) > tol, "Liouville identity residual " + fmt(max_of(res)));
    o.summary = "Liouville residual " + fmt(max_of(res)) + " over " + std::to_string(n) + " vectors";
    return o;
}

// Potential and Jacobian forms of the Gibbs kernel, cocycle and equivariance.
inline Outcome run_kernel(Params& P, const Context& ctx) {
    using namespace detail;
    const auto model = make_model(P, "upper_half_plane");
    const std::size_t n = P.count("params.n", 100);
    const auto bp = boundary_params(P);
    const double tol = P.positive("params.tol", 1e-4), tol_cocycle = P.positive("params.tol_cocycle", 1e-4),
                 tol_equiv = P.positive("params.tol_equivariance", 1e-5);
    const bool algebra = P.get<bool>("params.algebra", true);
    P.finish();
    struct Row {
        KernelRow k;
        double rel, cocycle, equivariance;
    };
    const auto rows = parallel_map(n, ctx.workers, [&](std::size_t i) {
        Rng rng(ctx.seed, i);
        const ChartPoint o = sample_point(model, rng, 0.5), z = sample_point(model, rng, 0.5),
                         w = sample_point(model, rng, 0.5);
        const BoundaryPoint xi(two_pi * rng.uniform());
        const auto g = sample_isometry(model, rng);
        return with_boundary(model, "kernel", [&](const auto& m) {
            Row r;
            const auto kp = gibbs_kernel_potential_form(m, o, z, xi, bp);
            const auto kj = gibbs_kernel_jacobian_form(m, o, z, xi, bp);
            r.k = {o, z, xi, kp.value, kj.value, std::max(kp.diagnostic, kj.diagnostic)};
            r.rel = std::abs(kp.value - kj.value) / kj.value;
            r.cocycle = r.equivariance = 0.0;
            if (algebra) {
                const double kzw = gibbs_kernel_potential_form(m, z, w, xi, bp).value;
                const double kow = gibbs_kernel_potential_form(m, o, w, xi, bp).value;
                r.cocycle = std::abs(kp.value * kzw / kow - 1.0);
                const double moved = gibbs_kernel_potential_form(m, g.point(o), g.point(z), g.boundary(xi), bp).value;
                r.equivariance = std::abs(moved / kp.value - 1.0);
            }
            return r;
        });
    });
    Outcome o;
    std::vector<KernelRow> krows;
    std::vector<double> rel, diag, coc, eq;
    for (const auto& r : rows) {
        krows.push_back(r.k);
        rel.push_back(r.rel);
        diag.push_back(r.k.diagnostic);
        coc.push_back(r.cocycle);
        eq.push_back(r.equivariance);
    }
    auto os = csv_stream();
    write_kernel_csv(os, krows);
    o.csv = os.str();
    o.statistics = {{"model", model_name(model)},
                    {"max_rel_difference", max_of(rel)},
                    {"max_cocycle_residual", max_of(coc)},
                    {"max_equivariance_residual", max_of(eq)}};
    o.diagnostics = {{"triples", n}, {"max_truncation_diagnostic", max_of(diag)}, {"T", bp.T}};
    flag_if(o, max_of(rel) > tol, "kernel forms differ by " + fmt(max_of(rel)));
    flag_if(o, max_of(coc) > tol_cocycle, "cocycle residual " + fmt(max_of(coc)));
    flag_if(o, max_of(eq) > tol_equiv, "equivariance residual " + fmt(max_of(eq)));
    flag_if(o, max_of(diag) > bp.diagnostic_tol, "truncation diagnostic " + fmt(max_of(diag)));
    o.summary = "max |k_potential - k_jacobian| / k = " + fmt(max_of(rel)) + " over " + std::to_string(n) + " triples";
    return o;
}

// Truncated Busemann cocycle against closed forms.
inline Outcome run_busemann(Params& P, const Context& ctx) {
    using namespace detail;
    const auto model = make_model(P, "upper_half_plane");
    const std::size_t n = P.count("params.n", 50);
    const auto bp = boundary_params(P);
    const double tol = P.positive("params.tol", 1e-5);
    P.finish();
    const bool half = std::holds_alternative<UpperHalfPlane>(model), disc = std::holds_alternative<PoincareDisc>(model);
    struct Row {
        ChartPoint y, z;
        BoundaryPoint xi;
        Truncated beta;
        double oracle;
    };
    const auto rows = parallel_map(n, ctx.workers, [&](std::size_t i) {
        Rng rng(ctx.seed, i);
        const ChartPoint y = sample_point(model, rng), z = sample_point(model, rng);
        // the point at infinity of the half-plane sits at angle 0 of the disc chart
        const BoundaryPoint xi(half ? 0.0 : two_pi * rng.uniform());
        double oracle = std::nan("");
        if (half) oracle = std::log(y.y / z.y);
        if (disc) {
            const auto poisson = [&](ChartPoint p) {
                return (1.0 - p.x * p.x - p.y * p.y) / std::norm(xi.on_disc() - cplx(p.x, p.y));
            };
            oracle = std::log(poisson(y) / poisson(z));
        }
        return Row{y, z, xi, busemann(model, xi, y, z, bp), oracle};
    });
    Outcome o;
    auto os = csv_stream();
    os << "y_x,y_y,z_x,z_y,xi,beta,oracle,diagnostic\n";
    std::vector<double> err, diag;
    for (const auto& r : rows) {
        os << r.y.x << ',' << r.y.y << ',' << r.z.x << ',' << r.z.y << ',' << r.xi.xi << ',' << r.beta.value << ','
           << r.oracle << ',' << r.beta.diagnostic << '\n';
        if (!std::isnan(r.oracle)) err.push_back(std::abs(r.beta.value - r.oracle));
        diag.push_back(r.beta.diagnostic);
    }
    o.csv = os.str();
    o.statistics = {{"model", model_name(model)}, {"max_oracle_error", err.empty() ? json(nullptr) : json(max_of(err))}};
    o.diagnostics = {{"pairs", n}, {"max_truncation_diagnostic", max_of(diag)}, {"T", bp.T}};
    flag_if(o, !err.empty() && max_of(err) > tol, "Busemann oracle error " + fmt(max_of(err)));
    flag_if(o, max_of(diag) > bp.diagnostic_tol, "truncation diagnostic " + fmt(max_of(diag)));
    o.summary = err.empty() ? "truncation diagnostic " + fmt(max_of(diag)) : "max oracle error " + fmt(max_of(err));
    return o;
}

// Invariance defect and Radon-Nikodym ratios of Lebesgue under the holonomy.
inline Outcome run_suspension_invariance(Params& P, const Context&) {
    using namespace detail;
    const auto susp = make_suspension(P, "rotation");
    const int bins = static_cast<int>(P.count("params.bins", 256));
    P.finish();
    const auto nu = TransverseMeasure::uniform(bins);
    Outcome o;
    std::vector<RadonNikodymEstimate> rn;
    for (int g = 1; g <= susp.base().generator_count(); ++g) rn.push_back(radon_nikodym_estimate(susp, nu, g));
    auto os = csv_stream();
    os << "bin_left";
    for (std::size_t g = 1; g <= rn.size(); ++g) os << ",rn_" << g;
    os << '\n';
    double dev = 0.0;
    for (int k = 0; k < bins; ++k) {
        os << nu.bin_left(k);
        for (const auto& r : rn) {
            os << ',' << r.ratio[k];
            if (!std::isnan(r.ratio[k])) dev = std::max(dev, std::abs(r.ratio[k] - 1.0));
        }
        os << '\n';
    }
    const double defect = invariance_defect(susp, nu);
    o.csv = os.str();
    o.statistics = {{"invariance_defect", defect}, {"max_rn_deviation", dev}, {"relation_defect", susp.relation_defect()}};
    o.diagnostics = {{"bins", bins}};
    o.summary = "invariance defect of Lebesgue " + fmt(defect);
    return o;
}

// Empirical Gibbs u-state on the octagon surface against Liouville.
inline Outcome run_ugibbs(Params& P, const Context& ctx) {
    using namespace detail;
    const std::size_t n = P.count("params.n", 100000);
    const double T = P.get<double>("params.T", 50.0), arc = P.positive("params.arc", 1.0);
    const int bins = static_cast<int>(P.count("params.bins", 64));
    const auto v0p = P.get<std::vector<double>>("params.v0", {0.05, 0.02, 0.3});
    const auto fp = flow_params(P);
    const double t_image = P.get<double>("params.image_time", 1.0);
    P.finish();
    if (v0p.size() != 3) throw ConfigError("params.v0 must be [x, y, theta]");
    const auto domain = FuchsianDomain::regular_octagon();
    const UnitTangentVector v0{{v0p[0], v0p[1]}, v0p[2]};
    const auto m = ugibbs_estimate(domain, v0, arc, T, n, ctx.seed, ctx.workers, fp);
    const auto img = flow_image(SuspensionFoliation::trivial(), m, t_image, ctx.workers, fp);
    const auto tvs = [&](int b) {
        const auto B = PhaseBinning::for_domain(domain, b, b, b);
        const auto h = Histogram::of(m, B);
        return std::tuple{total_variation(h, liouville_histogram(domain, B, b >= 32 ? 4 : 16)),
                          total_variation(h, Histogram::of(img, B)), h.low_confidence_bins()};
    };
    const auto [tv, tv_img, low] = tvs(bins);
    json coarse = json::object();
    for (int b : {4, 8, 16})
        if (b < bins) {
            const auto [c, ci, cl] = tvs(b);
            coarse[std::to_string(b)] = {{"tv_liouville", c}, {"tv_image", ci}};
        }
    Outcome o;
    auto os = csv_stream();
    write_ensemble_csv(os, m);
    o.csv = os.str();
    o.statistics = {{"tv_liouville", tv}, {"tv_image", tv_img}, {"bins_per_axis", bins}};
    o.diagnostics = {{"samples", n}, {"low_confidence_bins", low}, {"coarser_binnings", coarse}};
    o.summary = "TV to Liouville " + fmt(tv) + ", to time-" + fmt(t_image) + " image " + fmt(tv_img) + " at " +
                std::to_string(bins) + "^3 bins";
    return o;
}

// Diffusion of a Dirac mass (fixed time or Cesaro average) on a suspension.
inline Outcome run_diffusion(Params& P, const Context& ctx) {
    using namespace detail;
    const auto susp = make_suspension(P, "rotation");
    const auto mode = P.get<std::string>("params.mode", "cesaro");
    const ChartPoint x = point_param(P, "params.x", {0.0, 0.0});
    const double fiber = P.get<double>("params.fiber", 0.0), T = P.get<double>("params.T", 50.0);
    const std::size_t n = P.count("params.n", 1000000);
    const int fbins = static_cast<int>(P.count("params.fiber_bins", 64));
    const int bbins = static_cast<int>(P.count("params.base_bins", 8));
    const auto fp = flow_params(P);
    P.finish();
    if (mode != "cesaro" && mode != "dirac") throw ConfigError("params.mode must be cesaro or dirac");
    const auto m = mode == "cesaro" ? cesaro_diffusion(susp, x, fiber, T, n, ctx.seed, ctx.workers, fp)
                                    : diffuse_dirac(susp, x, fiber, T, n, ctx.seed, ctx.workers, fp);
    const auto nu = fiber_marginal(m, fbins);
    const double tv_fiber = total_variation(nu.masses(), TransverseMeasure::uniform(fbins).masses());
    const double defect = invariance_defect(susp, nu);
    const auto B = PhaseBinning::for_domain(susp.base(), bbins, bbins, 1);
    const double tv_base = total_variation(Histogram::of(m, B), liouville_histogram(susp.base(), B));
    Outcome o;
    auto os = csv_stream();
    write_ensemble_csv(os, m);
    o.csv = os.str();
    o.statistics = {{"fiber_tv_uniform", tv_fiber}, {"invariance_defect", defect}, {"base_tv_area", tv_base}};
    o.diagnostics = {{"samples", n}, {"fiber_bins", fbins}, {"defect_scale", 2.0 / fbins}};
    o.summary = "fiber TV to uniform " + fmt(tv_fiber) + ", invariance defect " + fmt(defect);
    return o;
}

// Cesaro averages of D_t f from two basepoints of one leaf.
inline Outcome run_birkhoff(Params& P, const Context& ctx) {
    using namespace detail;
    const auto susp = make_suspension(P, "rotation");
    const ChartPoint x = point_param(P, "params.x", {0.0, 0.0});
    const double fiber = P.get<double>("params.fiber", 0.0), T = P.positive("params.T", 50.0);
    const std::size_t n = P.count("params.n", 1000000);
    const double path_angle = P.get<double>("params.path_angle", 0.5), path_length = P.positive("params.path_length", 0.6);
    const auto obs = P.get<std::vector<std::vector<double>>>(
        "params.observables", {{0.0, 0.25 * pi, 0.0, 0.5},
                               {0.25 * pi, 0.5 * pi, 0.5, 1.0},
                               {0.5 * pi, pi, 0.0, 1.0},
                               {pi, 1.5 * pi, 0.25, 0.75},
                               {1.5 * pi, two_pi, 0.0, 0.25}});
    const auto fp = flow_params(P);
    P.finish();
    std::vector<Observable> fs;
    for (const auto& b : obs) {
        if (b.size() != 4) throw ConfigError("each observable is [angle_lo, angle_hi, fiber_lo, fiber_hi]");
        fs.push_back(sector_indicator(b[0], b[1], b[2], b[3]));
    }
    const auto x2 = same_leaf_point(susp, x, fiber, path_angle, path_length);
    const auto e1 = birkhoff_Dt(susp, fs, x, fiber, T, n, ctx.seed, ctx.workers, fp);
    const auto e2 = birkhoff_Dt(susp, fs, x2.v.base, x2.fiber, T, n, ctx.seed ^ 0x9e3779b97f4a7c15ULL, ctx.workers, fp);
    Outcome o;
    auto os = csv_stream();
    os << "observable,basepoint,quarter,half,full\n";
    json per = json::array();
    double worst = 0.0, cauchy = 0.0;
    for (std::size_t j = 0; j < fs.size(); ++j) {
        os << j << ",0," << e1[j].quarter << ',' << e1[j].half << ',' << e1[j].full << '\n';
        os << j << ",1," << e2[j].quarter << ',' << e2[j].half << ',' << e2[j].full << '\n';
        worst = std::max(worst, std::abs(e1[j].full - e2[j].full));
        cauchy = std::max({cauchy, e1[j].cauchy(), e2[j].cauchy()});
        per.push_back({{"x", e1[j].full}, {"x_prime", e2[j].full}});
    }
    o.csv = os.str();
    o.statistics = {{"max_leaf_difference", worst}, {"observables", per}};
    o.diagnostics = {{"samples_per_basepoint", n},
                     {"x_prime", point_json(x2.v.base)},
                     {"max_cauchy_T_half_T", cauchy}};
    o.summary = "max |f*(x) - f*(x')| = " + fmt(worst) + " over " + std::to_string(fs.size()) + " observables";
    return o;
}

// phi^u-harmonic density of a boundary measure on a grid of points.
inline Outcome run_harmonic_density(Params& P, const Context&) {
    using namespace detail;
    const auto model = make_model(P, "disc");
    const auto eta_type = P.get<std::string>("params.eta", "uniform");
    const int bins = static_cast<int>(P.count("params.bins", 64));
    const double xi = P.get<double>("params.xi", 0.0);
    const auto form = P.get<std::string>("params.form", "potential");
    const auto radii = P.get<std::vector<double>>("params.radii", {0.2, 0.4, 0.55, 0.7});
    const std::size_t per_ring = P.count("params.per_ring", 5);
    const auto bp = boundary_params(P);
    const double tol = P.positive("params.tol", 1e-4);
    P.finish();
    if (form != "potential" && form != "jacobian") throw ConfigError("params.form must be potential or jacobian");
    BoundaryMeasure eta = eta_type == "uniform" ? BoundaryMeasure::uniform(bins)
                          : eta_type == "dirac" ? BoundaryMeasure::dirac(BoundaryPoint(xi))
                                                : throw ConfigError("params.eta must be uniform or dirac");
    const ChartPoint o_pt = reference_point(model);
    const KernelForm kf = form == "potential" ? KernelForm::potential : KernelForm::jacobian;
    Outcome o;
    auto os = csv_stream();
    os << "z_x,z_y,h\n";
    double dev = 0.0;
    std::size_t points = 0;
    for (double r : radii)
        for (std::size_t k = 0; k < per_ring; ++k) {
            const ChartPoint z = from_disc(model, std::polar(r, two_pi * (k + 0.5 * r) / per_ring));
            const double h = with_boundary(model, "harmonic density",
                                           [&](const auto& m) { return phiu_harmonic_density(m, eta, o_pt, z, kf, bp); });
            os << z.x << ',' << z.y << ',' << h << '\n';
            dev = std::max(dev, std::abs(h - eta.total_mass()));
            ++points;
        }
    const bool poisson = eta_type == "uniform" && (std::holds_alternative<UpperHalfPlane>(model) ||
                                                   std::holds_alternative<PoincareDisc>(model));
    o.csv = os.str();
    o.statistics = {{"model", model_name(model)}, {"max_deviation_from_mass", dev}};
    o.diagnostics = {{"points", points}, {"o", point_json(o_pt)}};
    flag_if(o, poisson && dev > tol, "Poisson integral deviates by " + fmt(dev));
    o.summary = "max |h(z) - eta(total)| = " + fmt(dev) + " on " + std::to_string(points) + " points";
    return o;
}

// Characteristic class of the leaf through the basepoint against the
// visibility class.
inline Outcome run_matsumoto(Params& P, const Context& ctx) {
    using namespace detail;
    const auto susp = make_suspension(P, "moebius");
    const ChartPoint x = point_param(P, "params.x", {0.0, 0.0});
    const double fiber = P.get<double>("params.fiber", 0.0), T = P.positive("params.T", 50.0);
    const double eps_base = P.positive("params.eps_base", 0.5);
    const auto lv = P.get<std::vector<std::vector<double>>>("params.levels",
                                                            {{6250, 8, 0.1}, {50000, 16, 0.1}, {400000, 32, 0.1}});
    const auto fp = flow_params(P);
    P.finish();
    std::vector<ResolutionLevel> levels;
    for (const auto& l : lv) {
        if (l.size() != 3 || !(l[0] >= 1) || !(l[1] >= 1) || !(l[2] > 0))
            throw ConfigError("each level is [samples, bins, eps_fiber]");
        levels.push_back({static_cast<std::size_t>(l[0]), static_cast<int>(l[1]), l[2]});
    }
    const auto rep = characteristic_vs_visibility(susp, x, fiber, T, levels, eps_base, ctx.seed, ctx.workers, fp);
    Outcome o;
    auto os = csv_stream();
    os << "level,samples,accepted,bins,tv,low_confidence\n";
    json tvs = json::array();
    std::size_t low = 0;
    for (std::size_t k = 0; k < rep.levels.size(); ++k) {
        const auto& l = rep.levels[k];
        os << k << ',' << l.samples << ',' << l.accepted << ',' << l.bins << ',' << l.tv << ',' << l.low_confidence << '\n';
        tvs.push_back(l.tv);
        low += l.low_confidence;
    }
    o.csv = os.str();
    o.statistics = {{"tv", tvs}, {"decreasing", rep.decreasing()}, {"non_decreasing", rep.non_decreasing()}};
    o.diagnostics = {{"low_confidence_bins", low}};
    o.summary = "TV to visibility by level: ";
    for (std::size_t k = 0; k < rep.levels.size(); ++k) o.summary += (k ? ", " : "") + fmt(rep.levels[k].tv);
    return o;
}

/// All experiments, in listing order.
inline const std::vector<Experiment>& experiments() {
    static const std::vector<Experiment> all{
        {"pinching", "curvature pinching, unstable/stable slope bounds, Jacobian chain rule and distortion", run_pinching},
        {"flow-oracle", "integrated geodesics against closed forms in constant curvature", run_flow_oracle},
        {"riccati", "Riccati slopes, unstable potential and the Liouville angle identity", run_riccati},
        {"kernel", "Gibbs kernel: potential form against Jacobian form, cocycle and isometry equivariance", run_kernel},
        {"busemann", "truncated Busemann cocycle against closed forms", run_busemann},
        {"suspension-invariance", "invariance defect and Radon-Nikodym ratios of Lebesgue under the holonomy",
         run_suspension_invariance},
        {"ugibbs", "flowed unstable arcs approximating a Gibbs u-state, against Liouville", run_ugibbs},
        {"diffusion", "diffusion of a Dirac mass and its Cesaro average on a suspension", run_diffusion},
        {"birkhoff", "Cesaro averages of diffused observables from two basepoints of one leaf", run_birkhoff},
        {"harmonic-density", "harmonic density of a boundary measure through the Gibbs kernel", run_harmonic_density},
        {"matsumoto", "characteristic class of a leaf against the visibility class", run_matsumoto},
    };
    return all;
}

inline const Experiment& find_experiment(const std::string& name) {
    for (const auto& e : experiments())
        if (e.name == name) return e;
    throw ConfigError("unknown experiment '" + name + "'");
}

}  // namespace leafgibbs::cli
