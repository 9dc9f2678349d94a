// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion
// numbers as arguments to run a subset.
#include <chrono>
#include <cstdio>
#include <iostream>
#include <set>

#include "experiments.hpp"

using namespace leafgibbs;
using namespace leafgibbs::cli;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Line {
    bool pass;
    std::string detail;
};

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

Outcome run_experiment(const std::string& name, json cfg, int workers = 0) {
    cfg["experiment"] = name;
    cfg["seed"] = cfg.value("seed", 2024);
    Params P(cfg);
    P.mark_used("experiment");
    P.mark_used("seed");
    return find_experiment(name).run(P, {cfg["seed"].get<std::uint64_t>(), workers});
}

RotationalSinh pinched() { return RotationalSinh(SinhMixture::pinched(0.8, 1.25, 0.9), {0.8, 1.25}); }

// Closed-form half-plane geodesic: send z to the centre of the disc, move
// along a diameter, come back.
ChartPoint half_plane_geodesic(const UnitTangentVector& v, double t) {
    const cplx z(v.base.x, v.base.y), w = std::tanh(0.5 * t) * std::polar(1.0, v.theta - 0.5 * pi);
    const cplx p = (z - std::conj(z) * w) / (1.0 - w);
    return {p.real(), p.imag()};
}

ChartPoint disc_geodesic(const UnitTangentVector& v, double t) {
    const cplx p(v.base.x, v.base.y), w = std::tanh(0.5 * t) * std::polar(1.0, v.theta);
    const cplx q = (w + p) / (1.0 + std::conj(p) * w);
    return {q.real(), q.imag()};
}

Line criterion1() {
    const auto t0 = Clock::now();
    const UpperHalfPlane h;
    const PoincareDisc d;
    const FlowParams fine{1e-3, 16, 1e-9};
    double geo = 0.0, bus = 0.0, slopes = 0.0, phi = 0.0;
    for (int i = 0; i < 20; ++i) {
        Rng rng(101, i);
        const UnitTangentVector vh{{rng.uniform(-1, 1), rng.uniform(0.5, 2.0)}, rng.uniform(0, two_pi)};
        const double r = 0.6 * std::sqrt(rng.uniform()), a = rng.uniform(0, two_pi);
        const UnitTangentVector vd{{r * std::cos(a), r * std::sin(a)}, rng.uniform(0, two_pi)};
        std::vector<TrajectorySample> th, td;
        flow(h, vh, 5.0, fine, &th, 100);
        flow(d, vd, 5.0, fine, &td, 100);
        for (const auto& s : th) {
            const ChartPoint e = half_plane_geodesic(vh, s.t);
            geo = std::max(geo, std::hypot(s.v.base.x - e.x, s.v.base.y - e.y));
        }
        for (const auto& s : td) {
            const ChartPoint e = disc_geodesic(vd, s.t);
            geo = std::max(geo, std::hypot(s.v.base.x - e.x, s.v.base.y - e.y));
        }
        const ChartPoint y{rng.uniform(-1, 1), rng.uniform(0.5, 2.0)}, z{rng.uniform(-1, 1), rng.uniform(0.5, 2.0)};
        bus = std::max(bus, std::abs(busemann(h, BoundaryPoint(0.0), y, z).value - std::log(y.y / z.y)));
        slopes = std::max({slopes, std::abs(unstable_slope(h, vh) - 1.0), std::abs(stable_slope(h, vh) + 1.0),
                           std::abs(unstable_slope(d, vd) - 1.0), std::abs(stable_slope(d, vd) + 1.0)});
        phi = std::max({phi, std::abs(potential_phi_u(h, vh) + 1.0), std::abs(potential_phi_u(d, vd) + 1.0)});
    }
    const double secs = seconds_since(t0);
    return {geo < 1e-6 && bus < 1e-5 && slopes < 1e-8 && phi < 1e-6 && secs < 60.0,
            "geodesic " + num(geo) + " (< 1e-6), busemann " + num(bus) + " (< 1e-5), |U-1|,|S+1| " + num(slopes) +
                " (< 1e-8), |phi_u+1| " + num(phi) + " (< 1e-6), " + num(secs) + " s (< 60)"};
}

struct Triple {
    ChartPoint o, z, w;
    BoundaryPoint xi;
};

std::vector<Triple> triples(const MetricModel& m, std::uint64_t seed, std::size_t n) {
    std::vector<Triple> out;
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(seed, i);
        out.push_back({cli::detail::sample_point(m, rng), cli::detail::sample_point(m, rng),
                       cli::detail::sample_point(m, rng), BoundaryPoint(two_pi * rng.uniform())});
    }
    return out;
}

Line criterion2() {
    const auto t0 = Clock::now();
    double worst_const = 0.0, worst_rot = 0.0;
    for (const MetricModel& m : {MetricModel(UpperHalfPlane{}), MetricModel(pinched())}) {
        const auto ts = triples(m, 202, 100);
        const auto rel = parallel_map(ts.size(), 0, [&](std::size_t i) {
            const double kp = gibbs_kernel_potential_form(m, ts[i].o, ts[i].z, ts[i].xi).value;
            const double kj = gibbs_kernel_jacobian_form(m, ts[i].o, ts[i].z, ts[i].xi).value;
            return std::abs(kp - kj) / kj;
        });
        (std::holds_alternative<UpperHalfPlane>(m) ? worst_const : worst_rot) = cli::detail::max_of(rel);
    }
    const double secs = seconds_since(t0);
    return {worst_const < 1e-4 && worst_rot < 1e-4 && secs < 300.0,
            "max relative difference: half-plane " + num(worst_const) + ", pinched rotational " + num(worst_rot) +
                " (< 1e-4), " + num(secs) + " s (< 300)"};
}

Line criterion3() {
    const auto t0 = Clock::now();
    double cocycle = 0.0, equiv = 0.0;
    for (const MetricModel& m : {MetricModel(PoincareDisc{}), MetricModel(pinched())}) {
        const auto ts = triples(m, 303, 100);
        const auto res = parallel_map(ts.size(), 0, [&](std::size_t i) {
            Rng rng(304, i);
            const auto g = cli::detail::sample_isometry(m, rng);
            const auto& t = ts[i];
            const auto k = [&](ChartPoint a, ChartPoint b, BoundaryPoint xi) {
                return gibbs_kernel_potential_form(m, a, b, xi).value;
            };
            const double koz = k(t.o, t.z, t.xi);
            return std::pair{std::abs(koz * k(t.z, t.w, t.xi) / k(t.o, t.w, t.xi) - 1.0),
                             std::abs(k(g.point(t.o), g.point(t.z), g.boundary(t.xi)) / koz - 1.0)};
        });
        for (const auto& [c, e] : res) {
            cocycle = std::max(cocycle, c);
            equiv = std::max(equiv, e);
        }
    }
    const double secs = seconds_since(t0);
    return {cocycle < 1e-4 && equiv < 1e-5 && secs < 120.0,
            "cocycle " + num(cocycle) + " (< 1e-4), equivariance " + num(equiv) + " (< 1e-5), disc and pinched rotational, " +
                num(secs) + " s (< 120)"};
}

Line criterion4() {
    const auto o = run_experiment("pinching", {{"model", {{"type", "rotational"}}},
                                               {"params", {{"n", 1000}, {"n_chain", 50}, {"n_distortion", 20}}}});
    const auto& s = o.statistics;
    const auto U = s["U"], S = s["S"];
    const bool bounds = U[0] >= 0.8 && U[1] <= 1.25 && S[0] >= -1.25 && S[1] <= -0.8;
    const double chain = s["chain_rule_max_rel_error"], dist = s["distortion_cauchy_max"];
    return {bounds && chain < 1e-6 && dist < 1e-5,
            "U in [" + num(U[0]) + ", " + num(U[1]) + "], S in [" + num(S[0]) + ", " + num(S[1]) +
                "] (within [0.8, 1.25]), chain rule " + num(chain) + " (< 1e-6), distortion T=20 vs 40 " + num(dist) +
                " (< 1e-5)"};
}

Line criterion5() {
    const auto t0 = Clock::now();
    const auto o = run_experiment("riccati", {{"model", {{"type", "rotational"}}}, {"params", {{"n", 1000}, {"t", 5.0}}}});
    const double secs = seconds_since(t0), res = o.statistics["liouville_residual_max"];
    return {res < 1e-4 && secs < 120.0,
            "max residual " + num(res) + " over 1000 orbits at t=5 (< 1e-4), " + num(secs) + " s (< 120)"};
}

Line criterion6() {
    double worst = 0.0;
    const PoincareDisc d;
    const auto eta = BoundaryMeasure::uniform(64);
    for (int k = 0; k < 20; ++k) {
        // independent grid: 4 rings of 5 points
        const double r = 0.15 * (1 + k / 5), a = two_pi * (k % 5) / 5.0 + 0.1 * (k / 5);
        worst = std::max(worst, std::abs(phiu_harmonic_density(d, eta, {0.0, 0.0}, {r * std::cos(a), r * std::sin(a)}) - 1.0));
    }
    return {worst < 1e-4, "max |h(z) - 1| " + num(worst) + " on 20 points (< 1e-4)"};
}

Line criterion7() {
    const auto t0 = Clock::now();
    const auto o = run_experiment("ugibbs", {{"params", {{"T", 50.0}, {"n", 100000}, {"bins", 64}}}});
    const double secs = seconds_since(t0), tv = o.statistics["tv_liouville"], img = o.statistics["tv_image"];
    std::string coarse;
    for (const auto& [b, v] : o.diagnostics["coarser_binnings"].items())
        coarse += " " + b + "^3: " + num(v["tv_liouville"]) + "/" + num(v["tv_image"]) + ";";
    return {tv < 0.1 && img < 0.05 && secs < 900.0,
            "64^3 bins: TV to Liouville " + num(tv) + " (< 0.1), to time-1 image " + num(img) + " (< 0.05), " +
                num(secs) + " s (< 900); coarser binnings (Liouville/image):" + coarse};
}

Line criterion8() {
    const auto t0 = Clock::now();
    const auto o = run_experiment("diffusion", {{"suspension", {{"holonomy", "rotation"}}},
                                                {"params", {{"T", 50.0}, {"n", 1000000}, {"fiber_bins", 64}}}});
    const double secs = seconds_since(t0), tv = o.statistics["fiber_tv_uniform"], def = o.statistics["invariance_defect"];
    return {tv < 0.05 && def < 2.0 / 64 && secs < 1200.0,
            "fiber TV to uniform " + num(tv) + " (< 0.05), invariance defect " + num(def) + " (< 2/64 = 0.0312), " +
                num(secs) + " s (< 1200)"};
}

Line criterion9() {
    const auto t0 = Clock::now();
    const auto o = run_experiment("birkhoff", {{"params", {{"T", 50.0}, {"n", 1000000}}}});
    const double secs = seconds_since(t0), diff = o.statistics["max_leaf_difference"];
    return {diff < 0.03 && secs < 1200.0,
            "max |f*(x) - f*(x')| " + num(diff) + " over 5 indicators (< 0.03), " + num(secs) + " s (< 1200)"};
}

Line criterion10() {
    const json levels = json::array({json::array({6250, 8, 0.1}), json::array({50000, 16, 0.1}), json::array({400000, 32, 0.1})});
    const auto rot = run_experiment("matsumoto", {{"suspension", {{"holonomy", "rotation"}}}, {"params", {{"levels", levels}}}});
    const auto moe = run_experiment("matsumoto", {{"suspension", {{"holonomy", "moebius"}}}, {"params", {{"levels", levels}}}});
    const auto list = [](const json& a) {
        std::string s;
        for (const auto& x : a) s += (s.empty() ? "" : ", ") + num(x.get<double>());
        return s;
    };
    const bool dec = rot.statistics["decreasing"], nondec = moe.statistics["non_decreasing"];
    return {dec && nondec, "rotation TV " + list(rot.statistics["tv"]) + (dec ? " (decreasing)" : " (not decreasing)") +
                               "; Moebius TV " + list(moe.statistics["tv"]) +
                               (nondec ? " (non-decreasing)" : " (decreases somewhere)")};
}

Line criterion11() {
    const std::vector<std::pair<std::string, json>> small{
        {"pinching", {{"params", {{"n", 20}, {"n_chain", 3}, {"n_distortion", 2}}}}},
        {"flow-oracle", {{"params", {{"n", 4}}}}},
        {"riccati", {{"model", {{"type", "rotational"}}}, {"params", {{"n", 20}}}}},
        {"kernel", {{"model", {{"type", "rotational"}}}, {"params", {{"n", 3}}}}},
        {"busemann", {{"model", {{"type", "disc"}}}, {"params", {{"n", 10}}}}},
        {"suspension-invariance", {{"suspension", {{"holonomy", "moebius"}}}, {"params", {{"bins", 64}}}}},
        {"ugibbs", {{"params", {{"n", 500}, {"T", 5.0}, {"bins", 8}}}}},
        {"diffusion", {{"params", {{"n", 500}, {"T", 5.0}}}}},
        {"birkhoff", {{"params", {{"n", 500}, {"T", 5.0}}}}},
        {"harmonic-density", {{"model", {{"type", "upper_half_plane"}}}}},
        {"matsumoto", {{"params", {{"levels", json::array({json::array({500, 4, 0.2})})}, {"T", 5.0}}}}},
    };
    std::vector<std::string> differ;
    for (const auto& [name, cfg] : small) {
        const auto a = run_experiment(name, cfg, 1).csv, b = run_experiment(name, cfg, 3).csv,
                   c = run_experiment(name, cfg, 1).csv;
        if (a.empty() || a != b || a != c) differ.push_back(name);
    }
    std::string d;
    for (const auto& x : differ) d += " " + x;
    return {differ.empty() && small.size() == experiments().size(),
            std::to_string(small.size()) + " experiments rerun with 1 and 3 workers: " +
                (differ.empty() ? "all data.csv byte-identical" : "differences in" + d)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, Line (*)()>> criteria{
        {"constant-curvature oracles", criterion1}, {"kernel equivalence", criterion2},
        {"kernel algebra", criterion3},             {"pinching and distortion", criterion4},
        {"Liouville identity", criterion5},         {"Poisson integral", criterion6},
        {"Gibbs u-state construction", criterion7}, {"Cesaro diffusion", criterion8},
        {"Birkhoff leafwise constancy", criterion9}, {"characteristic vs visibility", criterion10},
        {"determinism", criterion11},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!only.empty() && !only.count(id)) continue;
        Line line;
        try {
            line = criteria[k].second();
        } catch (const std::exception& e) {
            line = {false, std::string("error: ") + e.what()};
        }
        failed += line.pass ? 0 : 1;
        std::cout << (line.pass ? "PASS" : "FAIL") << "  " << id << ". " << criteria[k].first << ": " << line.detail
                  << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
