#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "leafgibbs/distance.hpp"
#include "leafgibbs/geometry.hpp"

using namespace leafgibbs;

namespace {

RotationalSinh hyperbolic_rotational() { return RotationalSinh(SinhMixture(), {1.0, 1.0}); }
RotationalSinh pinched_rotational() { return RotationalSinh(SinhMixture::pinched(0.8, 1.25, 0.9), {0.8, 1.25}); }

// Gauss curvature recomputed from the metric tensor alone (conformal case).
template <class M>
double conformal_curvature_from_metric(const M& m, double x, double y, double h = 1e-3) {
    auto lam = [&](double a, double b) { return 0.5 * std::log(m.metric({a, b}).g11); };
    const double c = lam(x, y);
    const double lap = (lam(x + h, y) + lam(x - h, y) + lam(x, y + h) + lam(x, y - h) - 4.0 * c) / (h * h);
    return -lap * std::exp(-2.0 * c);
}

}  // namespace

TEST(Curvature, ConstantCurvatureModels) {
    EXPECT_DOUBLE_EQ(UpperHalfPlane{}.curvature({0.0, 1.0}), -1.0);
    EXPECT_DOUBLE_EQ(PoincareDisc{}.curvature({0.3, -0.2}), -1.0);
    EXPECT_NEAR(hyperbolic_rotational().curvature({0.7, 0.0}), -1.0, 1e-14);
}

TEST(Curvature, OutsideDomainThrows) {
    EXPECT_THROW(UpperHalfPlane{}.curvature({0.0, -1.0}), DomainError);
    EXPECT_THROW(PoincareDisc{}.curvature({1.0, 0.0}), DomainError);
    const ConformalGrid g(perturbed_hyperbolic_grid(), {0.7, 1.1});
    EXPECT_THROW(g.curvature({0.0, 0.41}), DomainError);
}

TEST(Curvature, AgreesWithMetricRecomputation) {
    const UpperHalfPlane h;
    const PoincareDisc d;
    for (double x : {-0.4, 0.0, 0.5})
        for (double y : {0.3, 1.0, 2.5}) EXPECT_NEAR(conformal_curvature_from_metric(h, x, y) / -1.0, 1.0, 1e-4);
    for (double x : {-0.4, 0.0, 0.3})
        for (double y : {-0.5, 0.1}) EXPECT_NEAR(conformal_curvature_from_metric(d, x, y) / -1.0, 1.0, 1e-4);

    const auto rot = pinched_rotational();
    for (double r : {0.3, 1.0, 2.0, 5.0}) {
        const double hr = 1e-4;
        auto f = [&](double s) { return std::sqrt(rot.metric({s, 0.0}).g22); };
        const double k_fd = -(f(r + hr) - 2.0 * f(r) + f(r - hr)) / (hr * hr) / f(r);
        EXPECT_NEAR(k_fd / rot.curvature({r, 0.0}), 1.0, 1e-4) << "r=" << r;
    }
}

TEST(Curvature, PinchedMixtureAtPoleAndInfinity) {
    const auto rot = pinched_rotational();
    EXPECT_NEAR(rot.curvature({0.0, 0.0}), -(0.9 * 0.64 + 0.1 * 1.5625), 1e-12);
    EXPECT_NEAR(rot.curvature({60.0, 0.0}), -1.5625, 1e-6);
}

TEST(Christoffel, UpperHalfPlaneClosedForm) {
    const double y = 1.7;
    const auto c = UpperHalfPlane{}.christoffel({0.4, y});
    EXPECT_NEAR(c.g1_11, 0.0, 1e-15);
    EXPECT_NEAR(c.g1_12, -1.0 / y, 1e-15);
    EXPECT_NEAR(c.g1_22, 0.0, 1e-15);
    EXPECT_NEAR(c.g2_11, 1.0 / y, 1e-15);
    EXPECT_NEAR(c.g2_12, 0.0, 1e-15);
    EXPECT_NEAR(c.g2_22, -1.0 / y, 1e-15);
}

TEST(Christoffel, FlatConformalFactorVanishes) {
    const auto flat = ScalarGrid::sample(20, 20, -1.0, -1.0, 0.1, 0.1, [](double, double) { return 0.0; });
    const ConformalGrid g(flat, {1.0, 1.0});
    const auto c = g.christoffel({0.05, -0.13});
    for (double v : {c.g1_11, c.g1_12, c.g1_22, c.g2_11, c.g2_12, c.g2_22}) EXPECT_EQ(v, 0.0);
}

TEST(Christoffel, WarpedProduct) {
    const auto c = hyperbolic_rotational().christoffel({0.5, 1.0});
    EXPECT_NEAR(c.g1_22, -std::sinh(0.5) * std::cosh(0.5), 1e-14);
    EXPECT_NEAR(c.g2_12, std::cosh(0.5) / std::sinh(0.5), 1e-14);
}

TEST(Metric, PositiveDefiniteOnSamples) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const ConformalGrid g(perturbed_hyperbolic_grid(), {0.7, 1.1});
    const auto rot = pinched_rotational();
    for (int i = 0; i < 200; ++i) {
        const std::vector<MetricTensor> ts = {
            UpperHalfPlane{}.metric({4.0 * u(rng) - 2.0, 0.01 + 3.0 * u(rng)}),
            PoincareDisc{}.metric({0.6 * u(rng), 0.6 * u(rng)}),
            rot.metric({0.01 + 10.0 * u(rng), two_pi * u(rng)}),
            g.metric({g.x_min() + (g.x_max() - g.x_min()) * u(rng), g.y_min() + (g.y_max() - g.y_min()) * u(rng)}),
        };
        for (const auto& t : ts) {
            EXPECT_GT(t.g11, 0.0);
            EXPECT_GT(t.g11 * t.g22 - t.g12 * t.g12, 0.0);
        }
    }
}

TEST(Grid, RoundTripAndShippedFileMatchesGenerator) {
    const auto g = perturbed_hyperbolic_grid();
    std::stringstream ss;
    write_grid(ss, g);
    const auto back = read_grid(ss);
    ASSERT_EQ(back.rows, g.rows);
    ASSERT_EQ(back.cols, g.cols);
    for (std::size_t i = 0; i < g.values.size(); ++i) EXPECT_NEAR(back.values[i], g.values[i], 1e-15);

    const auto shipped = load_grid(LEAFGIBBS_DATA_DIR "/perturbed_hyperbolic.grid");
    ASSERT_EQ(shipped.values.size(), g.values.size());
    for (std::size_t i = 0; i < g.values.size(); ++i) EXPECT_NEAR(shipped.values[i], g.values[i], 1e-15);
}

TEST(Grid, InterpolationReproducesCubic) {
    auto f = [](double x, double y) { return 0.3 * x * x * x - x * y + 0.5 * y * y + 1.0; };
    const auto g = ScalarGrid::sample(12, 12, 0.0, 0.0, 0.1, 0.1, f);
    // Catmull-Rom reproduces quadratics exactly.
    auto q = [](double x, double y) { return -x * y + 0.5 * y * y + 2.0 * x; };
    const auto gq = ScalarGrid::sample(12, 12, 0.0, 0.0, 0.1, 0.1, q);
    const auto j = interpolate(gq, 0.537, 0.412);
    EXPECT_NEAR(j.f, q(0.537, 0.412), 1e-12);
    EXPECT_NEAR(j.fx, -0.412 + 2.0, 1e-11);
    EXPECT_NEAR(j.fy, -0.537 + 0.412, 1e-11);
    EXPECT_NEAR(interpolate(g, 0.537, 0.412).f, f(0.537, 0.412), 1e-3);
}

TEST(Pinching, ConstantCurvature) {
    const auto r1 = verify_pinching(UpperHalfPlane{}, {-1.0, 1.0, 0.2, 3.0, 9, 9});
    EXPECT_TRUE(r1.pass);
    EXPECT_DOUBLE_EQ(r1.k_min, -1.0);
    EXPECT_DOUBLE_EQ(r1.k_max, -1.0);
    EXPECT_TRUE(verify_pinching(hyperbolic_rotational(), {0.0, 20.0, 0.0, two_pi, 21, 5}).pass);
}

TEST(Pinching, PinchedRotational) {
    const auto rep = verify_pinching(pinched_rotational(), {0.0, 100.0, 0.0, two_pi, 401, 3});
    EXPECT_TRUE(rep.pass) << rep.k_min << " " << rep.k_max;
}

TEST(Pinching, ShippedConformalGrid) {
    const ConformalGrid g(load_grid(LEAFGIBBS_DATA_DIR "/perturbed_hyperbolic.grid"), shipped_grid_bounds());
    const auto rep = verify_pinching(g, {g.x_min(), g.x_max(), g.y_min(), g.y_max(), 81, 81});
    EXPECT_TRUE(rep.pass) << rep.k_min << " " << rep.k_max;
    // Independent oracle: analytic Laplacian of the generating lambda.
    const double sig2 = 0.25;
    for (double x : {-0.5, 0.0, 0.4})
        for (double y : {1.0, 1.5, 2.2}) {
            const double d2 = x * x + (y - 1.5) * (y - 1.5);
            const double bump = 0.01 * std::exp(-d2 / (2.0 * sig2));
            const double lap = 1.0 / (y * y) + bump * (d2 / (sig2 * sig2) - 2.0 / sig2);
            const double lam = perturbed_hyperbolic_lambda(x, y);
            EXPECT_NEAR(g.curvature({x, y}), -lap * std::exp(-2.0 * lam), 2e-2);
        }
}

TEST(Distance, ClosedForms) {
    EXPECT_NEAR(distance(UpperHalfPlane{}, {0.0, 1.0}, {0.0, 2.0}), std::log(2.0), 1e-14);
    EXPECT_NEAR(distance(PoincareDisc{}, {0.0, 0.0}, {std::tanh(0.5), 0.0}), 1.0, 1e-14);
    EXPECT_EQ(distance(UpperHalfPlane{}, {0.3, 1.0}, {0.3, 1.0}), 0.0);
    EXPECT_EQ(distance(pinched_rotational(), {2.0, 1.0}, {2.0, 1.0}), 0.0);
}

TEST(Distance, SymmetryAndTriangleInequality) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const ChartPoint p{2.0 * u(rng) - 1.0, 0.1 + 2.0 * u(rng)}, q{2.0 * u(rng) - 1.0, 0.1 + 2.0 * u(rng)},
            w{2.0 * u(rng) - 1.0, 0.1 + 2.0 * u(rng)};
        const UpperHalfPlane h;
        EXPECT_NEAR(distance(h, p, q), distance(h, q, p), 1e-9);
        EXPECT_LE(distance(h, p, w), distance(h, p, q) + distance(h, q, w) + 1e-6);
    }
    const auto rot = pinched_rotational();
    for (int i = 0; i < 10; ++i) {
        const ChartPoint p{3.0 * u(rng), two_pi * u(rng)}, q{3.0 * u(rng), two_pi * u(rng)},
            w{3.0 * u(rng), two_pi * u(rng)};
        EXPECT_LE(distance(rot, p, w), distance(rot, p, q) + distance(rot, q, w) + 1e-6);
    }
}

TEST(Distance, ShootingMatchesHyperbolicLawOfCosines) {
    const auto rot = hyperbolic_rotational();
    for (auto [r1, p1, r2, p2] : std::vector<std::array<double, 4>>{
             {0.5, 0.0, 1.5, 2.0}, {0.0, 0.0, 3.0, 1.0}, {2.0, 0.3, 2.5, 4.0}, {1.0, 0.0, 6.0, 0.2}}) {
        const double expected =
            std::acosh(std::cosh(r1) * std::cosh(r2) - std::sinh(r1) * std::sinh(r2) * std::cos(p2 - p1));
        EXPECT_NEAR(distance(rot, {r1, p1}, {r2, p2}), expected, 1e-7);
    }
}

TEST(Distance, ShootingOnConformalGridMatchesUpperHalfPlaneWhenFlat) {
    const auto g = ScalarGrid::sample(60, 60, -1.5, 0.3, 0.05, 0.05, [](double, double y) { return -std::log(y); });
    const ConformalGrid m(g, {1.0, 1.0});
    const ChartPoint p{-0.3, 1.0}, q{0.4, 1.8};
    EXPECT_NEAR(distance(m, p, q), distance(UpperHalfPlane{}, p, q), 1e-5);
}

TEST(Direction, ClosedFormAgreesWithShooting) {
    const ChartPoint p{0.2, 0.9}, q{-0.6, 1.7};
    const double th = direction_to(UpperHalfPlane{}, p, q);
    const auto g = ScalarGrid::sample(60, 60, -1.5, 0.3, 0.05, 0.05, [](double, double y) { return -std::log(y); });
    EXPECT_NEAR(angle_diff(th, shoot(ConformalGrid(g, {1.0, 1.0}), p, q).theta), 0.0, 1e-5);
}
