#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "leafgibbs/foliated.hpp"

using namespace leafgibbs;

namespace {

RotationalSinh pinched_rotational() { return RotationalSinh(SinhMixture::pinched(0.8, 1.25, 0.9), {0.8, 1.25}); }

double circle_dist(double a, double b) { return std::abs(std::remainder(a - b, 1.0)); }

}  // namespace

TEST(FiberMap, RotationAndMoebius) {
    const FiberMap r(RotationMap{0.3});
    EXPECT_NEAR(r(0.5), 0.8, 1e-15);
    EXPECT_NEAR(r.inverse(0.1), 0.8, 1e-15);
    const FiberMap m(MoebiusMap{{0.3, 0.4}, 0.7});
    for (double x : {0.0, 0.13, 0.5, 0.91}) {
        EXPECT_LT(circle_dist(m.inverse(m(x)), x), 1e-14);
        const double h = 1e-6;
        const double fd = std::remainder(m(x + h) - m(x - h), 1.0) / (2.0 * h);
        EXPECT_NEAR(m.derivative(x), fd, 1e-6);
        const double fdi = std::remainder(m.inverse(x + h) - m.inverse(x - h), 1.0) / (2.0 * h);
        EXPECT_NEAR(m.derivative(x, true), fdi, 1e-6);
    }
    EXPECT_THROW(FiberMap(MoebiusMap{{1.0, 0.0}, 0.0}), ConfigError);
}

TEST(FiberMap, Tabulated) {
    const FiberMap t(TabulatedMap{{0.1, 0.2, 0.6, 0.8}});
    EXPECT_NEAR(t(0.0), 0.1, 1e-15);
    EXPECT_NEAR(t(0.125), 0.15, 1e-15);
    EXPECT_NEAR(t(0.875), 0.95, 1e-15);  // last segment wraps to 1.1
    for (double x : {0.01, 0.3, 0.55, 0.97}) EXPECT_LT(circle_dist(t.inverse(t(x)), x), 1e-14);
    EXPECT_NEAR(t.derivative(0.3), 1.6, 1e-12);
    EXPECT_THROW(FiberMap(TabulatedMap{{0.1, 0.05, 0.6}}), ConfigError);
    EXPECT_THROW(FiberMap(TabulatedMap{{0.1, 0.5, 1.2}}), ConfigError);
}

TEST(Holonomy, Words) {
    const auto s = SuspensionFoliation::rotations({0.3, 0.1, 0.25, 0.05});
    EXPECT_EQ(holonomy_apply(s, {}, 0.37), 0.37);
    EXPECT_NEAR(holonomy_apply(s, {1, 1}, 0.5), 0.1, 1e-12);
    const auto m = SuspensionFoliation::fuchsian_moebius();
    for (int g = 1; g <= 4; ++g) EXPECT_LT(circle_dist(holonomy_apply(m, {g, -g}, 0.42), 0.42), 1e-12);
    EXPECT_THROW(holonomy_apply(s, {5}, 0.1), DomainError);
}

TEST(Holonomy, RelatorsHold) {
    EXPECT_LT(SuspensionFoliation::rotations({0.3, 0.1, 0.25, 0.05}).relation_defect(), 1e-12);
    EXPECT_LT(SuspensionFoliation::fuchsian_moebius().relation_defect(), 1e-6);
    for (double x : {0.05, 0.5, 0.77})
        EXPECT_LT(circle_dist(holonomy_apply(SuspensionFoliation::fuchsian_moebius(), {1, -2, 3, -4, -1, 2, -3, 4}, x), x),
                  1e-6);
    // Moebius parameters off a common axis break the relation and are rejected
    std::vector<FiberMap> maps;
    for (cplx c : {cplx(0.3, 0.0), cplx(0.0, 0.2), cplx(-0.2, 0.1), cplx(0.4, -0.3)}) maps.emplace_back(MoebiusMap{c, 0.0});
    EXPECT_THROW(SuspensionFoliation(FuchsianDomain::regular_octagon(), maps), ConfigError);
}

TEST(FoliatedFlow, TrivialHolonomyAndZeroTime) {
    const auto s = SuspensionFoliation::trivial();
    const FoliatedState st{{{0.1, 0.2}, 1.0}, 0.37};
    const auto out = foliated_flow(s, st, 8.0);
    EXPECT_EQ(out.fiber, 0.37);
    const auto same = foliated_flow(SuspensionFoliation::rotations({0.3, 0.1, 0.25, 0.05}), st, 0.0);
    EXPECT_EQ(same.fiber, 0.37);
    EXPECT_EQ(same.v.base.x, 0.1);
    EXPECT_EQ(same.v.theta, 1.0);
}

TEST(FoliatedFlow, ReversibleInFiber) {
    for (const auto& s : {SuspensionFoliation::rotations({0.3, 0.1, 0.25, 0.05}), SuspensionFoliation::fuchsian_moebius()}) {
        const FoliatedState st{{{0.05, -0.1}, 2.2}, 0.61};
        const FlowParams p{1e-3, 16, 1e-9};
        const auto fwd = foliated_flow(s, st, 3.0, p);
        const auto back = foliated_flow(s, fwd, -3.0, p);
        EXPECT_LT(circle_dist(back.fiber, st.fiber), 1e-9);
        EXPECT_NEAR(back.v.base.x, st.v.base.x, 1e-8);
    }
}

TEST(FoliatedFlow, FiberFollowsFoldWord) {
    // The fiber after a flow equals the holonomy of the fold word of the base.
    const auto s = SuspensionFoliation::rotations({0.3, 0.1, 0.25, 0.05});
    const FlowParams p{1e-2, 16, 1e-9};
    const UnitTangentVector v{{0.2, 0.1}, 0.4};
    const auto base = quotient_flow(PoincareDisc{}, s.base(), v, 6.0, p);
    EXPECT_FALSE(base.word.empty());
    const auto out = foliated_flow(s, {v, 0.2}, 6.0, p);
    EXPECT_NEAR(out.fiber, holonomy_apply(s, base.word, 0.2), 1e-12);
}

TEST(Transverse, RotationPreservesUniform) {
    const auto s = SuspensionFoliation::rotations({0.3, 0.1, 0.25, 0.05});
    EXPECT_LT(invariance_defect(s, TransverseMeasure::uniform(256)), 1.0 / 256);
    const auto rn = radon_nikodym_estimate(s, TransverseMeasure::uniform(256), 2);
    for (double r : rn.ratio) EXPECT_NEAR(r, 1.0, 1e-9);
    EXPECT_TRUE(rn.flagged.empty());
}

TEST(Transverse, MoebiusIsNotInvariant) {
    const auto s = SuspensionFoliation::fuchsian_moebius();
    EXPECT_GT(invariance_defect(s, TransverseMeasure::uniform(256)), 0.1);
}

TEST(Transverse, PointMassUnderTrivialHolonomy) {
    TransverseMeasure nu(64);
    nu.add(0.3);
    EXPECT_EQ(invariance_defect(SuspensionFoliation::trivial(), nu), 0.0);
}

TEST(Transverse, RadonNikodymIsInverseDerivative) {
    // d[g_* Leb]/dLeb (y) = (g^{-1})'(y); the oracle is the exact Lebesgue
    // measure of the preimage of each bin.
    const auto s = SuspensionFoliation::fuchsian_moebius();
    const int bins = 1024;
    const auto rn = radon_nikodym_estimate(s, TransverseMeasure::uniform(bins), 1);
    const FiberMap& g = s.maps()[0];
    double worst = 0.0;
    for (int k = 0; k < bins; ++k) {
        const double a = static_cast<double>(k) / bins, b = static_cast<double>(k + 1) / bins;
        const double exact = std::remainder(g.inverse(b) - g.inverse(a), 1.0) * bins;
        worst = std::max(worst, std::abs(rn.ratio[k] / exact - 1.0));
        EXPECT_NEAR(rn.ratio[k], g.derivative(0.5 * (a + b), true), 0.05 * exact);
    }
    EXPECT_LT(worst, 0.05);  // linear rebinning error, first order in 1/bins
}

TEST(Transverse, FlaggedBins) {
    TransverseMeasure nu(8);
    nu.add(0.1);
    nu.add(0.6);
    const auto rn = radon_nikodym_estimate(SuspensionFoliation::trivial(), nu, 1);
    EXPECT_EQ(rn.flagged.size(), 6u);
    EXPECT_TRUE(std::isnan(rn.ratio[rn.flagged[0]]));
    EXPECT_EQ(rn.ratio[0], 1.0);
}

TEST(Transverse, Csv) {
    std::ostringstream os;
    write_transverse_csv(os, TransverseMeasure::uniform(4));
    EXPECT_EQ(os.str(), "bin_left,mass\n0,0.25\n0.25,0.25\n0.5,0.25\n0.75,0.25\n");
}

TEST(H0, ConstantCurvature) {
    for (ChartPoint x : {ChartPoint{0.0, 0.0}, ChartPoint{0.5, -0.3}, ChartPoint{-0.2, 0.7}})
        EXPECT_NEAR(h0(PoincareDisc{}, x, 64), 1.0 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(h0(UpperHalfPlane{}, {3.0, 0.2}, 16), 1.0 / std::sqrt(2.0), 1e-12);
}

TEST(H0, PinchedBoundsAndResolution) {
    const auto rot = pinched_rotational();
    for (ChartPoint x : {ChartPoint{0.0, 0.0}, ChartPoint{1.5, 0.4}}) {
        const double h256 = h0(rot, x, 256, {{1e-2, 16, 1e-9}, 0.0, 10.0}, 4);
        const double h512 = h0(rot, x, 512, {{1e-2, 16, 1e-9}, 0.0, 10.0}, 4);
        EXPECT_GE(h256, 1.0 / std::sqrt(1.0 + 1.25 * 1.25));
        EXPECT_LE(h256, 1.0 / std::sqrt(1.0 + 0.8 * 0.8));
        EXPECT_LT(std::abs(h256 - h512), 1e-4);
    }
}

TEST(Liouville, ProductMeasureIsFlowInvariant) {
    // Liouville x Lebesgue on the rotation suspension against its time-5 image,
    // binned by (polar sector of the base, direction, fiber).
    const auto s = SuspensionFoliation::rotations({0.3, 0.1, 0.25, 0.05});
    const std::size_t n = 40000;
    const int sectors = 8, dirs = 4, fibers = 8;
    auto bin = [&](const FoliatedState& st) {
        const int a = std::min(sectors - 1, static_cast<int>(wrap_angle(std::atan2(st.v.base.y, st.v.base.x)) / two_pi * sectors));
        const int d = std::min(dirs - 1, static_cast<int>(st.v.theta / two_pi * dirs));
        const int f = std::min(fibers - 1, static_cast<int>(st.fiber * fibers));
        return (a * dirs + d) * fibers + f;
    };
    const auto pairs = parallel_map(n, 0, [&](std::size_t i) {
        Rng rng(99, i);
        const FoliatedState st{sample_liouville(s.base(), rng), rng.uniform()};
        return std::pair{bin(st), bin(foliated_flow(s, st, 5.0))};
    });
    std::vector<double> before(sectors * dirs * fibers, 0.0), after(before.size(), 0.0);
    for (const auto& [a, b] : pairs) {
        before[a] += 1.0 / n;
        after[b] += 1.0 / n;
    }
    double tv = 0.0;
    for (std::size_t k = 0; k < before.size(); ++k) tv += 0.5 * std::abs(before[k] - after[k]);
    EXPECT_LT(tv, 0.05);
    // its transverse factor, Lebesgue, is invariant by every holonomy map
    EXPECT_LT(invariance_defect(s, TransverseMeasure::uniform(256)), 1.0 / 256);
}
