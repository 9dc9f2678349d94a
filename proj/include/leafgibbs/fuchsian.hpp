#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "core.hpp"
#include "flow.hpp"
#include "geometry.hpp"
#include "integrator.hpp"

namespace leafgibbs {

using cplx = std::complex<double>;

/// Real 2x2 matrix acting on the upper half-plane by z -> (a z + b)/(c z + d).
struct Mat2 {
    double a = 1.0, b = 0.0, c = 0.0, d = 1.0;
    double det() const { return a * d - b * c; }
    Mat2 inverse() const {
        const double k = 1.0 / det();
        return {d * k, -b * k, -c * k, a * k};
    }
    friend Mat2 operator*(const Mat2& m, const Mat2& n) {
        return {m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d, m.c * n.a + m.d * n.c, m.c * n.b + m.d * n.d};
    }
};

/// Disc isometry w -> (alpha w + beta) / (conj(beta) w + conj(alpha)), |alpha|^2 - |beta|^2 = 1.
struct DiscIsometry {
    cplx alpha{1.0, 0.0};
    cplx beta{0.0, 0.0};

    cplx operator()(cplx w) const { return (alpha * w + beta) / (std::conj(beta) * w + std::conj(alpha)); }
    cplx derivative(cplx w) const {
        const cplx den = std::conj(beta) * w + std::conj(alpha);
        return 1.0 / (den * den);
    }
    DiscIsometry inverse() const { return {std::conj(alpha), -beta}; }
    friend DiscIsometry operator*(const DiscIsometry& g, const DiscIsometry& h) {
        return {g.alpha * h.alpha + g.beta * std::conj(h.beta), g.alpha * h.beta + g.beta * std::conj(h.alpha)};
    }

    static DiscIsometry rotation(double angle) { return {std::polar(1.0, 0.5 * angle), 0.0}; }
    /// Hyperbolic translation of length l along the diameter of direction angle.
    static DiscIsometry translation(double length, double angle) {
        return {std::cosh(0.5 * length), std::sinh(0.5 * length) * std::polar(1.0, angle)};
    }

    /// Conjugate of a real matrix by the Cayley map z -> (z - i)/(z + i).
    static DiscIsometry from_real(const Mat2& m) {
        const cplx i(0.0, 1.0);
        const CMat c{1.0, -i, 1.0, i}, cinv{0.5, 0.5, 0.5 * i, -0.5 * i};
        const CMat u = c * CMat{m.a, m.b, m.c, m.d} * cinv;
        const cplx scale = std::sqrt(u.a * u.d - u.b * u.c);
        return {u.a / scale, u.b / scale};
    }

    Mat2 to_real() const {
        const cplx i(0.0, 1.0);
        const CMat c{1.0, -i, 1.0, i}, cinv{0.5, 0.5, 0.5 * i, -0.5 * i};
        const CMat m = cinv * CMat{alpha, beta, std::conj(beta), std::conj(alpha)} * c;
        return {m.a.real(), m.b.real(), m.c.real(), m.d.real()};
    }

private:
    struct CMat {
        cplx a, b, c, d;
        friend CMat operator*(const CMat& m, const CMat& n) {
            return {m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d, m.c * n.a + m.d * n.c, m.c * n.b + m.d * n.d};
        }
    };
};

/// Applies a disc isometry to a unit tangent vector of the Poincare disc.
inline UnitTangentVector apply(const DiscIsometry& g, const UnitTangentVector& v) {
    const cplx z(v.base.x, v.base.y);
    const cplx w = g(z);
    return {{w.real(), w.imag()}, wrap_angle(v.theta + std::arg(g.derivative(z)))};
}

/// Dirichlet fundamental polygon centred at 0 for a group given by side
/// pairings. Generator k (1-based) is paired with its inverse; signed
/// indices +k / -k denote g_k / g_k^{-1} in words.
class FuchsianDomain {
public:
    FuchsianDomain(std::vector<Mat2> generators, std::vector<std::vector<int>> relators, int max_folds = 64)
        : generators_(std::move(generators)), relators_(std::move(relators)), max_folds_(max_folds) {
        if (generators_.empty()) throw ConfigError("fuchsian domain: no generators");
        for (const auto& m : generators_) {
            if (std::abs(m.det() - 1.0) >= 1e-12) throw ConfigError("fuchsian domain: generator determinant != 1");
            disc_.push_back(DiscIsometry::from_real(m));
        }
        const int g = static_cast<int>(generators_.size());
        for (int j = 0; j < 2 * g; ++j) {
            const DiscIsometry h = element(side_letter(j));
            const cplx n = h(cplx(0.0, 0.0));
            centres_.push_back(n);
            side_scale_.push_back(1.0 - std::norm(n));
        }
        build_vertices();
        inradius_euclid_ = 1.0;
        for (const auto& n : centres_) {
            // Closest point of the bisector to 0 lies on the ray towards n.
            const double rho = std::abs(n);
            const double c = 1.0 / rho, rad = std::sqrt(1.0 / (rho * rho) - 1.0);
            inradius_euclid_ = std::min(inradius_euclid_, c - rad);
        }
    }

    /// The regular octagon with opposite sides paired (genus 2).
    static FuchsianDomain regular_octagon() {
        const double half = std::acosh(1.0 + std::sqrt(2.0));
        std::vector<Mat2> gens;
        for (int k = 0; k < 4; ++k) {
            const auto u = DiscIsometry::translation(2.0 * half, k * pi / 4.0);
            gens.push_back(u.to_real());
        }
        return FuchsianDomain(std::move(gens), {{1, -2, 3, -4, -1, 2, -3, 4}});
    }

    int generator_count() const { return static_cast<int>(generators_.size()); }
    const std::vector<Mat2>& generators() const { return generators_; }
    const std::vector<std::vector<int>>& relators() const { return relators_; }
    const std::vector<cplx>& vertices() const { return vertices_; }
    double inradius_euclid() const { return inradius_euclid_; }
    double vertex_radius_euclid() const {
        double r = 0.0;
        for (const auto& v : vertices_) r = std::max(r, std::abs(v));
        return r;
    }

    /// Disc isometry for a signed generator index.
    DiscIsometry element(int letter) const {
        const int k = std::abs(letter);
        if (k < 1 || k > generator_count()) throw DomainError("unknown generator index " + std::to_string(letter));
        return letter > 0 ? disc_[k - 1] : disc_[k - 1].inverse();
    }

    /// Product of a word applied letter by letter (first letter acts first).
    DiscIsometry word_element(const std::vector<int>& word) const {
        DiscIsometry g;
        for (int l : word) g = element(l) * g;
        return g;
    }

    bool inside(cplx z, double slack = 1e-12) const {
        for (std::size_t j = 0; j < centres_.size(); ++j)
            if (outside_side(z, j, slack)) return false;
        return true;
    }

    /// Applies side pairings (sides tested in index order) until z is inside.
    /// Returns the letters applied; calls on_letter for each.
    template <class OnLetter>
    void fold_point(cplx& z, OnLetter&& on_letter) const {
        for (int count = 0;; ++count) {
            bool moved = false;
            for (std::size_t j = 0; j < centres_.size(); ++j) {
                if (!outside_side(z, j, 1e-13)) continue;
                if (count >= max_folds_) throw FoldingError("fold: exceeded max_folds; broken domain?");
                const int letter = -side_letter(static_cast<int>(j));
                on_letter(letter, element(letter));
                z = element(letter)(z);
                moved = true;
                break;
            }
            if (!moved) return;
        }
    }

    /// Maximum residual of the side-pairing condition over all generators.
    double pairing_defect() const {
        double worst = 0.0;
        const int g = generator_count();
        for (int k = 1; k <= g; ++k) {
            const auto from = side_vertices(side_index(-k));
            const auto to = side_vertices(side_index(k));
            const DiscIsometry h = element(k);
            const cplx a = h(from[0]), b = h(from[1]);
            const double d1 = std::max(std::abs(a - to[0]), std::abs(b - to[1]));
            const double d2 = std::max(std::abs(a - to[1]), std::abs(b - to[0]));
            worst = std::max(worst, std::min(d1, d2));
        }
        return worst;
    }

    /// Maximum distance of each relator's product from +-identity.
    double relator_defect() const {
        double worst = 0.0;
        for (const auto& r : relators_) {
            const DiscIsometry g = word_element(r);
            const double e1 = std::max(std::abs(g.alpha - 1.0), std::abs(g.beta));
            const double e2 = std::max(std::abs(g.alpha + 1.0), std::abs(g.beta));
            worst = std::max(worst, std::min(e1, e2));
        }
        return worst;
    }

    int side_index(int letter) const {
        return letter > 0 ? letter - 1 : generator_count() + (-letter) - 1;
    }

private:
    int side_letter(int j) const {
        const int g = generator_count();
        return j < g ? j + 1 : -(j - g + 1);
    }

    bool outside_side(cplx z, std::size_t j, double slack) const {
        // Closer to the translate of the centre than to the centre.
        return std::norm(z - centres_[j]) < std::norm(z) * side_scale_[j] - slack;
    }

    std::array<cplx, 2> side_vertices(int j) const { return side_vertex_pairs_[static_cast<std::size_t>(j)]; }

    void build_vertices() {
        const std::size_t n = centres_.size();
        side_vertex_pairs_.assign(n, {cplx{}, cplx{}});
        std::vector<int> found(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                cplx p[2];
                if (!bisector_intersections(centres_[i], centres_[j], p)) continue;
                for (const cplx& v : p) {
                    if (std::norm(v) >= 1.0 || !inside(v, 1e-9)) continue;
                    vertices_.push_back(v);
                    if (found[i] < 2) side_vertex_pairs_[i][found[i]++] = v;
                    if (found[j] < 2) side_vertex_pairs_[j][found[j]++] = v;
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i)
            if (found[i] != 2) throw ConfigError("fuchsian domain: side " + std::to_string(i) + " is not a polygon edge");
    }

    // Bisector of 0 and n is the circle |z - n/|n|^2| = sqrt(1/|n|^2 - 1).
    static bool bisector_intersections(cplx n1, cplx n2, cplx out[2]) {
        const cplx c1 = n1 / std::norm(n1), c2 = n2 / std::norm(n2);
        const double r1 = std::sqrt(1.0 / std::norm(n1) - 1.0), r2 = std::sqrt(1.0 / std::norm(n2) - 1.0);
        const double d = std::abs(c2 - c1);
        if (d < 1e-14 || d > r1 + r2 || d < std::abs(r1 - r2)) return false;
        const double a = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
        const double h = std::sqrt(std::max(0.0, r1 * r1 - a * a));
        const cplx u = (c2 - c1) / d;
        const cplx m = c1 + a * u;
        out[0] = m + h * cplx(-u.imag(), u.real());
        out[1] = m - h * cplx(-u.imag(), u.real());
        return true;
    }

    std::vector<Mat2> generators_;
    std::vector<std::vector<int>> relators_;
    int max_folds_;
    std::vector<DiscIsometry> disc_;
    std::vector<cplx> centres_;
    std::vector<double> side_scale_;
    std::vector<cplx> vertices_;
    std::vector<std::array<cplx, 2>> side_vertex_pairs_;
    double inradius_euclid_ = 0.0;
};

struct FoldResult {
    UnitTangentVector v;
    std::vector<int> word;
};

/// Folds a disc vector into the fundamental polygon.
inline FoldResult fold(const FuchsianDomain& domain, const UnitTangentVector& v) {
    if (v.base.x * v.base.x + v.base.y * v.base.y >= 1.0) throw DomainError("fold: vector not in the disc");
    FoldResult out{v, {}};
    cplx z(v.base.x, v.base.y);
    domain.fold_point(z, [&](int letter, const DiscIsometry& g) {
        out.v = apply(g, out.v);
        out.word.push_back(letter);
    });
    out.v.base = {z.real(), z.imag()};
    return out;
}

/// Geodesic flow on the quotient surface: integrates in the disc and folds
/// the state back into the polygon after every step. The deck letters
/// applied are reported to on_letter.
class QuotientOrbit {
public:
    QuotientOrbit(const PoincareDisc& disc, const FuchsianDomain& domain, const UnitTangentVector& v, FlowParams p)
        : domain_(&domain), orbit_(disc, v, p) {
        fold_now([](int) {});
    }

    template <class OnLetter>
    void advance(double t, OnLetter&& on_letter) {
        if (t == 0.0) return;
        const long n = step_count(t, orbit_.params().dt);
        const double h = t / static_cast<double>(n);
        for (long i = 0; i < n; ++i) {
            orbit_.step(h);
            fold_now(on_letter);
        }
    }

    void advance(double t) { advance(t, [](int) {}); }

    UnitTangentVector vector() const { return orbit_.vector(); }
    ChartPoint position() const { return {orbit_.state().y[0], orbit_.state().y[1]}; }
    Orbit<PoincareDisc>& orbit() { return orbit_; }

private:
    template <class OnLetter>
    void fold_now(OnLetter&& on_letter) {
        auto& y = orbit_.state().y;
        cplx z(y[0], y[1]);
        if (std::abs(z) < domain_->inradius_euclid()) return;
        cplx vel(y[2], y[3]);
        domain_->fold_point(z, [&](int letter, const DiscIsometry& g) {
            vel *= g.derivative(cplx(y[0], y[1]));
            const cplx moved = g(cplx(y[0], y[1]));
            y[0] = moved.real();
            y[1] = moved.imag();
            on_letter(letter);
        });
        y[0] = z.real();
        y[1] = z.imag();
        y[2] = vel.real();
        y[3] = vel.imag();
    }

    const FuchsianDomain* domain_;
    Orbit<PoincareDisc> orbit_;
};

/// flow-then-fold on the quotient surface, returning the accumulated word.
inline FoldResult quotient_flow(const PoincareDisc& disc, const FuchsianDomain& domain, const UnitTangentVector& v,
                                double t, const FlowParams& p) {
    QuotientOrbit q(disc, domain, fold(domain, v).v, p);
    FoldResult out;
    q.advance(t, [&](int l) { out.word.push_back(l); });
    out.v = q.vector();
    return out;
}

}  // namespace leafgibbs
