#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"

namespace leafgibbs {

/// Samples of a scalar field on a regular rectangular grid. Row index runs
/// along y, column index along x.
struct ScalarGrid {
    int rows = 0;
    int cols = 0;
    double x0 = 0.0;
    double y0 = 0.0;
    double dx = 1.0;
    double dy = 1.0;
    std::vector<double> values;

    double at(int row, int col) const { return values[static_cast<std::size_t>(row) * cols + col]; }
    double x_max() const { return x0 + (cols - 1) * dx; }
    double y_max() const { return y0 + (rows - 1) * dy; }

    static ScalarGrid sample(int rows, int cols, double x0, double y0, double dx, double dy,
                             const std::function<double(double, double)>& fn) {
        ScalarGrid g{rows, cols, x0, y0, dx, dy, {}};
        g.values.resize(static_cast<std::size_t>(rows) * cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                g.values[static_cast<std::size_t>(i) * cols + j] = fn(x0 + j * dx, y0 + i * dy);
        return g;
    }
};

/// Plain-text grid: one header line "rows cols x0 y0 dx dy", then one line per row.
inline void write_grid(std::ostream& os, const ScalarGrid& g) {
    os << std::setprecision(17);
    os << g.rows << ' ' << g.cols << ' ' << g.x0 << ' ' << g.y0 << ' ' << g.dx << ' ' << g.dy << '\n';
    for (int i = 0; i < g.rows; ++i) {
        for (int j = 0; j < g.cols; ++j) os << (j ? " " : "") << g.at(i, j);
        os << '\n';
    }
}

inline ScalarGrid read_grid(std::istream& is) {
    ScalarGrid g;
    if (!(is >> g.rows >> g.cols >> g.x0 >> g.y0 >> g.dx >> g.dy))
        throw ConfigError("grid: malformed header");
    if (g.rows < 8 || g.cols < 8) throw ConfigError("grid: need at least 8x8 samples");
    if (!(g.dx > 0.0) || !(g.dy > 0.0)) throw ConfigError("grid: spacing must be positive");
    g.values.resize(static_cast<std::size_t>(g.rows) * g.cols);
    for (auto& v : g.values)
        if (!(is >> v)) throw ConfigError("grid: truncated payload");
    return g;
}

inline ScalarGrid load_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("grid: cannot open " + path);
    return read_grid(in);
}

/// Value and first partial derivatives of an interpolant.
struct Jet2 {
    double f = 0.0;
    double fx = 0.0;
    double fy = 0.0;
};

namespace detail {

// Catmull-Rom weights and their t-derivatives for neighbours -1, 0, 1, 2.
inline void catmull_rom(double t, double w[4], double dw[4]) {
    const double t2 = t * t, t3 = t2 * t;
    w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
    w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
    w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
    w[3] = 0.5 * (t3 - t2);
    dw[0] = 0.5 * (-3.0 * t2 + 4.0 * t - 1.0);
    dw[1] = 0.5 * (9.0 * t2 - 10.0 * t);
    dw[2] = 0.5 * (-9.0 * t2 + 8.0 * t + 1.0);
    dw[3] = 0.5 * (3.0 * t2 - 2.0 * t);
}

}  // namespace detail

/// C1 bicubic (Catmull-Rom) interpolation of a ScalarGrid. Indices are
/// clamped at the edges, so callers keep queries a few cells inside.
inline Jet2 interpolate(const ScalarGrid& g, double x, double y) {
    const double u = (x - g.x0) / g.dx, v = (y - g.y0) / g.dy;
    int j = static_cast<int>(std::floor(u)), i = static_cast<int>(std::floor(v));
    j = std::clamp(j, 0, g.cols - 2);
    i = std::clamp(i, 0, g.rows - 2);
    double wx[4], dwx[4], wy[4], dwy[4];
    detail::catmull_rom(u - j, wx, dwx);
    detail::catmull_rom(v - i, wy, dwy);
    Jet2 out;
    for (int a = 0; a < 4; ++a) {
        const int row = std::clamp(i - 1 + a, 0, g.rows - 1);
        double s = 0.0, sx = 0.0;
        for (int b = 0; b < 4; ++b) {
            const double val = g.at(row, std::clamp(j - 1 + b, 0, g.cols - 1));
            s += wx[b] * val;
            sx += dwx[b] * val;
        }
        out.f += wy[a] * s;
        out.fx += wy[a] * sx;
        out.fy += dwy[a] * s;
    }
    out.fx /= g.dx;
    out.fy /= g.dy;
    return out;
}

}  // namespace leafgibbs
