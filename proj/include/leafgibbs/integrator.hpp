#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "core.hpp"
#include "geometry.hpp"

namespace leafgibbs {

struct FlowParams {
    double dt = 1e-3;
    int renormalize_every = 16;
    double tolerance = 1e-9;
};

inline void validate(const FlowParams& p) {
    if (!(p.dt > 0.0)) throw ConfigError("flow params: dt must be positive");
    if (p.renormalize_every < 1) throw ConfigError("flow params: renormalize_every must be >= 1");
}

/// Number of equal steps of size at most dt covering a time span t.
inline long step_count(double t, double dt) {
    const double n = std::ceil(std::abs(t) / dt - 1e-9);
    return n < 1.0 ? 1 : static_cast<long>(n);
}

/// One classical RK4 step of the geodesic equation, coupled to E scalar
/// quantities whose rate is supplied by extra(chart, y, e, de).
template <SurfaceModel M, std::size_t E, class Extra>
void rk4_step(const M& m, PhaseState& s, std::array<double, E>& e, double h, Extra&& extra) {
    constexpr std::size_t N = 4 + E;
    std::array<double, N> y0{}, k1{}, k2{}, k3{}, k4{}, tmp{};
    for (std::size_t i = 0; i < 4; ++i) y0[i] = s.y[i];
    for (std::size_t i = 0; i < E; ++i) y0[4 + i] = e[i];
    const Chart c = s.chart;
    auto rhs = [&](const std::array<double, N>& y, std::array<double, N>& dy) {
        m.derivative(c, y.data(), dy.data());
        if constexpr (E > 0) extra(c, y.data(), y.data() + 4, dy.data() + 4);
    };
    rhs(y0, k1);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y0[i] + 0.5 * h * k1[i];
    rhs(tmp, k2);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y0[i] + 0.5 * h * k2[i];
    rhs(tmp, k3);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y0[i] + h * k3[i];
    rhs(tmp, k4);
    for (std::size_t i = 0; i < N; ++i) {
        const double next = y0[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if (i < 4)
            s.y[i] = next;
        else
            e[i - 4] = next;
    }
}

/// A geodesic orbit under integration, optionally carrying E coupled
/// scalars. Speed is renormalized every params.renormalize_every steps and
/// the chart is updated after every step.
template <SurfaceModel M, std::size_t E = 0>
class Orbit {
public:
    Orbit(const M& model, const UnitTangentVector& v, FlowParams params)
        : model_(&model), state_(model.lift(v)), params_(params) {
        validate(params_);
        if (!model.admissible(v.base))
            throw DomainError(std::string(M::name) + ": initial vector outside the admissible domain");
    }

    Orbit(const M& model, PhaseState s, FlowParams params) : model_(&model), state_(s), params_(params) {
        validate(params_);
    }

    template <class Extra>
    void step(double h, Extra&& extra) {
        const PhaseState before = state_;
        rk4_step(*model_, state_, extras_, h, extra);
        ++steps_;
        time_ += h;
        if (steps_ % params_.renormalize_every == 0) model_->normalize(state_);
        if (!model_->state_admissible(state_)) {
            const auto last = model_->project(before);
            state_ = before;
            time_ -= h;
            throw ExcursionError(std::string(M::name) + ": orbit left the admissible domain", last);
        }
        model_->rechart(state_);
    }

    void step(double h) {
        step(h, [](Chart, const double*, const double*, double*) {});
    }

    /// Integrates a time span t (either sign) with equal steps no larger than dt.
    template <class Extra, class Hook>
    void advance(double t, Extra&& extra, Hook&& after_step) {
        if (t == 0.0) return;
        const long n = step_count(t, params_.dt);
        const double h = t / static_cast<double>(n);
        for (long i = 0; i < n; ++i) {
            step(h, extra);
            after_step(*this);
        }
    }

    void advance(double t) {
        advance(t, [](Chart, const double*, const double*, double*) {}, [](Orbit&) {});
    }

    UnitTangentVector vector() const { return model_->project(state_); }
    const PhaseState& state() const { return state_; }
    PhaseState& state() { return state_; }
    std::array<double, E>& extras() { return extras_; }
    const std::array<double, E>& extras() const { return extras_; }
    double time() const { return time_; }
    long steps() const { return steps_; }
    const M& model() const { return *model_; }
    const FlowParams& params() const { return params_; }

private:
    const M* model_;
    PhaseState state_;
    FlowParams params_;
    std::array<double, E> extras_{};
    long steps_ = 0;
    double time_ = 0.0;
};

}  // namespace leafgibbs
