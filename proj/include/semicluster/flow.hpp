// flow.hpp - Hamiltonian flows of polynomial symbols and period detection.
//
// Hamilton's equations in complex form: dz_j/dt = -2i d_{zbar_j} p, which is
// x' = p'_xi, xi' = -p'_x. Harmonic symbols sum_j c_j z_j zbar_j are advanced by
// the exact rotation z_j -> exp(-2i c_j t) z_j; everything else by an adaptive
// Dormand-Prince integrator with dense output.

#pragma once

#include "semicluster/errors.hpp"
#include "semicluster/symbol.hpp"

#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <vector>

namespace semicluster {

/// (x1, x2, xi1, xi2).
using PhasePoint = std::array<double, 4>;

struct TrajectorySample {
    double t;
    PhasePoint state;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    double energy_drift = 0.0;
};

struct FlowOptions {
    double initial_step = 1e-2;
    double min_step = 1e-13;
    std::size_t max_steps = 5'000'000;
    /// Sample spacing for exactly integrated (harmonic) flows.
    double exact_sample_dt = 0.05;
};

/// Frequencies (lambda_1, lambda_2) when p = sum_j (lambda_j / 2) z_j zbar_j.
template <class C>
std::optional<std::array<double, 2>> harmonic_frequencies(const PolySymbol<C>& p) {
    using T = CoeffTraits<C>;
    std::array<double, 2> lam{0.0, 0.0};
    for (const auto& [k, c] : p.terms()) {
        const auto v = T::to_complex(c);
        if (v.imag() != 0.0) return std::nullopt;
        if (k == MonomialKey{1, 0, 1, 0}) lam[0] = 2 * v.real();
        else if (k == MonomialKey{0, 1, 0, 1}) lam[1] = 2 * v.real();
        else return std::nullopt;
    }
    if (lam[0] <= 0.0 || lam[1] <= 0.0) return std::nullopt;
    return lam;
}

/// Right-hand side of Hamilton's equations for a polynomial symbol.
class HamiltonianField {
public:
    template <class C>
    explicit HamiltonianField(const PolySymbol<C>& p)
        : p_(p.template cast<ComplexDouble>()),
          dzbar_{p_.derivative_zbar(0), p_.derivative_zbar(1)} {}

    void operator()(const PhasePoint& s, PhasePoint& ds, double /*t*/) const {
        const std::complex<double> z1(s[0], s[2]), z2(s[1], s[3]);
        for (int j = 0; j < 2; ++j) {
            const auto zdot = std::complex<double>(0.0, -2.0) * dzbar_[j].evaluate(z1, z2);
            ds[j] = zdot.real();
            ds[2 + j] = zdot.imag();
        }
    }

    double energy(const PhasePoint& s) const { return p_.evaluate_phase(s[0], s[1], s[2], s[3]); }

private:
    FloatSymbol p_;
    std::array<FloatSymbol, 2> dzbar_;
};

/// Exact rotation of the harmonic flow.
inline PhasePoint harmonic_rotate(const std::array<double, 2>& lam, const PhasePoint& s, double t) {
    PhasePoint out{};
    for (int j = 0; j < 2; ++j) {
        const auto z = std::exp(std::complex<double>(0.0, -lam[j] * t)) * std::complex<double>(s[j], s[2 + j]);
        out[j] = z.real();
        out[2 + j] = z.imag();
    }
    return out;
}

/// Adaptive dense-output integrator: advance() accepts one step, state(t)
/// interpolates inside the last accepted step.
template <class State, class System>
class DenseFlow {
public:
    DenseFlow(System sys, const State& start, double abs_tol, double rel_tol, const FlowOptions& opt = {})
        : sys_(std::move(sys)),
          stepper_(boost::numeric::odeint::make_dense_output(
              abs_tol, rel_tol, boost::numeric::odeint::runge_kutta_dopri5<State>())),
          opt_(opt) {
        stepper_.initialize(start, 0.0, opt.initial_step);
    }

    /// Accepts one step; returns the new time.
    double advance() {
        if (++steps_ > opt_.max_steps) throw ConvergenceError("DenseFlow: step limit reached");
        stepper_.do_step(std::ref(sys_));
        if (stepper_.current_time_step() < opt_.min_step)
            throw ConvergenceError("DenseFlow: step size underflow");
        return stepper_.current_time();
    }

    double previous_time() const { return stepper_.previous_time(); }
    double current_time() const { return stepper_.current_time(); }
    const State& current_state() const { return stepper_.current_state(); }

    State state(double t) {
        State s;
        stepper_.calc_state(t, s);
        return s;
    }

    System& system() { return sys_; }

private:
    using Stepper = typename boost::numeric::odeint::result_of::make_dense_output<
        boost::numeric::odeint::runge_kutta_dopri5<State>>::type;
    System sys_;
    Stepper stepper_;
    FlowOptions opt_;
    std::size_t steps_ = 0;
};

/// Integrates Hamilton's equations of p from start over [0, t_end].
template <class C>
Trajectory integrate_flow(const PolySymbol<C>& p, const PhasePoint& start, double t_end, double tol,
                          const FlowOptions& opt = {}) {
    if (!(tol > 0.0)) throw std::invalid_argument("integrate_flow: tolerance must be positive");
    if (t_end < 0.0) throw std::invalid_argument("integrate_flow: t_end must be non-negative");
    HamiltonianField field(p);
    const double e0 = field.energy(start);
    Trajectory tr;
    tr.samples.push_back({0.0, start});
    if (t_end == 0.0) return tr;

    if (const auto lam = harmonic_frequencies(p)) {
        const auto n = static_cast<std::size_t>(std::ceil(t_end / opt.exact_sample_dt));
        for (std::size_t i = 1; i <= n; ++i) {
            const double t = (i == n) ? t_end : t_end * static_cast<double>(i) / static_cast<double>(n);
            tr.samples.push_back({t, harmonic_rotate(*lam, start, t)});
        }
    } else {
        DenseFlow<PhasePoint, HamiltonianField> flow(field, start, tol, tol, opt);
        while (flow.current_time() < t_end) {
            const double t = flow.advance();
            if (t >= t_end) tr.samples.push_back({t_end, flow.state(t_end)});
            else tr.samples.push_back({t, flow.current_state()});
        }
    }
    for (const auto& s : tr.samples) tr.energy_drift = std::max(tr.energy_drift, std::abs(field.energy(s.state) - e0));
    return tr;
}

namespace detail {

inline double dot4(const PhasePoint& a, const PhasePoint& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

inline double dist4(const PhasePoint& a, const PhasePoint& b) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

}  // namespace detail

/// Point s * d on p^{-1}(E) along a fixed generic direction d, with s > 0.
template <class C>
PhasePoint energy_surface_point(const PolySymbol<C>& p, double E,
                                const PhasePoint& direction = {0.61, 0.37, -0.29, 0.52}) {
    HamiltonianField field(p);
    const double norm = std::sqrt(detail::dot4(direction, direction));
    auto at = [&](double s) {
        PhasePoint x{};
        for (int i = 0; i < 4; ++i) x[i] = s * direction[i] / norm;
        return x;
    };
    auto f = [&](double s) { return field.energy(at(s)) - E; };
    if (f(0.0) >= 0.0) throw std::invalid_argument("energy_surface_point: E must exceed p(0)");
    double hi = 1.0;
    for (int i = 0; f(hi) < 0.0; ++i) {
        if (i > 60) throw ConvergenceError("energy_surface_point: level not reached along the ray");
        hi *= 2.0;
    }
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(f, 0.0, hi, boost::math::tools::eps_tolerance<double>(52), iters);
    return at(0.5 * (r.first + r.second));
}

/// Minimal return time of the p-flow through a generic point of p^{-1}(E).
/// A return is a crossing of the hyperplane through the start point normal to
/// the initial velocity that lands within `close` of the start; the crossing
/// time is refined by bisection on the (dense or exact) flow.
template <class C>
double detect_period(const PolySymbol<C>& p, double E, double tol, double horizon = 1e3, double close = 1e-5) {
    if (!(tol > 0.0)) throw std::invalid_argument("detect_period: tolerance must be positive");
    const PhasePoint start = energy_surface_point(p, E);
    HamiltonianField field(p);
    PhasePoint v0{};
    field(start, v0, 0.0);
    const double scale = std::sqrt(detail::dot4(start, start));
    auto section = [&](const PhasePoint& s) {
        PhasePoint d{};
        for (int i = 0; i < 4; ++i) d[i] = s[i] - start[i];
        return detail::dot4(d, v0);
    };

    auto refine = [&](auto&& state_at, double a, double b) {
        double ga = section(state_at(a));
        for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, b); ++it) {
            const double m = 0.5 * (a + b);
            const double gm = section(state_at(m));
            if ((gm < 0.0) == (ga < 0.0)) {
                a = m;
                ga = gm;
            } else {
                b = m;
            }
        }
        return 0.5 * (a + b);
    };

    const double accept = close * (1.0 + scale);
    if (const auto lam = harmonic_frequencies(p)) {
        auto state_at = [&](double t) { return harmonic_rotate(*lam, start, t); };
        const double dt = 0.01 * 2.0 * M_PI / std::max((*lam)[0], (*lam)[1]);
        double t0 = dt, g0 = section(state_at(t0));
        for (double t1 = 2 * dt; t1 <= horizon; t1 += dt) {
            const double g1 = section(state_at(t1));
            if (g0 < 0.0 && g1 >= 0.0) {
                const double t = refine(state_at, t0, t1);
                if (detail::dist4(state_at(t), start) < accept) return t;
            }
            t0 = t1;
            g0 = g1;
        }
    } else {
        DenseFlow<PhasePoint, HamiltonianField> flow(field, start, tol, tol);
        double g0 = section(start);
        while (flow.current_time() < horizon) {
            const double t1 = flow.advance();
            const double t0 = flow.previous_time();
            const double g1 = section(flow.current_state());
            if (t0 > 0.0 && g0 < 0.0 && g1 >= 0.0) {
                const double t = refine([&](double s) { return flow.state(s); }, t0, t1);
                if (detail::dist4(flow.state(t), start) < accept) return t;
            }
            g0 = g1;
        }
    }
    throw ConvergenceError("detect_period: no return detected within the time horizon");
}

}  // namespace semicluster
