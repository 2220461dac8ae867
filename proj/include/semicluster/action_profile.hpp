// action_profile.hpp - the action g(E) with g' = T/2pi and its inverse f.
//
// T is sampled once on Chebyshev points of the profiled range; g integrates the
// barycentric interpolant with Gauss-Legendre quadrature, so a period function
// that is itself the output of a numerical flow is called a fixed number of times.

#pragma once

#include "semicluster/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace semicluster {

class ActionProfile {
public:
    /// T is the period function on [e_lo, e_hi]; g(e_ref) = 0.
    ActionProfile(std::function<double(double)> T, double e_lo, double e_hi, double e_ref = 0.0, int nodes = 48)
        : lo_(e_lo), hi_(e_hi), ref_(e_ref) {
        if (!(e_lo < e_hi)) throw std::invalid_argument("ActionProfile: empty energy range");
        a_ = std::min(lo_, ref_);
        b_ = std::max(hi_, ref_);
        x_.resize(static_cast<std::size_t>(nodes));
        t_.resize(x_.size());
        w_.resize(x_.size());
        const int n = nodes - 1;
        for (int j = 0; j <= n; ++j) {
            x_[j] = 0.5 * (a_ + b_) - 0.5 * (b_ - a_) * std::cos(M_PI * j / n);
            t_[j] = T(x_[j]);
            // g is increasing iff T > 0; anything else means the period computation failed
            if (!std::isfinite(t_[j]) || t_[j] <= 0.0)
                throw ConvergenceError("ActionProfile: non-monotone action (period not positive at E = " +
                                       std::to_string(x_[j]) + ")");
            w_[j] = ((j % 2) ? -1.0 : 1.0) * ((j == 0 || j == n) ? 0.5 : 1.0);
        }
        g_lo_ = g(lo_);
        g_hi_ = g(hi_);
    }

    /// Interpolated period.
    double period(double E) const {
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < x_.size(); ++j) {
            const double d = E - x_[j];
            if (d == 0.0) return t_[j];
            num += w_[j] / d * t_[j];
            den += w_[j] / d;
        }
        return num / den;
    }

    double g(double E) const {
        if (E == ref_) return 0.0;
        if (E < a_ - 1e-12 * (b_ - a_) || E > b_ + 1e-12 * (b_ - a_))
            throw std::out_of_range("ActionProfile::g: energy outside the profiled range");
        using GL = boost::math::quadrature::gauss<double, 40>;
        return GL::integrate([this](double s) { return period(s) / (2.0 * M_PI); }, ref_, E);
    }

    /// f = g^{-1} on [g(e_lo), g(e_hi)].
    double f(double xi) const {
        const double span = g_hi_ - g_lo_;
        if (xi < g_lo_ - 1e-12 * span || xi > g_hi_ + 1e-12 * span)
            throw std::out_of_range("ActionProfile::f: action outside the profiled range");
        if (xi <= g_lo_) return lo_;
        if (xi >= g_hi_) return hi_;
        auto h = [&](double e) { return g(e) - xi; };
        std::uintmax_t iters = 200;
        const auto r = boost::math::tools::toms748_solve(h, lo_, hi_, g_lo_ - xi, g_hi_ - xi,
                                                         boost::math::tools::eps_tolerance<double>(50), iters);
        return 0.5 * (r.first + r.second);
    }

    double e_lo() const { return lo_; }
    double e_hi() const { return hi_; }
    double e_ref() const { return ref_; }

private:
    double lo_, hi_, ref_;
    double a_ = 0.0, b_ = 0.0;
    std::vector<double> x_, t_, w_;
    double g_lo_ = 0.0, g_hi_ = 0.0;
};

inline ActionProfile build_action_profile(std::function<double(double)> T, double e_lo, double e_hi,
                                          double e_ref = 0.0) {
    return ActionProfile(std::move(T), e_lo, e_hi, e_ref);
}

}  // namespace semicluster
