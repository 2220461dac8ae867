// magnetic.hpp - the quartic magnetic oscillator model
//
//     p(x, xi) = p2(x, xi) + sum_j A_{j,3}(x) xi_j + p4(x),
//     A_{j,3}(x) = sum_k a_{j,k} x1^k x2^(3-k),   p4(x) = sum_k c_k x1^k x2^(4-k),
//
// in the normal coordinates where p2 = sum_j (lambda_j/2)(x_j^2 + xi_j^2). After
// the rescaling x = eps^{1/2} y the quartic part becomes the perturbation q.

#pragma once

#include "semicluster/errors.hpp"
#include "semicluster/poisson.hpp"
#include "semicluster/symbol.hpp"

#include <array>
#include <utility>

namespace semicluster {

struct MagneticModel {
    FrequencyVector lambda;
    /// a[j][k]: coefficient of x1^k x2^(3-k) in A_{j+1}.
    std::array<std::array<Rational, 4>, 2> a{};
    /// p4[k]: coefficient of x1^k x2^(4-k).
    std::array<Rational, 5> p4{};

    bool has_vector_potential() const {
        for (const auto& row : a)
            for (const auto& c : row)
                if (c != 0) return true;
        return false;
    }
};

/// Field coefficients of B(x) = b2 x1^2 + b1 x1 x2 + b0 x2^2.
struct FieldCoefficients {
    Rational b2{0}, b1{0}, b0{0};
    friend bool operator==(const FieldCoefficients&, const FieldCoefficients&) = default;
};

/// Model with A_1 = 0 and A_2 = (b2/3) x1^3 + (b1/2) x1^2 x2 + b0 x1 x2^2, whose field is (b2, b1, b0).
inline MagneticModel model_from_field(const Rational& b2, const Rational& b1, const Rational& b0,
                                      FrequencyVector lam = {}) {
    MagneticModel m;
    m.lambda = std::move(lam);
    m.a[1][3] = b2 / 3;
    m.a[1][2] = b1 / 2;
    m.a[1][1] = b0;
    return m;
}

/// A_{j+1}(x) as a real-coordinate polynomial.
inline RealPolynomial<Rational> vector_potential(const MagneticModel& m, int j) {
    RealPolynomial<Rational> A;
    for (int k = 0; k <= 3; ++k) A.add_term({k, 3 - k, 0, 0}, m.a[j][k]);
    return A;
}

inline RealPolynomial<Rational> quartic_potential(const MagneticModel& m) {
    RealPolynomial<Rational> V;
    for (int k = 0; k <= 4; ++k) V.add_term({k, 4 - k, 0, 0}, m.p4[k]);
    return V;
}

/// The perturbation q = sum_j A_{j,3}(x) xi_j + p4(x) in real coordinates.
inline RealPolynomial<Rational> magnetic_perturbation_real(const MagneticModel& m) {
    RealPolynomial<Rational> q = quartic_potential(m);
    for (int j = 0; j < 2; ++j) q += vector_potential(m, j) * RealPolynomial<Rational>::variable(2 + j);
    return q;
}

struct ModelSymbols {
    ExactSymbol p2;
    ExactSymbol q;
};

/// (p2, q) in z, zbar monomials. The frequency vector is the diagonalized V''(0);
/// FrequencyVector already rejects non-positive entries.
inline ModelSymbols magnetic_symbol(const MagneticModel& m) {
    if (m.lambda[0] <= 0 || m.lambda[1] <= 0) throw ModelError("magnetic_symbol: V2 must be positive definite");
    return {harmonic_symbol<ComplexRational>(m.lambda), to_complex_basis(magnetic_perturbation_real(m))};
}

/// B = d_1 A_2 - d_2 A_1, computed by differentiating the potential.
inline FieldCoefficients magnetic_field(const MagneticModel& m) {
    const auto B = vector_potential(m, 1).derivative(0) - vector_potential(m, 0).derivative(1);
    FieldCoefficients f;
    for (const auto& [k, c] : B.terms()) {
        if (k == RealMonomialKey{2, 0, 0, 0}) f.b2 = c;
        else if (k == RealMonomialKey{1, 1, 0, 0}) f.b1 = c;
        else if (k == RealMonomialKey{0, 2, 0, 0}) f.b0 = c;
    }
    return f;
}

/// Gauge-shifted model. In normal coordinates the shift enters q as H_{p2} phi,
/// i.e. A_j -> A_j + lambda_j d_j phi; for lambda = (1, 1) this is A -> A + d phi.
/// phi must be a homogeneous quartic in x.
inline MagneticModel gauge_shift(const MagneticModel& m, const RealPolynomial<Rational>& phi) {
    for (const auto& [k, c] : phi.terms()) {
        if (k[2] != 0 || k[3] != 0 || k[0] + k[1] != 4)
            throw ModelError("gauge_shift: phi must be a homogeneous quartic polynomial in x");
    }
    MagneticModel out = m;
    for (int j = 0; j < 2; ++j) {
        const auto dphi = phi.derivative(j);
        for (const auto& [k, c] : dphi.terms()) out.a[j][k[0]] += m.lambda[j] * c;
    }
    return out;
}

template <class C = ComplexRational>
struct GaugeReport {
    PolySymbol<C> difference;  ///< <q_{A + d phi}> - <q_A>; the zero symbol when invariance holds
    bool average_invariant = false;
    bool field_invariant = false;
};

/// Checks that the flow average of q depends on A only through B = dA.
inline GaugeReport<> gauge_check(const MagneticModel& m, const RealPolynomial<Rational>& phi) {
    const MagneticModel shifted = gauge_shift(m, phi);
    const auto avg0 = flow_average(magnetic_symbol(m).q, m.lambda);
    const auto avg1 = flow_average(magnetic_symbol(shifted).q, m.lambda);
    GaugeReport<> r;
    r.difference = avg1 - avg0;
    r.average_invariant = r.difference.is_zero();
    r.field_invariant = magnetic_field(shifted) == magnetic_field(m);
    return r;
}

}  // namespace semicluster
