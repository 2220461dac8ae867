// poisson.hpp - Poisson brackets, flow averages and the homological equation
// for the resonant harmonic part p2 = sum_j (lambda_j / 2)(x_j^2 + xi_j^2).
//
// Bracket convention, used everywhere in the library:
//
//     {a, b} = H_a b = a'_xi . b'_x - a'_x . b'_xi
//            = 2i sum_j (d_{z_j} a  d_{zbar_j} b - d_{zbar_j} a  d_{z_j} b).
//
// With it {xi_1, x_1} = 1 and {p2, z_j} = -i lambda_j z_j, so the H_{p2} flow is
// z_j(t) = exp(-i lambda_j t) z_j(0) and acts diagonally on monomials.

#pragma once

#include "semicluster/errors.hpp"
#include "semicluster/rational.hpp"
#include "semicluster/symbol.hpp"

#include <array>
#include <cmath>
#include <numeric>
#include <optional>

namespace semicluster {

/// Oscillator frequencies with a resonance certificate k, lambda . k = 0.
class FrequencyVector {
public:
    FrequencyVector() : FrequencyVector(Rational(1), Rational(1)) {}
    FrequencyVector(Rational l1, Rational l2) : lambda_{std::move(l1), std::move(l2)} {
        if (lambda_[0] <= 0 || lambda_[1] <= 0) throw ModelError("FrequencyVector: frequencies must be positive");
        // l1 = p1/q1, l2 = p2/q2  ->  k = (p2 q1, -p1 q2) / gcd
        using boost::multiprecision::denominator;
        using boost::multiprecision::numerator;
        BigInt k1 = numerator(lambda_[1]) * denominator(lambda_[0]);
        BigInt k2 = -numerator(lambda_[0]) * denominator(lambda_[1]);
        BigInt g = boost::multiprecision::gcd(k1, k2);
        k1 /= g;
        k2 /= g;
        resonance_ = std::array<long long, 2>{k1.convert_to<long long>(), k2.convert_to<long long>()};
    }

    const Rational& operator[](int j) const { return lambda_[j]; }
    double value(int j) const { return to_double(lambda_[j]); }
    const std::optional<std::array<long long, 2>>& resonance() const { return resonance_; }

    /// lambda . (alpha - beta) for a monomial key.
    Rational detuning(const MonomialKey& k) const {
        return lambda_[0] * (k[0] - k[2]) + lambda_[1] * (k[1] - k[3]);
    }

    bool is_one_one() const { return lambda_[0] == 1 && lambda_[1] == 1; }

    /// Minimal common period 2 pi / gcd(lambda_1, lambda_2) of the H_{p2} flow.
    double period() const {
        using boost::multiprecision::denominator;
        using boost::multiprecision::numerator;
        // gcd of rationals: gcd(numerators) / lcm(denominators) after a common denominator.
        BigInt d = boost::multiprecision::lcm(denominator(lambda_[0]), denominator(lambda_[1]));
        BigInt n0 = numerator(lambda_[0]) * (d / denominator(lambda_[0]));
        BigInt n1 = numerator(lambda_[1]) * (d / denominator(lambda_[1]));
        Rational g(boost::multiprecision::gcd(n0, n1), d);
        return 2.0 * M_PI / to_double(g);
    }

    friend bool operator==(const FrequencyVector& a, const FrequencyVector& b) { return a.lambda_ == b.lambda_; }

private:
    std::array<Rational, 2> lambda_;
    std::optional<std::array<long long, 2>> resonance_;
};

/// p2 = sum_j (lambda_j / 2) z_j zbar_j.
template <class C = ComplexRational>
PolySymbol<C> harmonic_symbol(const FrequencyVector& lam) {
    using T = CoeffTraits<C>;
    PolySymbol<C> p;
    p.add_term({1, 0, 1, 0}, T::from_real(T::real_from_rational(lam[0] / 2)));
    p.add_term({0, 1, 0, 1}, T::from_real(T::real_from_rational(lam[1] / 2)));
    return p;
}

/// {a, b} = H_a b. Throws DegreeOverflow when deg(a) + deg(b) - 2 exceeds max_degree.
template <class C>
PolySymbol<C> poisson_bracket(const PolySymbol<C>& a, const PolySymbol<C>& b, int max_degree = kDefaultMaxDegree) {
    using T = CoeffTraits<C>;
    PolySymbol<C> out;
    if (a.is_zero() || b.is_zero()) return out;
    if (a.degree() + b.degree() - 2 > max_degree)
        throw DegreeOverflow("poisson_bracket: result degree " + std::to_string(a.degree() + b.degree() - 2) +
                             " exceeds the cap " + std::to_string(max_degree));
    for (const auto& [ka, ca] : a.terms()) {
        for (const auto& [kb, cb] : b.terms()) {
            for (int j = 0; j < 2; ++j) {
                const int w = ka[j] * kb[2 + j] - ka[2 + j] * kb[j];
                if (w == 0) continue;
                MonomialKey k{ka[0] + kb[0], ka[1] + kb[1], ka[2] + kb[2], ka[3] + kb[3]};
                k[j] -= 1;
                k[2 + j] -= 1;
                out.add_term(k, T::times_i(ca * cb * C(2 * w)));
            }
        }
    }
    return out;
}

/// Time average along the periodic H_{p2} flow: keeps exactly the monomials with
/// lambda . (alpha - beta) = 0.
template <class C>
PolySymbol<C> flow_average(const PolySymbol<C>& q, const FrequencyVector& lam) {
    if (!lam.resonance()) throw ResonanceError("flow_average: frequency vector has no resonance certificate");
    PolySymbol<C> out;
    for (const auto& [k, c] : q.terms())
        if (lam.detuning(k) == 0) out.add_term(k, c);
    return out;
}

template <class C>
bool is_flow_invariant(const PolySymbol<C>& q, const FrequencyVector& lam) {
    for (const auto& [k, c] : q.terms())
        if (lam.detuning(k) != 0) return false;
    return true;
}

/// Solves {p2, G0} = q - <q> monomial by monomial: G0 coefficient = i c / (lambda . (alpha - beta)).
/// The result contains no resonant monomials and is real whenever q is.
/// With assume_averaged = true the caller asserts <q> = 0 already; a resonant
/// monomial then raises ResonanceError instead of being subtracted.
template <class C>
PolySymbol<C> solve_homological(const PolySymbol<C>& q, const FrequencyVector& lam, bool assume_averaged = false) {
    using T = CoeffTraits<C>;
    if (!lam.resonance()) throw ResonanceError("solve_homological: frequency vector has no resonance certificate");
    PolySymbol<C> g;
    for (const auto& [k, c] : q.terms()) {
        const Rational w = lam.detuning(k);
        if (w == 0) {
            if (assume_averaged)
                throw ResonanceError("solve_homological: resonant monomial present in an input asserted to be averaged");
            continue;
        }
        const auto inv = T::real_from_rational(Rational(1) / w);
        g.add_term(k, T::times_i(c) * T::from_real(inv));
    }
    return g;
}

}  // namespace semicluster
