// symbol.hpp - polynomial phase-space symbols on R^4 = T*R^2.
//
// The canonical representation is in complex coordinates z_j = x_j + i xi_j:
//
//     a(x, xi) = sum_{alpha, beta} c_{alpha beta} z^alpha zbar^beta,
//
// keyed by the exponent quadruple (alpha_1, alpha_2, beta_1, beta_2). A symbol is
// a real-valued function iff c_{alpha beta} = conj(c_{beta alpha}) for every key.
// Real-coordinate polynomials in (x_1, x_2, xi_1, xi_2) appear only at the I/O
// boundary (RealPolynomial and the two basis conversions below).

#pragma once

#include "semicluster/errors.hpp"
#include "semicluster/rational.hpp"

#include <algorithm>
#include <array>
#include <complex>
#include <map>
#include <vector>

namespace semicluster {

inline constexpr int kDefaultMaxDegree = 8;

/// (alpha_1, alpha_2, beta_1, beta_2): exponents of z_1, z_2, zbar_1, zbar_2.
using MonomialKey = std::array<int, 4>;

inline int total_degree(const MonomialKey& k) { return k[0] + k[1] + k[2] + k[3]; }
inline MonomialKey swap_conjugate(const MonomialKey& k) { return {k[2], k[3], k[0], k[1]}; }

template <class C>
class PolySymbol {
public:
    using Coeff = C;
    using Traits = CoeffTraits<C>;
    using Real = typename Traits::Real;
    using Map = std::map<MonomialKey, C>;

    PolySymbol() = default;

    static PolySymbol constant(const C& c) {
        PolySymbol s;
        s.add_term({0, 0, 0, 0}, c);
        return s;
    }
    static PolySymbol monomial(const MonomialKey& key, const C& c) {
        PolySymbol s;
        s.add_term(key, c);
        return s;
    }
    /// z_j, j in {0, 1}.
    static PolySymbol z(int j) {
        MonomialKey k{0, 0, 0, 0};
        k[j] = 1;
        return monomial(k, C(1));
    }
    static PolySymbol zbar(int j) {
        MonomialKey k{0, 0, 0, 0};
        k[2 + j] = 1;
        return monomial(k, C(1));
    }

    void add_term(const MonomialKey& key, const C& c) {
        if (Traits::is_zero(c)) return;
        auto [it, inserted] = terms_.try_emplace(key, c);
        if (!inserted) {
            it->second += c;
            if (Traits::is_zero(it->second)) terms_.erase(it);
        }
    }

    const Map& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    C coefficient(const MonomialKey& key) const {
        auto it = terms_.find(key);
        return it == terms_.end() ? C(0) : it->second;
    }

    int degree() const {
        int d = 0;
        for (const auto& [k, c] : terms_) d = std::max(d, total_degree(k));
        return d;
    }
    int min_degree() const {
        int d = terms_.empty() ? 0 : 1 << 20;
        for (const auto& [k, c] : terms_) d = std::min(d, total_degree(k));
        return d;
    }

    /// Complex conjugate of the function: swaps alpha and beta, conjugates coefficients.
    PolySymbol conj() const {
        PolySymbol out;
        for (const auto& [k, c] : terms_) out.terms_.emplace(swap_conjugate(k), Traits::conj(c));
        return out;
    }

    bool is_real() const {
        for (const auto& [k, c] : terms_) {
            if (coefficient(swap_conjugate(k)) != Traits::conj(c)) return false;
        }
        return true;
    }

    /// Real part as a symbol: (a + conj(a)) / 2.
    PolySymbol real_part() const {
        PolySymbol out = *this + conj();
        return out * C(typename Traits::Real(1) / 2);
    }

    /// d/dz_j (j = 0, 1).
    PolySymbol derivative_z(int j) const { return derivative(j); }
    /// d/dzbar_j (j = 0, 1).
    PolySymbol derivative_zbar(int j) const { return derivative(2 + j); }

    std::complex<double> evaluate(std::complex<double> z1, std::complex<double> z2) const {
        const int d = degree();
        std::array<std::vector<std::complex<double>>, 4> pw;
        const std::array<std::complex<double>, 4> base{z1, z2, std::conj(z1), std::conj(z2)};
        for (int v = 0; v < 4; ++v) {
            pw[v].assign(static_cast<std::size_t>(d) + 1, 1.0);
            for (int e = 1; e <= d; ++e) pw[v][e] = pw[v][e - 1] * base[v];
        }
        std::complex<double> sum = 0.0;
        for (const auto& [k, c] : terms_)
            sum += Traits::to_complex(c) * pw[0][k[0]] * pw[1][k[1]] * pw[2][k[2]] * pw[3][k[3]];
        return sum;
    }

    /// Value at the real phase point (x, xi); real part of the complex evaluation.
    double evaluate_phase(double x1, double x2, double xi1, double xi2) const {
        return evaluate({x1, xi1}, {x2, xi2}).real();
    }

    template <class D>
    PolySymbol<D> cast() const {
        PolySymbol<D> out;
        for (const auto& [k, c] : terms_) {
            if constexpr (std::is_same_v<C, D>) {
                out.add_term(k, c);
            } else {
                out.add_term(k, D(Traits::to_complex(c)));
            }
        }
        return out;
    }

    PolySymbol& operator+=(const PolySymbol& o) {
        for (const auto& [k, c] : o.terms_) add_term(k, c);
        return *this;
    }
    PolySymbol& operator-=(const PolySymbol& o) {
        for (const auto& [k, c] : o.terms_) add_term(k, -c);
        return *this;
    }
    friend PolySymbol operator+(PolySymbol a, const PolySymbol& b) { return a += b; }
    friend PolySymbol operator-(PolySymbol a, const PolySymbol& b) { return a -= b; }
    friend PolySymbol operator-(const PolySymbol& a) { return a * C(-1); }

    friend PolySymbol operator*(const PolySymbol& a, const C& s) {
        PolySymbol out;
        if (Traits::is_zero(s)) return out;
        for (const auto& [k, c] : a.terms_) out.add_term(k, c * s);
        return out;
    }
    friend PolySymbol operator*(const C& s, const PolySymbol& a) { return a * s; }

    friend PolySymbol operator*(const PolySymbol& a, const PolySymbol& b) {
        PolySymbol out;
        for (const auto& [ka, ca] : a.terms_)
            for (const auto& [kb, cb] : b.terms_)
                out.add_term({ka[0] + kb[0], ka[1] + kb[1], ka[2] + kb[2], ka[3] + kb[3]}, ca * cb);
        return out;
    }

    friend bool operator==(const PolySymbol& a, const PolySymbol& b) { return a.terms_ == b.terms_; }
    friend bool operator!=(const PolySymbol& a, const PolySymbol& b) { return !(a == b); }

private:
    PolySymbol derivative(int var) const {
        PolySymbol out;
        for (const auto& [k, c] : terms_) {
            if (k[var] == 0) continue;
            MonomialKey nk = k;
            nk[var] -= 1;
            out.add_term(nk, c * C(k[var]));
        }
        return out;
    }

    Map terms_;
};

using ExactSymbol = PolySymbol<ComplexRational>;
using FloatSymbol = PolySymbol<ComplexDouble>;

/// Product with a degree cap; throws DegreeOverflow when the result would exceed it.
template <class C>
PolySymbol<C> multiply(const PolySymbol<C>& a, const PolySymbol<C>& b, int max_degree = kDefaultMaxDegree) {
    if (!a.is_zero() && !b.is_zero() && a.degree() + b.degree() > max_degree)
        throw DegreeOverflow("symbol product of degree " + std::to_string(a.degree() + b.degree()) +
                             " exceeds the cap " + std::to_string(max_degree));
    return a * b;
}

template <class C>
PolySymbol<C> power(const PolySymbol<C>& a, int e) {
    PolySymbol<C> out = PolySymbol<C>::constant(C(1));
    for (int i = 0; i < e; ++i) out = out * a;
    return out;
}

// ---------------------------------------------------------------------------
// Real-coordinate polynomials (boundary representation).

/// Exponents of (x_1, x_2, xi_1, xi_2).
using RealMonomialKey = std::array<int, 4>;

template <class R>
class RealPolynomial {
public:
    using Map = std::map<RealMonomialKey, R>;

    RealPolynomial() = default;

    static RealPolynomial monomial(const RealMonomialKey& k, const R& c) {
        RealPolynomial p;
        p.add_term(k, c);
        return p;
    }
    /// Coordinate function: 0 -> x_1, 1 -> x_2, 2 -> xi_1, 3 -> xi_2.
    static RealPolynomial variable(int v) {
        RealMonomialKey k{0, 0, 0, 0};
        k[v] = 1;
        return monomial(k, R(1));
    }

    void add_term(const RealMonomialKey& k, const R& c) {
        if (c == R(0)) return;
        auto [it, inserted] = terms_.try_emplace(k, c);
        if (!inserted) {
            it->second += c;
            if (it->second == R(0)) terms_.erase(it);
        }
    }

    const Map& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    int degree() const {
        int d = 0;
        for (const auto& [k, c] : terms_) d = std::max(d, k[0] + k[1] + k[2] + k[3]);
        return d;
    }

    RealPolynomial& operator+=(const RealPolynomial& o) {
        for (const auto& [k, c] : o.terms_) add_term(k, c);
        return *this;
    }
    friend RealPolynomial operator+(RealPolynomial a, const RealPolynomial& b) { return a += b; }
    friend RealPolynomial operator-(RealPolynomial a, const RealPolynomial& b) {
        for (const auto& [k, c] : b.terms_) a.add_term(k, -c);
        return a;
    }
    friend RealPolynomial operator*(const RealPolynomial& a, const R& s) {
        RealPolynomial out;
        for (const auto& [k, c] : a.terms_) out.add_term(k, c * s);
        return out;
    }
    friend RealPolynomial operator*(const RealPolynomial& a, const RealPolynomial& b) {
        RealPolynomial out;
        for (const auto& [ka, ca] : a.terms_)
            for (const auto& [kb, cb] : b.terms_)
                out.add_term({ka[0] + kb[0], ka[1] + kb[1], ka[2] + kb[2], ka[3] + kb[3]}, ca * cb);
        return out;
    }
    friend bool operator==(const RealPolynomial& a, const RealPolynomial& b) { return a.terms_ == b.terms_; }

    /// d/d(var), var indexed as in variable().
    RealPolynomial derivative(int var) const {
        RealPolynomial out;
        for (const auto& [k, c] : terms_) {
            if (k[var] == 0) continue;
            RealMonomialKey nk = k;
            nk[var] -= 1;
            out.add_term(nk, c * R(k[var]));
        }
        return out;
    }

    double evaluate(double x1, double x2, double xi1, double xi2) const {
        const std::array<double, 4> v{x1, x2, xi1, xi2};
        double sum = 0.0;
        for (const auto& [k, c] : terms_) {
            double term = to_double_value(c);
            for (int i = 0; i < 4; ++i)
                for (int e = 0; e < k[i]; ++e) term *= v[i];
            sum += term;
        }
        return sum;
    }

private:
    static double to_double_value(const R& c) {
        if constexpr (std::is_same_v<R, Rational>) {
            return to_double(c);
        } else {
            return static_cast<double>(c);
        }
    }

    Map terms_;
};

template <class R>
struct ComplexOf;
template <>
struct ComplexOf<Rational> {
    using type = ComplexRational;
};
template <>
struct ComplexOf<double> {
    using type = ComplexDouble;
};

/// Rewrites a real-coordinate polynomial in z, zbar monomials via
/// x_j = (z_j + zbar_j)/2 and xi_j = (z_j - zbar_j)/(2i).
template <class R>
PolySymbol<typename ComplexOf<R>::type> to_complex_basis(const RealPolynomial<R>& p) {
    using C = typename ComplexOf<R>::type;
    using S = PolySymbol<C>;
    using T = CoeffTraits<C>;
    const R half = R(1) / R(2);
    std::array<S, 4> var;
    for (int j = 0; j < 2; ++j) {
        var[j] = (S::z(j) + S::zbar(j)) * C(T::from_real(half));
        // 1/(2i) = -i/2
        var[2 + j] = (S::z(j) - S::zbar(j)) * T::make(R(0), -half);
    }
    const int d = p.degree();
    std::array<std::vector<S>, 4> pw;
    for (int v = 0; v < 4; ++v) {
        pw[v].push_back(S::constant(C(1)));
        for (int e = 1; e <= d; ++e) pw[v].push_back(pw[v].back() * var[v]);
    }
    S out;
    for (const auto& [k, c] : p.terms())
        out += pw[0][k[0]] * pw[1][k[1]] * pw[2][k[2]] * pw[3][k[3]] * T::from_real(c);
    return out;
}

/// Inverse of to_complex_basis via z_j = x_j + i xi_j, zbar_j = x_j - i xi_j.
/// Throws ModelError if the symbol is not real-valued.
template <class C>
RealPolynomial<typename CoeffTraits<C>::Real> to_real_basis(const PolySymbol<C>& s) {
    using T = CoeffTraits<C>;
    using R = typename T::Real;
    using CP = RealPolynomial<C>;
    std::array<CP, 4> var;
    for (int j = 0; j < 2; ++j) {
        var[j] = CP::variable(j) + CP::variable(2 + j) * T::make(R(0), R(1));
        var[2 + j] = CP::variable(j) - CP::variable(2 + j) * T::make(R(0), R(1));
    }
    const int d = s.degree();
    std::array<std::vector<CP>, 4> pw;
    for (int v = 0; v < 4; ++v) {
        pw[v].push_back(CP::monomial({0, 0, 0, 0}, C(1)));
        for (int e = 1; e <= d; ++e) pw[v].push_back(pw[v].back() * var[v]);
    }
    CP acc;
    for (const auto& [k, c] : s.terms()) acc += pw[0][k[0]] * pw[1][k[1]] * pw[2][k[2]] * pw[3][k[3]] * c;
    RealPolynomial<R> out;
    for (const auto& [k, c] : acc.terms()) {
        if constexpr (T::exact) {
            if (T::imag(c) != 0) throw ModelError("to_real_basis: symbol is not real-valued");
        } else {
            if (std::abs(T::imag(c)) > 1e-12 * (1.0 + std::abs(T::real(c))))
                throw ModelError("to_real_basis: symbol is not real-valued");
        }
        out.add_term(k, T::real(c));
    }
    return out;
}

}  // namespace semicluster
