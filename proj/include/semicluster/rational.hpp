// rational.hpp - exact complex-rational coefficients and the coefficient traits
// shared by exact-rational and floating-point symbol arithmetic.

#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>

namespace semicluster {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Parses "num/den" or "num". Throws std::invalid_argument on malformed input
/// or a zero denominator.
inline Rational parse_rational(std::string_view text) {
    auto trim = [](std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '+')) s.remove_prefix(1);
        while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
        return s;
    };
    text = trim(text);
    if (text.empty()) throw std::invalid_argument("parse_rational: empty string");
    auto valid_int = [](std::string_view s) {
        if (s.empty()) return false;
        std::size_t i = (s.front() == '-') ? 1 : 0;
        if (i == s.size()) return false;
        for (; i < s.size(); ++i)
            if (s[i] < '0' || s[i] > '9') return false;
        return true;
    };
    const auto slash = text.find('/');
    const std::string_view num = slash == std::string_view::npos ? text : trim(text.substr(0, slash));
    const std::string_view den = slash == std::string_view::npos ? std::string_view{"1"} : trim(text.substr(slash + 1));
    if (!valid_int(num) || !valid_int(den))
        throw std::invalid_argument("parse_rational: malformed rational '" + std::string(text) + "'");
    BigInt n(std::string{num});
    BigInt d(std::string{den});
    if (d == 0) throw std::invalid_argument("parse_rational: zero denominator");
    return Rational(n, d);
}

/// Canonical "num/den" form; the denominator is always written, "3/1" included.
inline std::string format_rational(const Rational& r) {
    return boost::multiprecision::numerator(r).str() + "/" + boost::multiprecision::denominator(r).str();
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

/// Rational from a double that is exactly representable (dyadic); used when
/// configuration values arrive as JSON numbers.
inline Rational rational_from_double(double v) {
    if (!std::isfinite(v)) throw std::invalid_argument("rational_from_double: non-finite value");
    int exp = 0;
    double mant = std::frexp(v, &exp);
    // 53 bits of mantissa are enough for any double.
    BigInt m = static_cast<long long>(std::ldexp(mant, 53));
    exp -= 53;
    if (exp >= 0) return Rational(m << exp);
    return Rational(m, BigInt(1) << (-exp));
}

struct ComplexRational {
    Rational re{0};
    Rational im{0};

    ComplexRational() = default;
    ComplexRational(Rational r) : re(std::move(r)) {}  // NOLINT: implicit by intent
    ComplexRational(int r) : re(r) {}                    // NOLINT
    ComplexRational(Rational r, Rational i) : re(std::move(r)), im(std::move(i)) {}

    friend ComplexRational operator+(const ComplexRational& a, const ComplexRational& b) {
        return {a.re + b.re, a.im + b.im};
    }
    friend ComplexRational operator-(const ComplexRational& a, const ComplexRational& b) {
        return {a.re - b.re, a.im - b.im};
    }
    friend ComplexRational operator-(const ComplexRational& a) { return {-a.re, -a.im}; }
    friend ComplexRational operator*(const ComplexRational& a, const ComplexRational& b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend ComplexRational operator/(const ComplexRational& a, const ComplexRational& b) {
        const Rational n = b.re * b.re + b.im * b.im;
        if (n == 0) throw std::domain_error("ComplexRational: division by zero");
        return {(a.re * b.re + a.im * b.im) / n, (a.im * b.re - a.re * b.im) / n};
    }
    ComplexRational& operator+=(const ComplexRational& o) { return *this = *this + o; }
    ComplexRational& operator-=(const ComplexRational& o) { return *this = *this - o; }
    ComplexRational& operator*=(const ComplexRational& o) { return *this = *this * o; }
    friend bool operator==(const ComplexRational& a, const ComplexRational& b) {
        return a.re == b.re && a.im == b.im;
    }
    friend bool operator!=(const ComplexRational& a, const ComplexRational& b) { return !(a == b); }
};

inline ComplexRational conj(const ComplexRational& c) { return {c.re, -c.im}; }

// ---------------------------------------------------------------------------
// Coefficient traits. A symbol coefficient type C provides zero tests,
// conjugation, scaling by the imaginary unit and conversion to complex<double>.

template <class C>
struct CoeffTraits;

template <>
struct CoeffTraits<ComplexRational> {
    using Real = Rational;
    static constexpr bool exact = true;
    static bool is_zero(const ComplexRational& c) { return c.re == 0 && c.im == 0; }
    static ComplexRational conj(const ComplexRational& c) { return {c.re, -c.im}; }
    static ComplexRational times_i(const ComplexRational& c) { return {-c.im, c.re}; }
    static ComplexRational from_real(const Real& r) { return {r, Rational(0)}; }
    static ComplexRational make(const Real& r, const Real& i) { return {r, i}; }
    static std::complex<double> to_complex(const ComplexRational& c) { return {to_double(c.re), to_double(c.im)}; }
    static Real real(const ComplexRational& c) { return c.re; }
    static Real imag(const ComplexRational& c) { return c.im; }
    static Real real_from_rational(const Rational& r) { return r; }
};

template <>
struct CoeffTraits<std::complex<double>> {
    using Real = double;
    static constexpr bool exact = false;
    static bool is_zero(const std::complex<double>& c) { return c.real() == 0.0 && c.imag() == 0.0; }
    static std::complex<double> conj(const std::complex<double>& c) { return std::conj(c); }
    static std::complex<double> times_i(const std::complex<double>& c) { return {-c.imag(), c.real()}; }
    static std::complex<double> from_real(double r) { return {r, 0.0}; }
    static std::complex<double> make(double r, double i) { return {r, i}; }
    static std::complex<double> to_complex(const std::complex<double>& c) { return c; }
    static double real(const std::complex<double>& c) { return c.real(); }
    static double imag(const std::complex<double>& c) { return c.imag(); }
    static double real_from_rational(const Rational& r) { return to_double(r); }
};

using ComplexDouble = std::complex<double>;

}  // namespace semicluster
