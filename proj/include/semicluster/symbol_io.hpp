// symbol_io.hpp - structured text form of symbols.
//
// A symbol is a JSON array of records {"alpha": [a1, a2], "beta": [b1, b2], "re": .., "im": ..}.
// Exact coefficients are written as "num/den" strings, float coefficients as numbers.

#pragma once

#include "semicluster/symbol.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <string>

namespace semicluster {

template <class C>
nlohmann::json symbol_to_json(const PolySymbol<C>& s) {
    using T = CoeffTraits<C>;
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [k, c] : s.terms()) {
        nlohmann::json rec;
        rec["alpha"] = {k[0], k[1]};
        rec["beta"] = {k[2], k[3]};
        if constexpr (T::exact) {
            rec["re"] = format_rational(T::real(c));
            rec["im"] = format_rational(T::imag(c));
        } else {
            rec["re"] = T::real(c);
            rec["im"] = T::imag(c);
        }
        out.push_back(std::move(rec));
    }
    return out;
}

namespace detail {

inline Rational json_rational(const nlohmann::json& v) {
    if (v.is_string()) return parse_rational(v.get<std::string>());
    if (v.is_number_integer()) return Rational(v.get<long long>());
    if (v.is_number()) return rational_from_double(v.get<double>());
    throw std::invalid_argument("symbol_from_json: coefficient must be a string or number");
}

inline double json_double(const nlohmann::json& v) {
    if (v.is_string()) return to_double(parse_rational(v.get<std::string>()));
    return v.get<double>();
}

}  // namespace detail

/// Inverse of symbol_to_json. Repeated keys accumulate.
template <class C = ComplexRational>
PolySymbol<C> symbol_from_json(const nlohmann::json& j) {
    using T = CoeffTraits<C>;
    if (!j.is_array()) throw std::invalid_argument("symbol_from_json: expected an array of monomial records");
    PolySymbol<C> s;
    for (const auto& rec : j) {
        const auto& a = rec.at("alpha");
        const auto& b = rec.at("beta");
        const MonomialKey k{a.at(0).get<int>(), a.at(1).get<int>(), b.at(0).get<int>(), b.at(1).get<int>()};
        for (int e : k)
            if (e < 0) throw std::invalid_argument("symbol_from_json: negative exponent");
        const auto re = rec.value("re", nlohmann::json(0));
        const auto im = rec.value("im", nlohmann::json(0));
        if constexpr (T::exact) {
            s.add_term(k, T::make(detail::json_rational(re), detail::json_rational(im)));
        } else {
            s.add_term(k, T::make(detail::json_double(re), detail::json_double(im)));
        }
    }
    return s;
}

/// FNV-1a hash of the canonical serialized form, as 16 hex digits.
template <class C>
std::string symbol_hash(const PolySymbol<C>& s) {
    const std::string text = symbol_to_json(s).dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace semicluster
