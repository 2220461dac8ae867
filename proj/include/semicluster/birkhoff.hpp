// birkhoff.hpp - classical averaging (Birkhoff normal form) of p2 + eps q.
//
// Finds G = G_0 + eps G_1 + ... so that
//
//     (p2 + eps q) o exp(eps H_G) = p2 + eps qbar_1 + eps^2 qbar_2 + ... + eps^N qbar_N + O(eps^{N+1}),
//
// with every qbar_j Poisson-commuting with p2. The composition is expanded as
// the Lie series sum_n (1/n!) ad_{eps G}^n, ad_G f = {G, f}, truncated in eps.

#pragma once

#include "semicluster/poisson.hpp"

#include <vector>

namespace semicluster {

/// Polynomial in eps with symbol coefficients; index = power of eps.
template <class C>
using EpsSeries = std::vector<PolySymbol<C>>;

template <class C>
struct NormalForm {
    std::vector<PolySymbol<C>> invariant_terms;  ///< qbar_1 .. qbar_N
    std::vector<PolySymbol<C>> generators;       ///< G_0 .. G_{N-1}
    PolySymbol<C> remainder;                     ///< eps^{N+1} coefficient of the transformed symbol
    EpsSeries<C> transformed;                    ///< transformed symbol through eps^{N+1}
};

namespace detail {

// (eps G) acting on a series: result_m = sum_i {G_i, s_{m-1-i}}, truncated at order `top`.
template <class C>
EpsSeries<C> apply_generator(const EpsSeries<C>& gens, const EpsSeries<C>& s, std::size_t top, int max_degree) {
    EpsSeries<C> out(top + 1);
    for (std::size_t i = 0; i < gens.size(); ++i) {
        for (std::size_t m = 0; m < s.size(); ++m) {
            const std::size_t order = m + i + 1;
            if (order > top || gens[i].is_zero() || s[m].is_zero()) continue;
            out[order] += poisson_bracket(gens[i], s[m], max_degree);
        }
    }
    return out;
}

}  // namespace detail

/// p o exp(eps H_G) through eps^top via the truncated Lie series.
template <class C>
EpsSeries<C> lie_transform(const EpsSeries<C>& p, const EpsSeries<C>& gens, std::size_t top,
                           int max_degree = kDefaultMaxDegree) {
    using T = CoeffTraits<C>;
    EpsSeries<C> result(top + 1);
    for (std::size_t m = 0; m < p.size() && m <= top; ++m) result[m] = p[m];
    EpsSeries<C> term = result;
    for (std::size_t n = 1; n <= top; ++n) {
        term = detail::apply_generator(gens, term, top, max_degree);
        const C inv_n = T::from_real(T::real_from_rational(Rational(1, static_cast<long>(n))));
        for (auto& t : term) t = t * inv_n;
        for (std::size_t m = 0; m <= top; ++m) result[m] += term[m];
    }
    return result;
}

/// Normal form of p2 + eps q through order N >= 1. Throws DegreeOverflow if an
/// intermediate symbol exceeds max_degree.
template <class C>
NormalForm<C> birkhoff_normal_form(const PolySymbol<C>& p2, const PolySymbol<C>& q, const FrequencyVector& lam,
                                   int order, int max_degree = kDefaultMaxDegree) {
    if (order < 1) throw std::invalid_argument("birkhoff_normal_form: order must be >= 1");
    if (!is_flow_invariant(p2, lam) || p2 != harmonic_symbol<C>(lam))
        throw ModelError("birkhoff_normal_form: p2 must be the harmonic symbol of the frequency vector");
    const auto top = static_cast<std::size_t>(order) + 1;
    EpsSeries<C> p{p2, q};
    NormalForm<C> nf;
    EpsSeries<C> gens;
    for (int j = 0; j < order; ++j) {
        gens.push_back(PolySymbol<C>{});
        const auto coeff_order = static_cast<std::size_t>(j) + 1;
        const EpsSeries<C> current = lie_transform(p, gens, coeff_order, max_degree);
        const PolySymbol<C>& r = current[coeff_order];
        const PolySymbol<C> avg = flow_average(r, lam);
        gens.back() = solve_homological(r - avg, lam, /*assume_averaged=*/true);
        nf.invariant_terms.push_back(avg);
    }
    nf.generators = gens;
    nf.transformed = lie_transform(p, gens, top, max_degree);
    nf.remainder = nf.transformed[top];
    return nf;
}

}  // namespace semicluster
