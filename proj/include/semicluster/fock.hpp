// fock.hpp - Weyl quantization of polynomial symbols in the truncated 2D Fock basis.
//
// Ladder convention: a_j = (x_j + i p_j) / sqrt(2h), [a_j, a_j^*] = 1, so the
// Weyl quantization of z_j = x_j + i xi_j is sqrt(2h) a_j and that of zbar_j is
// sqrt(2h) a_j^*. A monomial z^alpha zbar^beta quantizes to
// (2h)^{|alpha + beta| / 2} times the product over modes of the fully
// symmetrized words Sym(a^p a*^q), whose normal-ordered form is
//
//     Sym(a^p a*^q) = sum_j j! C(p, j) C(q, j) 2^{-j} a*^{q-j} a^{p-j}.
//
// Matrix elements are exact on the truncated space: no truncation error enters
// any entry, only the set of retained states.

#pragma once

#include "semicluster/errors.hpp"
#include "semicluster/poisson.hpp"
#include "semicluster/symbol.hpp"
#include "semicluster/symbol_io.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace semicluster {

/// States |n1, n2> with n1 + n2 <= n_max, ordered by cluster k = n1 + n2, then n1.
class FockBasis {
public:
    FockBasis(int n_max, double h) : n_max_(n_max), h_(h) {
        if (n_max < 0) throw TruncationError("FockBasis: n_max must be non-negative");
        if (!(h > 0.0)) throw std::invalid_argument("FockBasis: h must be positive");
    }

    int n_max() const { return n_max_; }
    double h() const { return h_; }
    int dimension() const { return (n_max_ + 1) * (n_max_ + 2) / 2; }

    /// First flat index of cluster k.
    static int cluster_offset(int k) { return k * (k + 1) / 2; }

    int index(int n1, int n2) const {
        if (n1 < 0 || n2 < 0 || n1 + n2 > n_max_) throw TruncationError("FockBasis: state outside the truncation");
        return cluster_offset(n1 + n2) + n1;
    }

    std::pair<int, int> state(int i) const {
        if (i < 0 || i >= dimension()) throw TruncationError("FockBasis: index out of range");
        int k = static_cast<int>((std::sqrt(8.0 * i + 1.0) - 1.0) / 2.0);
        while (cluster_offset(k + 1) <= i) ++k;
        while (cluster_offset(k) > i) --k;
        const int n1 = i - cluster_offset(k);
        return {n1, k - n1};
    }

    int cluster_of(int i) const {
        const auto [n1, n2] = state(i);
        return n1 + n2;
    }

    friend bool operator==(const FockBasis& a, const FockBasis& b) { return a.n_max_ == b.n_max_ && a.h_ == b.h_; }

private:
    int n_max_;
    double h_;
};

/// Hermitian matrix of a quantized real symbol. Entries are complex in general:
/// symbols odd in xi (magnetic terms) give imaginary matrix elements.
struct FockOperator {
    FockBasis basis;
    Eigen::MatrixXcd matrix;
    int symbol_degree = 0;
    std::string symbol_hash;

    /// Block between clusters k and k2.
    Eigen::MatrixXcd block(int k, int k2) const {
        return matrix.block(FockBasis::cluster_offset(k), FockBasis::cluster_offset(k2), k + 1, k2 + 1);
    }

    /// Clusters k <= n_max - degree, whose matrix rows are unaffected by truncation.
    int interior_limit() const { return basis.n_max() - symbol_degree; }
};

namespace detail {

inline double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

/// Normal-ordered coefficients of Sym(a^p a*^q): c_j for a*^{q-j} a^{p-j}.
inline std::vector<double> symmetrized_coefficients(int p, int q) {
    std::vector<double> c;
    double fact = 1.0;
    for (int j = 0; j <= std::min(p, q); ++j) {
        if (j > 0) fact *= j;
        c.push_back(fact * binom(p, j) * binom(q, j) / std::ldexp(1.0, j));
    }
    return c;
}

/// <m| Sym(a^p a*^q) |n> for one mode; nonzero only when m = n + q - p.
inline double symmetrized_element(int p, int q, int n) {
    const int m = n + q - p;
    if (m < 0) return 0.0;
    const auto c = symmetrized_coefficients(p, q);
    double sum = 0.0;
    for (int j = 0; j < static_cast<int>(c.size()); ++j) {
        const int s = p - j;  // lowering count
        if (n < s) continue;
        // <m| a*^{q-j} a^{s} |n> = sqrt(n! / (n-s)!) sqrt(m! / (n-s)!)
        double v = 1.0;
        for (int i = n - s + 1; i <= n; ++i) v *= std::sqrt(static_cast<double>(i));
        for (int i = n - s + 1; i <= m; ++i) v *= std::sqrt(static_cast<double>(i));
        sum += c[j] * v;
    }
    return sum;
}

}  // namespace detail

/// Weyl quantization of a real polynomial symbol on the truncated basis.
template <class C>
FockOperator weyl_quantize(const PolySymbol<C>& symbol, const FockBasis& basis) {
    using T = CoeffTraits<C>;
    if (!symbol.is_real()) throw ModelError("weyl_quantize: symbol is not real-valued");
    const int deg = symbol.degree();
    if (basis.n_max() < deg) throw TruncationError("weyl_quantize: n_max is smaller than the symbol degree");
    const int N = basis.dimension();
    FockOperator op{basis, Eigen::MatrixXcd::Zero(N, N), deg, symbol_hash(symbol)};
    const double h = basis.h();
    for (const auto& [key, coeff] : symbol.terms()) {
        const std::complex<double> c = T::to_complex(coeff) * std::pow(2.0 * h, total_degree(key) / 2.0);
        const int p1 = key[0], p2 = key[1], q1 = key[2], q2 = key[3];
        for (int col = 0; col < N; ++col) {
            const auto [n1, n2] = basis.state(col);
            const int m1 = n1 + q1 - p1, m2 = n2 + q2 - p2;
            if (m1 < 0 || m2 < 0 || m1 + m2 > basis.n_max()) continue;
            const double e = detail::symmetrized_element(p1, q1, n1) * detail::symmetrized_element(p2, q2, n2);
            if (e != 0.0) op.matrix(basis.index(m1, m2), col) += c * e;
        }
    }
    return op;
}

/// Rank k+1 orthogonal projector onto span{|n1, n2> : n1 + n2 = k}.
inline Eigen::MatrixXd cluster_projector(const FockBasis& basis, int k) {
    if (k < 0 || k > basis.n_max()) throw TruncationError("cluster_projector: k out of range");
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(basis.dimension(), basis.dimension());
    for (int i = 0; i <= k; ++i) P(FockBasis::cluster_offset(k) + i, FockBasis::cluster_offset(k) + i) = 1.0;
    return P;
}

/// Keeps the entries between states of equal lambda . n, i.e. the average of
/// Q under conjugation by the quantized harmonic flow.
inline FockOperator quantum_time_average(const FockOperator& Q, const FrequencyVector& lam = {}) {
    FockOperator out = Q;
    const int N = Q.basis.dimension();
    std::vector<double> level(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
        const auto [n1, n2] = Q.basis.state(i);
        level[i] = lam.value(0) * n1 + lam.value(1) * n2;
    }
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i)
            if (std::abs(level[i] - level[j]) > 1e-9) out.matrix(i, j) = 0.0;
    return out;
}

/// Quantized harmonic part: diagonal h (lambda . n + (lambda_1 + lambda_2) / 2).
inline FockOperator harmonic_operator(const FockBasis& basis, const FrequencyVector& lam = {}) {
    return weyl_quantize(harmonic_symbol<ComplexRational>(lam), basis);
}

/// Residue classes of k that the operator never mixes: k mod g, with g the gcd
/// of all cluster jumps present (g = 0 means every cluster decouples).
inline int cluster_coupling_gcd(const FockOperator& op, double tol = 0.0) {
    int g = 0;
    const int N = op.basis.dimension();
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i)
            if (std::abs(op.matrix(i, j)) > tol) g = std::gcd(g, std::abs(op.basis.cluster_of(i) - op.basis.cluster_of(j)));
    return g;
}

// ---------------------------------------------------------------------------
// Export

/// Text format: a JSON header line {n_max, h, symbol_hash, dimension, symbol_degree},
/// then one "i j re im" line per nonzero entry.
inline void write_operator(const std::filesystem::path& path, const FockOperator& op) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_operator: cannot write " + path.string());
    nlohmann::json header{{"n_max", op.basis.n_max()},
                          {"h", op.basis.h()},
                          {"symbol_hash", op.symbol_hash},
                          {"dimension", op.basis.dimension()},
                          {"symbol_degree", op.symbol_degree}};
    f << header.dump() << '\n';
    f.precision(17);
    for (int j = 0; j < op.matrix.cols(); ++j)
        for (int i = 0; i < op.matrix.rows(); ++i)
            if (op.matrix(i, j) != std::complex<double>(0.0))
                f << i << ' ' << j << ' ' << op.matrix(i, j).real() << ' ' << op.matrix(i, j).imag() << '\n';
}

inline FockOperator read_operator(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_operator: cannot read " + path.string());
    std::string line;
    std::getline(f, line);
    const auto header = nlohmann::json::parse(line);
    FockBasis basis(header.at("n_max").get<int>(), header.at("h").get<double>());
    const int N = basis.dimension();
    FockOperator op{basis, Eigen::MatrixXcd::Zero(N, N), header.at("symbol_degree").get<int>(),
                    header.at("symbol_hash").get<std::string>()};
    int i = 0, j = 0;
    double re = 0.0, im = 0.0;
    while (f >> i >> j >> re >> im) {
        if (i < 0 || j < 0 || i >= N || j >= N) throw TruncationError("read_operator: entry outside the basis");
        op.matrix(i, j) = {re, im};
    }
    return op;
}

}  // namespace semicluster
