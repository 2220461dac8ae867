#include "semicluster/birkhoff.hpp"
#include "semicluster/eigensolver.hpp"
#include "semicluster/fock.hpp"
#include "semicluster/magnetic.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <random>

using namespace semicluster;
using cd = std::complex<double>;

namespace {

ExactSymbol from_real(const RealPolynomial<Rational>& p) { return to_complex_basis(p); }

ExactSymbol x1_power(int n) { return from_real(RealPolynomial<Rational>::monomial({n, 0, 0, 0}, Rational(1))); }

MagneticModel default_model() { return model_from_field(1, 2, 1); }

Eigen::MatrixXd lowering(int size) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(size, size);
    for (int n = 1; n < size; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

// Average over all distinct orderings of p lowering and q raising operators.
Eigen::MatrixXd permutation_average(int p, int q, int size) {
    const Eigen::MatrixXd a = lowering(size), ad = a.transpose();
    std::vector<int> word(static_cast<std::size_t>(p), 0);
    word.insert(word.end(), static_cast<std::size_t>(q), 1);
    std::sort(word.begin(), word.end());
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(size, size);
    int count = 0;
    do {
        Eigen::MatrixXd m = Eigen::MatrixXd::Identity(size, size);
        for (int w : word) m = m * (w == 0 ? a : ad);
        sum += m;
        ++count;
    } while (std::next_permutation(word.begin(), word.end()));
    return sum / count;
}

Eigen::MatrixXcd random_hermitian(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> g;
    Eigen::MatrixXcd A(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) A(i, j) = cd(g(rng), g(rng));
    return (A + A.adjoint()) / 2.0;
}

double max_abs(const Eigen::MatrixXcd& A) { return A.cwiseAbs().maxCoeff(); }

// Restriction to clusters k <= kmax.
Eigen::MatrixXcd interior(const Eigen::MatrixXcd& A, int kmax) {
    const int m = FockBasis::cluster_offset(kmax + 1);
    return A.topLeftCorner(m, m);
}

}  // namespace

// ---------------------------------------------------------------------------
// Basis

TEST(FockBasis, DimensionAndIndexing) {
    for (int n = 0; n < 12; ++n) {
        FockBasis b(n, 0.1);
        EXPECT_EQ(b.dimension(), (n + 1) * (n + 2) / 2);
        for (int i = 0; i < b.dimension(); ++i) {
            const auto [n1, n2] = b.state(i);
            EXPECT_EQ(b.index(n1, n2), i);
            EXPECT_LE(n1 + n2, n);
        }
    }
}

TEST(FockBasis, Rejections) {
    EXPECT_THROW(FockBasis(-1, 0.1), TruncationError);
    EXPECT_THROW(FockBasis(4, 0.0), std::invalid_argument);
    FockBasis b(4, 0.1);
    EXPECT_THROW(b.index(3, 2), TruncationError);
    EXPECT_THROW(b.state(b.dimension()), TruncationError);
}

// ---------------------------------------------------------------------------
// Quantization

TEST(WeylQuantize, HarmonicIsDiagonal) {
    const double h = 0.07;
    FockBasis b(20, h);
    const auto op = weyl_quantize(harmonic_symbol<ComplexRational>({}), b);
    for (int j = 0; j < b.dimension(); ++j)
        for (int i = 0; i < b.dimension(); ++i) {
            const auto [n1, n2] = b.state(i);
            const cd expected = i == j ? cd(h * (n1 + n2 + 1)) : cd(0.0);
            EXPECT_NEAR(std::abs(op.matrix(i, j) - expected), 0.0, 1e-15);
        }
}

TEST(WeylQuantize, HarmonicNonUnitFrequencies) {
    const double h = 0.05;
    FockBasis b(15, h);
    const FrequencyVector lam(Rational(2), Rational(1));
    const auto op = harmonic_operator(b, lam);
    for (int i = 0; i < b.dimension(); ++i) {
        const auto [n1, n2] = b.state(i);
        EXPECT_NEAR(op.matrix(i, i).real(), h * (2 * n1 + n2 + 1.5), 1e-14);
    }
}

TEST(WeylQuantize, XSquaredMatchesPermutationAverage) {
    const double h = 0.3;
    const int n_max = 10, size = n_max + 3;
    FockBasis b(n_max, h);
    const auto op = weyl_quantize(x1_power(2), b);
    // x1^2 = (z1^2 + 2 z1 zbar1 + zbar1^2) / 4
    const Eigen::MatrixXd m1 =
        2 * h / 4 * (permutation_average(2, 0, size) + 2 * permutation_average(1, 1, size) + permutation_average(0, 2, size));
    for (int j = 0; j < b.dimension(); ++j)
        for (int i = 0; i < b.dimension(); ++i) {
            const auto [a1, a2] = b.state(i);
            const auto [c1, c2] = b.state(j);
            const double expected = a2 == c2 ? m1(a1, c1) : 0.0;
            EXPECT_NEAR(std::abs(op.matrix(i, j) - expected), 0.0, 1e-14);
        }
}

TEST(WeylQuantize, MonomialsMatchPermutationAverage) {
    const double h = 0.2;
    const int n_max = 9, size = n_max + 5;
    FockBasis b(n_max, h);
    for (int p1 = 0; p1 <= 4; ++p1)
        for (int p2 = 0; p1 + p2 <= 4; ++p2)
            for (int q1 = 0; p1 + p2 + q1 <= 4; ++q1)
                for (int q2 = 0; p1 + p2 + q1 + q2 <= 4; ++q2) {
                    const MonomialKey k{p1, p2, q1, q2};
                    ExactSymbol s;
                    s.add_term(k, Rational(1));
                    s.add_term(swap_conjugate(k), Rational(1));
                    const auto op = weyl_quantize(s, b);
                    const double scale = std::pow(2 * h, total_degree(k) / 2.0);
                    const Eigen::MatrixXd A1 = permutation_average(p1, q1, size), A2 = permutation_average(p2, q2, size);
                    const Eigen::MatrixXd B1 = permutation_average(q1, p1, size), B2 = permutation_average(q2, p2, size);
                    const double mult = k == swap_conjugate(k) ? 2.0 : 1.0;
                    for (int j = 0; j < b.dimension(); ++j)
                        for (int i = 0; i < b.dimension(); ++i) {
                            const auto [a1, a2] = b.state(i);
                            const auto [c1, c2] = b.state(j);
                            const double expected =
                                mult == 2.0 ? 2 * scale * A1(a1, c1) * A2(a2, c2)
                                            : scale * (A1(a1, c1) * A2(a2, c2) + B1(a1, c1) * B2(a2, c2));
                            ASSERT_NEAR(std::abs(op.matrix(i, j) - expected), 0.0, 1e-13 * (1 + std::abs(expected)))
                                << "key " << p1 << p2 << q1 << q2;
                        }
                }
}

TEST(WeylQuantize, XFourthIsPositionMatrixPower) {
    const double h = 0.15;
    const int n_max = 14;
    FockBasis b(n_max, h);
    const auto op = weyl_quantize(x1_power(4), b);
    const int size = n_max + 5;
    const Eigen::MatrixXd a = lowering(size);
    const Eigen::MatrixXd x = std::sqrt(h / 2) * (a + a.transpose());
    const Eigen::MatrixXd x4 = x * x * x * x;
    for (int j = 0; j < b.dimension(); ++j)
        for (int i = 0; i < b.dimension(); ++i) {
            const auto [a1, a2] = b.state(i);
            const auto [c1, c2] = b.state(j);
            const double expected = a2 == c2 ? x4(a1, c1) : 0.0;
            EXPECT_NEAR(std::abs(op.matrix(i, j) - expected), 0.0, 1e-13);
        }
}

TEST(WeylQuantize, LinearHermitianAndBanded) {
    std::mt19937_64 rng(11);
    FockBasis b(12, 0.1);
    for (int trial = 0; trial < 5; ++trial) {
        const ExactSymbol s = semicluster::testing::random_real_symbol(rng, 4) + semicluster::testing::random_real_symbol(rng, 2);
        const ExactSymbol t = semicluster::testing::random_real_symbol(rng, 3);
        const auto A = weyl_quantize(s, b), B = weyl_quantize(t, b);
        const auto C = weyl_quantize(s * ComplexRational(Rational(2)) + t, b);
        EXPECT_LE(max_abs(C.matrix - (2.0 * A.matrix + B.matrix)), 1e-13 * max_abs(C.matrix));
        EXPECT_LE(hermiticity_defect(A.matrix), 1e-14);
        for (int j = 0; j < b.dimension(); ++j)
            for (int i = 0; i < b.dimension(); ++i)
                if (std::abs(b.cluster_of(i) - b.cluster_of(j)) > A.symbol_degree) {
                    EXPECT_EQ(A.matrix(i, j), cd(0.0));
                }
    }
}

TEST(WeylQuantize, MagneticOperatorIsHermitianAndComplex) {
    const auto q = magnetic_symbol(default_model()).q;
    const auto op = weyl_quantize(q, FockBasis(16, 0.1));
    EXPECT_LE(hermiticity_defect(op.matrix), 1e-14);
    EXPECT_GT(op.matrix.imag().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(op.symbol_degree, 4);
    EXPECT_EQ(cluster_coupling_gcd(op), 2);
}

TEST(WeylQuantize, Rejections) {
    ExactSymbol nonreal;
    nonreal.add_term({1, 0, 0, 0}, Rational(1));
    EXPECT_THROW(weyl_quantize(nonreal, FockBasis(4, 0.1)), ModelError);
    EXPECT_THROW(weyl_quantize(x1_power(4), FockBasis(3, 0.1)), TruncationError);
}

// ---------------------------------------------------------------------------
// Projectors and the quantum time average

TEST(ClusterProjector, RankOrthogonalityCompleteness) {
    FockBasis b(8, 0.1);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(b.dimension(), b.dimension());
    for (int k = 0; k <= 8; ++k) {
        const auto P = cluster_projector(b, k);
        EXPECT_NEAR(P.trace(), k + 1, 0.0);
        EXPECT_LE((P * P - P).cwiseAbs().maxCoeff(), 0.0);
        for (int j = 0; j < k; ++j) EXPECT_EQ((P * cluster_projector(b, j)).cwiseAbs().maxCoeff(), 0.0);
        sum += P;
    }
    EXPECT_EQ((sum - Eigen::MatrixXd::Identity(b.dimension(), b.dimension())).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_THROW(cluster_projector(b, 9), TruncationError);
    EXPECT_THROW(cluster_projector(b, -1), TruncationError);
}

TEST(QuantumTimeAverage, InvariantOperatorUnchanged) {
    FockBasis b(10, 0.1);
    const auto m = default_model();
    const auto op = weyl_quantize(flow_average(magnetic_symbol(m).q, m.lambda), b);
    EXPECT_EQ(max_abs(quantum_time_average(op).matrix - op.matrix), 0.0);
}

TEST(QuantumTimeAverage, MatchesQuantizedClassicalAverage) {
    std::mt19937_64 rng(5);
    FockBasis b(24, 0.05);
    for (int trial = 0; trial < 6; ++trial) {
        const ExactSymbol q = trial == 0 ? magnetic_symbol(default_model()).q : semicluster::testing::random_real_symbol(rng, 4, 6);
        const auto Q = weyl_quantize(q, b);
        const auto avg = quantum_time_average(Q);
        const auto cls = weyl_quantize(flow_average(q, FrequencyVector{}), b);
        const int kmax = Q.interior_limit();
        EXPECT_LE(max_abs(interior(avg.matrix - cls.matrix, kmax)), 1e-10 * max_abs(Q.matrix));
        for (int j = 0; j < b.dimension(); ++j)
            for (int i = 0; i < b.dimension(); ++i)
                if (b.cluster_of(i) != b.cluster_of(j)) {
                    EXPECT_EQ(avg.matrix(i, j), cd(0.0));
                }
        const auto P2 = harmonic_operator(b);
        EXPECT_LE(max_abs(P2.matrix * avg.matrix - avg.matrix * P2.matrix), 1e-14 * max_abs(P2.matrix) * max_abs(avg.matrix));
    }
}

TEST(QuantumTimeAverage, ProjectionIdentity) {
    FockBasis b(12, 0.1);
    const auto Q = weyl_quantize(magnetic_symbol(default_model()).q, b);
    const auto avg = quantum_time_average(Q);
    for (int k = 0; k <= 12; ++k) {
        const Eigen::MatrixXcd P = cluster_projector(b, k).cast<cd>();
        EXPECT_EQ(max_abs(P * Q.matrix * P - P * avg.matrix * P), 0.0);
    }
}

TEST(QuantumTimeAverage, NonUnitFrequencies) {
    FockBasis b(10, 0.1);
    const FrequencyVector lam(Rational(2), Rational(1));
    std::mt19937_64 rng(3);
    const ExactSymbol q = semicluster::testing::random_real_symbol(rng, 4, 8);
    const auto avg = quantum_time_average(weyl_quantize(q, b), lam);
    const auto P2 = harmonic_operator(b, lam);
    EXPECT_LE(max_abs(P2.matrix * avg.matrix - avg.matrix * P2.matrix), 1e-14 * max_abs(P2.matrix) * max_abs(avg.matrix));
    const auto cls = weyl_quantize(flow_average(q, lam), b);
    EXPECT_LE(max_abs(interior(avg.matrix - cls.matrix, b.n_max() - 4)), 1e-12);
}

// Second-order degenerate perturbation theory on a cluster against the
// quantized order-2 normal form term; they differ by Moyal corrections of
// relative size O(1/k^2).
TEST(QuantumTimeAverage, SecondOrderNormalFormAtLargeCluster) {
    const auto m = default_model();
    const auto sym = magnetic_symbol(m);
    const auto nf = birkhoff_normal_form(sym.p2, sym.q, m.lambda, 2);
    const double h = 1.0;
    auto relative_error = [&](int k) {
        FockBasis b(k + 9, h);
        const auto Q = weyl_quantize(sym.q, b);
        const auto Q2 = weyl_quantize(nf.invariant_terms[1], b);
        Eigen::MatrixXcd eff = Eigen::MatrixXcd::Zero(k + 1, k + 1);
        for (int kp = k - 4; kp <= k + 4; ++kp) {
            if (kp == k || kp < 0) continue;
            eff += Q.block(k, kp) * Q.block(kp, k) / (h * (k - kp));
        }
        return (eff - Q2.block(k, k)).norm() / Q2.block(k, k).norm();
    };
    const double e10 = relative_error(10), e20 = relative_error(20);
    EXPECT_LT(e20, 0.05);
    EXPECT_GT(e10 / e20, 3.0);
    EXPECT_LT(e10 / e20, 5.0);
}

// ---------------------------------------------------------------------------
// Eigensolver

TEST(SymmetricEigen, DiagonalAndTwoByTwo) {
    Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(4, 4);
    D.diagonal() << 3.0, -1.0, 2.0, 0.5;
    const auto r = symmetric_eigen(D);
    EXPECT_EQ(std::vector<double>(r.values.data(), r.values.data() + 4), (std::vector<double>{-1.0, 0.5, 2.0, 3.0}));
    Eigen::MatrixXcd S(2, 2);
    S << 0.0, 1.0, 1.0, 0.0;
    const auto s = symmetric_eigen(S);
    EXPECT_NEAR(s.values[0], -1.0, 1e-15);
    EXPECT_NEAR(s.values[1], 1.0, 1e-15);
}

TEST(SymmetricEigen, TraceAndResiduals) {
    std::mt19937_64 rng(7);
    const Eigen::MatrixXcd A = random_hermitian(rng, 50);
    const auto r = symmetric_eigen(A, true);
    EXPECT_NEAR(r.values.sum(), A.trace().real(), 1e-10);
    for (int i = 1; i < 50; ++i) EXPECT_LE(r.values[i - 1], r.values[i]);
    const double norm = A.norm();
    for (int i = 0; i < 50; ++i)
        EXPECT_LE((A * r.vectors.col(i) - r.values[i] * r.vectors.col(i)).norm(), 1e-11 * norm);
}

TEST(SymmetricEigen, RejectsNonHermitian) {
    Eigen::MatrixXcd A(2, 2);
    A << 0.0, 1.0, 2.0, 0.0;
    EXPECT_THROW(symmetric_eigen(A), ModelError);
}

TEST(SymmetricEigen, JacobiCrossCheck) {
    std::mt19937_64 rng(9);
    const Eigen::MatrixXcd A = random_hermitian(rng, 120);
    const auto qr = symmetric_eigen(A).values;
    const auto jac = jacobi_eigenvalues(A);
    EXPECT_LE((qr - jac).cwiseAbs().maxCoeff(), 1e-11 * A.norm());

    const auto op = weyl_quantize(harmonic_symbol<ComplexRational>({}) + magnetic_symbol(default_model()).q, FockBasis(17, 0.1));
    ASSERT_LT(op.basis.dimension(), 200);
    const auto qr2 = symmetric_eigen(op.matrix).values;
    const auto jac2 = jacobi_eigenvalues(op.matrix);
    EXPECT_LE((qr2 - jac2).cwiseAbs().maxCoeff(), 1e-12 * op.matrix.norm());
}

TEST(SymmetricEigen, BlockSpectrumMatchesFull) {
    const auto sym = magnetic_symbol(default_model());
    const auto op = weyl_quantize(sym.p2 + sym.q * ComplexRational(Rational(1, 10)), FockBasis(20, 0.1));
    EXPECT_EQ(coupling_classes(op).size(), 2u);
    const auto blocks = operator_spectrum(op);
    const auto full = symmetric_eigen(op.matrix).values;
    EXPECT_LE((blocks - full).cwiseAbs().maxCoeff(), 1e-12);

    const auto inv = weyl_quantize(flow_average(sym.q, FrequencyVector{}), FockBasis(10, 0.1));
    EXPECT_EQ(coupling_classes(inv).size(), 11u);
    EXPECT_LE((operator_spectrum(inv) - symmetric_eigen(inv.matrix).values).cwiseAbs().maxCoeff(), 1e-14);
}

// ---------------------------------------------------------------------------
// Export

TEST(OperatorExport, RoundTrip) {
    const auto op = weyl_quantize(magnetic_symbol(default_model()).q, FockBasis(9, 0.125));
    const auto path = std::filesystem::temp_directory_path() / "semicluster_operator_roundtrip.txt";
    write_operator(path, op);
    const auto back = read_operator(path);
    std::filesystem::remove(path);
    EXPECT_EQ(back.basis, op.basis);
    EXPECT_EQ(back.symbol_hash, op.symbol_hash);
    EXPECT_EQ(back.symbol_degree, 4);
    EXPECT_EQ(max_abs(back.matrix - op.matrix), 0.0);
}
