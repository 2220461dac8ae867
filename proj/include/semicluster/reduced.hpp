// reduced.hpp - the flow average as a function on the space of closed orbits.
//
// For lambda = (1, 1) the closed orbits of p2 = E form a sphere of radius E in
// the Hopf coordinates
//
//     X + iY = zbar_1 z_2,   Z = rho_1 - rho_2,   rho_j = |z_j|^2 / 2,
//
// and every flow-invariant symbol is a polynomial in X, Y, Z and E through
// z1 zbar1 = E + Z, z2 zbar2 = E - Z, z1 zbar2 = X - iY. The chart
// (K, phi) = (rho_1, theta_1 - theta_2) has X + iY = 2 sqrt(K (E - K)) e^{i phi},
// Z = 2K - E, and carries the reduced symplectic form dK ^ dphi. In Cartesian
// form the reduced Hamiltonian vector field is dX/dt = 2 grad q x X.

#pragma once

#include "semicluster/errors.hpp"
#include "semicluster/magnetic.hpp"
#include "semicluster/symbol.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

namespace semicluster {

using Vec3 = Eigen::Vector3d;

class ReducedHamiltonian {
public:
    /// qavg must contain only monomials with |alpha| = |beta| (invariant under the 1:1 flow).
    template <class C>
    ReducedHamiltonian(const PolySymbol<C>& qavg, double E, std::optional<FieldCoefficients> field = std::nullopt)
        : E_(E), field_(std::move(field)) {
        if (!(E > 0.0)) throw std::invalid_argument("ReducedHamiltonian: E must be positive");
        using CP = RealPolynomial<ComplexDouble>;
        using T = CoeffTraits<C>;
        const CP X = CP::variable(0), Y = CP::variable(1), Z = CP::variable(2);
        const CP one = CP::monomial({0, 0, 0, 0}, 1.0);
        const ComplexDouble I(0.0, 1.0);
        const CP u = one * ComplexDouble(E) + Z;   // z1 zbar1
        const CP v = one * ComplexDouble(E) - Z;   // z2 zbar2
        const CP s = X - Y * I;                    // z1 zbar2
        const CP sb = X + Y * I;                   // zbar1 z2
        auto pw = [&](const CP& b, int e) {
            CP r = one;
            for (int i = 0; i < e; ++i) r = r * b;
            return r;
        };
        CP acc;
        for (const auto& [k, c] : qavg.terms()) {
            if (k[0] + k[1] != k[2] + k[3])
                throw ModelError("ReducedHamiltonian: symbol is not invariant under the 1:1 flow");
            CP m = pw(u, std::min(k[0], k[2])) * pw(v, std::min(k[1], k[3]));
            m = (k[0] >= k[2]) ? m * pw(s, k[0] - k[2]) : m * pw(sb, k[2] - k[0]);
            acc += m * T::to_complex(c);
        }
        double cmax = 0.0;
        for (const auto& [k, c] : acc.terms()) cmax = std::max(cmax, std::abs(c));
        for (const auto& [k, c] : acc.terms()) {
            if (std::abs(c.imag()) > 1e-10 * std::max(1.0, cmax))
                throw ModelError("ReducedHamiltonian: symbol is not real-valued");
            poly_.add_term(k, c.real());
        }
        for (int i = 0; i < 3; ++i) grad_[i] = poly_.derivative(i);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) hess_[i][j] = grad_[i].derivative(j);
    }

    double E() const { return E_; }
    const std::optional<FieldCoefficients>& field() const { return field_; }
    const RealPolynomial<double>& polynomial() const { return poly_; }
    bool is_zero() const { return poly_.is_zero(); }

    double value(const Vec3& X) const { return poly_.evaluate(X[0], X[1], X[2], 0.0); }

    Vec3 gradient(const Vec3& X) const {
        return {grad_[0].evaluate(X[0], X[1], X[2], 0.0), grad_[1].evaluate(X[0], X[1], X[2], 0.0),
                grad_[2].evaluate(X[0], X[1], X[2], 0.0)};
    }

    Eigen::Matrix3d hessian(const Vec3& X) const {
        Eigen::Matrix3d H;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) H(i, j) = hess_[i][j].evaluate(X[0], X[1], X[2], 0.0);
        return H;
    }

    /// Reduced Hamiltonian vector field; tangent to the sphere and to level sets of q.
    Vec3 flow(const Vec3& X) const { return 2.0 * gradient(X).cross(X); }

    Vec3 sphere_point(double K, double phi) const {
        const double r = 2.0 * std::sqrt(std::max(0.0, K * (E_ - K)));
        return {r * std::cos(phi), r * std::sin(phi), 2.0 * K - E_};
    }

    /// (K, phi) of a sphere point, phi in (-pi, pi].
    std::pair<double, double> chart(const Vec3& X) const { return {(X[2] + E_) / 2.0, std::atan2(X[1], X[0])}; }

    /// q_red(K, phi).
    double operator()(double K, double phi) const { return value(sphere_point(K, phi)); }

    /// Mean of q over the sphere with respect to dK dphi (uniform area measure).
    double liouville_mean() const {
        auto dfact = [](int n) {  // (n - 1)!! for even n, 1 for n = 0
            double r = 1.0;
            for (int i = n - 1; i > 1; i -= 2) r *= i;
            return r;
        };
        double sum = 0.0;
        for (const auto& [k, c] : poly_.terms()) {
            if (k[0] % 2 || k[1] % 2 || k[2] % 2) continue;
            const int d = k[0] + k[1] + k[2];
            sum += c * std::pow(E_, d) * dfact(k[0]) * dfact(k[1]) * dfact(k[2]) / dfact(d + 2);
        }
        return sum;
    }

private:
    double E_;
    std::optional<FieldCoefficients> field_;
    RealPolynomial<double> poly_;
    std::array<RealPolynomial<double>, 3> grad_;
    std::array<std::array<RealPolynomial<double>, 3>, 3> hess_;
};

template <class C>
ReducedHamiltonian reduced_hamiltonian(const PolySymbol<C>& qavg, double E,
                                       std::optional<FieldCoefficients> field = std::nullopt) {
    return ReducedHamiltonian(qavg, E, std::move(field));
}

/// Reduced flow average of a magnetic model at energy E.
inline ReducedHamiltonian reduced_hamiltonian(const MagneticModel& m, double E) {
    if (!m.lambda.is_one_one()) throw ModelError("reduced_hamiltonian: the sphere reduction needs lambda = (1, 1)");
    return ReducedHamiltonian(flow_average(magnetic_symbol(m).q, m.lambda), E, magnetic_field(m));
}

// ---------------------------------------------------------------------------
// Critical points on the sphere

enum class CriticalKind { Minimum, Maximum, Saddle, Degenerate };

struct CriticalPoint {
    Vec3 X;
    double value;
    CriticalKind kind;
};

/// Near-uniform points on the sphere of radius E.
inline std::vector<Vec3> fibonacci_sphere(int n, double E) {
    std::vector<Vec3> pts;
    pts.reserve(static_cast<std::size_t>(n));
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5) / n;
        const double r = std::sqrt(1.0 - z * z);
        pts.emplace_back(E * r * std::cos(golden * i), E * r * std::sin(golden * i), E * z);
    }
    return pts;
}

/// Orthonormal basis of the tangent plane at X.
inline std::pair<Vec3, Vec3> tangent_basis(const Vec3& X) {
    const Vec3 n = X.normalized();
    const Vec3 a = std::abs(n[0]) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 t1 = (a - a.dot(n) * n).normalized();
    return {t1, n.cross(t1)};
}

/// Scale of q on the sphere: max |q| over a seed grid.
inline double value_scale(const ReducedHamiltonian& red, int n = 400) {
    double s = 0.0;
    for (const auto& X : fibonacci_sphere(n, red.E())) s = std::max(s, std::abs(red.value(X)));
    return s;
}

/// Critical points of q on the sphere: Newton iteration on the Lagrange system
/// grad q = mu X, |X| = E from a Fibonacci seed grid, then deduplication.
inline std::vector<CriticalPoint> critical_points(const ReducedHamiltonian& red, int seeds = 300) {
    const double E = red.E();
    const double scale = value_scale(red);
    if (scale == 0.0) throw ModelError("critical_points: reduced Hamiltonian vanishes identically");
    const double gtol = 1e-12 * scale / E;

    auto residual = [&](const Vec3& X) {
        const Vec3 g = red.gradient(X);
        return (g - g.dot(X) / (E * E) * X).norm();
    };

    std::vector<CriticalPoint> out;
    for (Vec3 X : fibonacci_sphere(seeds, E)) {
        double res = residual(X);
        bool converged = res < gtol;
        for (int it = 0; it < 60 && !converged; ++it) {
            const Vec3 g = red.gradient(X);
            const double mu = g.dot(X) / (E * E);
            Eigen::Matrix4d J = Eigen::Matrix4d::Zero();
            J.topLeftCorner<3, 3>() = red.hessian(X) - mu * Eigen::Matrix3d::Identity();
            J.block<3, 1>(0, 3) = -X;
            J.block<1, 3>(3, 0) = X.transpose();
            Eigen::Vector4d F;
            F.head<3>() = g - mu * X;
            F[3] = 0.0;
            const Eigen::Vector4d d = J.fullPivLu().solve(-F);
            double step = 1.0;
            bool accepted = false;
            for (int ls = 0; ls < 30; ++ls, step *= 0.5) {
                Vec3 Xn = X + step * d.head<3>();
                Xn *= E / Xn.norm();
                const double rn = residual(Xn);
                if (rn < res || rn < gtol) {
                    X = Xn;
                    res = rn;
                    accepted = true;
                    break;
                }
            }
            if (!accepted) break;
            converged = res < gtol;
        }
        if (!converged) continue;
        bool dup = false;
        for (const auto& cp : out)
            if ((cp.X - X).norm() < 1e-6 * E) dup = true;
        if (dup) continue;

        const auto [t1, t2] = tangent_basis(X);
        const double mu = red.gradient(X).dot(X) / (E * E);
        const Eigen::Matrix3d H = red.hessian(X) - mu * Eigen::Matrix3d::Identity();
        Eigen::Matrix2d Ht;
        Ht << t1.dot(H * t1), t1.dot(H * t2), t2.dot(H * t1), t2.dot(H * t2);
        const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(Ht).eigenvalues();
        const double etol = 1e-8 * scale / (E * E);
        CriticalKind kind = CriticalKind::Degenerate;
        if (ev[0] > etol) kind = CriticalKind::Minimum;
        else if (ev[1] < -etol) kind = CriticalKind::Maximum;
        else if (ev[0] < -etol && ev[1] > etol) kind = CriticalKind::Saddle;
        out.push_back({X, red.value(X), kind});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.value < b.value; });
    return out;
}

/// Sorted critical values, merged within 1e-9 of the value scale.
inline std::vector<double> critical_values(const ReducedHamiltonian& red, int seeds = 300) {
    const auto pts = critical_points(red, seeds);
    const double tol = 1e-9 * value_scale(red);
    std::vector<double> vals;
    for (const auto& p : pts)
        if (vals.empty() || p.value - vals.back() > tol) vals.push_back(p.value);
    return vals;
}

}  // namespace semicluster
