// eigensolver.hpp - Hermitian eigenvalues of quantized operators.
//
// The production path is Householder tridiagonalization with implicit-shift QR
// (Eigen's SelfAdjointEigenSolver). The cyclic Jacobi solver below is an
// independent implementation used as its cross-check on small matrices.

#pragma once

#include "semicluster/errors.hpp"
#include "semicluster/fock.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <future>
#include <vector>

namespace semicluster {

struct EigenResult {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXcd vectors;  // columns, empty unless requested
};

inline double hermiticity_defect(const Eigen::MatrixXcd& A) {
    const double n = A.norm();
    return n == 0.0 ? 0.0 : (A - A.adjoint()).norm() / n;
}

inline EigenResult symmetric_eigen(const Eigen::MatrixXcd& A, bool vectors = false) {
    if (A.rows() != A.cols()) throw std::invalid_argument("symmetric_eigen: matrix is not square");
    if (hermiticity_defect(A) > 1e-12) throw ModelError("symmetric_eigen: matrix is not Hermitian");
    if (A.rows() == 0) return {};
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw ConvergenceError("symmetric_eigen: QR iteration did not converge");
    EigenResult r{es.eigenvalues(), {}};
    if (vectors) r.vectors = es.eigenvectors();
    return r;
}

/// Cyclic Jacobi: each pivot is made real by a diagonal phase, then annihilated
/// by a real plane rotation.
inline Eigen::VectorXd jacobi_eigenvalues(Eigen::MatrixXcd A, double tol = 1e-14, int max_sweeps = 100) {
    const int n = static_cast<int>(A.rows());
    if (A.cols() != n) throw std::invalid_argument("jacobi_eigenvalues: matrix is not square");
    const double scale = std::max(A.norm(), 1e-300);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int q = 0; q < n; ++q)
            for (int p = 0; p < q; ++p) off += std::norm(A(p, q));
        if (std::sqrt(2.0 * off) <= tol * scale) {
            Eigen::VectorXd ev = A.diagonal().real();
            std::sort(ev.data(), ev.data() + n);
            return ev;
        }
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double r = std::abs(A(p, q));
                if (r <= 1e-300) continue;
                const std::complex<double> ph = A(p, q) / r;  // A(p, q) = r ph
                A.row(q) *= ph;
                A.col(q) *= std::conj(ph);
                const double app = A(p, p).real(), aqq = A(q, q).real();
                const double theta = (aqq - app) / (2.0 * r);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                const Eigen::VectorXcd cp = A.col(p), cq = A.col(q);
                A.col(p) = c * cp - s * cq;
                A.col(q) = s * cp + c * cq;
                const Eigen::RowVectorXcd rp = A.row(p), rq = A.row(q);
                A.row(p) = c * rp - s * rq;
                A.row(q) = s * rp + c * rq;
                A(p, q) = A(q, p) = 0.0;
            }
        }
    }
    throw ConvergenceError("jacobi_eigenvalues: no convergence");
}

/// Indices of the states in each class of clusters the operator cannot mix.
inline std::vector<std::vector<int>> coupling_classes(const FockOperator& op) {
    const int g = cluster_coupling_gcd(op);
    const int N = op.basis.dimension();
    const int nclass = g == 0 ? op.basis.n_max() + 1 : g;
    std::vector<std::vector<int>> cls(static_cast<std::size_t>(nclass));
    for (int i = 0; i < N; ++i) {
        const int k = op.basis.cluster_of(i);
        cls[static_cast<std::size_t>(g == 0 ? k : k % g)].push_back(i);
    }
    return cls;
}

/// All eigenvalues of op, ascending; independent coupling classes are
/// diagonalized separately and concurrently.
inline Eigen::VectorXd operator_spectrum(const FockOperator& op) {
    const auto cls = coupling_classes(op);
    std::vector<std::future<Eigen::VectorXd>> jobs;
    for (const auto& idx : cls) {
        jobs.push_back(std::async(std::launch::async, [&op, &idx] {
            const int m = static_cast<int>(idx.size());
            Eigen::MatrixXcd B(m, m);
            for (int j = 0; j < m; ++j)
                for (int i = 0; i < m; ++i) B(i, j) = op.matrix(idx[i], idx[j]);
            return symmetric_eigen(B).values;
        }));
    }
    std::vector<double> all;
    for (auto& j : jobs) {
        const Eigen::VectorXd v = j.get();
        all.insert(all.end(), v.data(), v.data() + v.size());
    }
    std::sort(all.begin(), all.end());
    return Eigen::Map<Eigen::VectorXd>(all.data(), static_cast<Eigen::Index>(all.size()));
}

}  // namespace semicluster
