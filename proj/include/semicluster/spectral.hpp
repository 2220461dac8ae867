// spectral.hpp - clusters, subcluster windows, and Bohr-Sommerfeld predictions.
//
// Clusters of the perturbed 1:1 oscillator sit near h(k + 1) with width O(eps).
// Inside cluster k the eigenvalues near h(k + 1) + eps F0 follow the grid
//
//     z(k, l) = f(xi1(k)) + eps F(xi1(k), xi2(l)),
//     xi1(k) = h(k - mu1) - sigma1,   xi2(l) = h(l - mu2) - sigma2,
//
// with F read off an action chart. sigma_j = S_j / 2pi come from the chart; the
// fractional offsets mu_j are fitted.

#pragma once

#include "semicluster/eigensolver.hpp"
#include "semicluster/errors.hpp"
#include "semicluster/fock.hpp"
#include "semicluster/torus.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace semicluster {

// ---------------------------------------------------------------------------
// Clusters

struct Cluster {
    int k = 0;
    double center = 0.0;  // mean eigenvalue
    double width = 0.0;   // max - min
    std::vector<double> eigenvalues;
};

struct ClusterReport {
    std::vector<Cluster> clusters;
    double h = 0.0;
    double eps = 0.0;
    double gap_threshold = 0.0;

    const Cluster* find(int k) const {
        for (const auto& c : clusters)
            if (c.k == k) return &c;
        return nullptr;
    }
};

struct ClusterOptions {
    std::optional<double> gap_threshold;  // default h / 2
    double shift = 1.0;                   // centers near h(k + shift)
    std::optional<int> max_k;             // eigenvalues above cluster max_k are ignored
};

/// Splits sorted eigenvalues at gaps larger than the threshold and labels
/// cluster centers by the progression h(k + shift).
inline ClusterReport detect_clusters(const std::vector<double>& all, double h, double eps = 0.0,
                                     const ClusterOptions& opt = {}) {
    if (!(h > 0.0)) throw std::invalid_argument("detect_clusters: h must be positive");
    if (!std::is_sorted(all.begin(), all.end())) throw std::invalid_argument("detect_clusters: eigenvalues not sorted");
    std::vector<double> eigs = all;
    if (opt.max_k) {
        const double cut = h * (*opt.max_k + opt.shift + 0.5);
        eigs.erase(std::upper_bound(eigs.begin(), eigs.end(), cut), eigs.end());
    }
    ClusterReport rep;
    rep.h = h;
    rep.eps = eps;
    rep.gap_threshold = opt.gap_threshold.value_or(h / 2.0);
    std::size_t i = 0;
    while (i < eigs.size()) {
        std::size_t j = i + 1;
        while (j < eigs.size() && eigs[j] - eigs[j - 1] <= rep.gap_threshold) ++j;
        Cluster c;
        c.eigenvalues.assign(eigs.begin() + static_cast<std::ptrdiff_t>(i), eigs.begin() + static_cast<std::ptrdiff_t>(j));
        c.center = std::accumulate(c.eigenvalues.begin(), c.eigenvalues.end(), 0.0) / static_cast<double>(c.eigenvalues.size());
        c.width = c.eigenvalues.back() - c.eigenvalues.front();
        c.k = static_cast<int>(std::lround(c.center / h - opt.shift));
        if (c.width >= rep.gap_threshold)
            throw RegimeError("detect_clusters: cluster width reaches the gap threshold (eps too large for h)");
        if (!rep.clusters.empty() && c.k <= rep.clusters.back().k)
            throw RegimeError("detect_clusters: cluster centers do not follow the h progression");
        rep.clusters.push_back(std::move(c));
        i = j;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Subcluster windows

struct SubclusterWindow {
    int k = 0;
    double F0 = 0.0, eps = 0.0, C = 0.0;
    double center = 0.0;     // base energy of cluster k plus eps F0
    double half_width = 0.0; // eps / C
    std::vector<double> eigenvalues;
};

/// Eigenvalues of cluster k with |z - base_energy - eps F0| < eps / C.
inline SubclusterWindow extract_subcluster(const ClusterReport& rep, int k, double base_energy, double F0, double eps,
                                           double C, int interior_limit) {
    if (!(C > 1.0)) throw std::invalid_argument("extract_subcluster: C must exceed 1");
    if (!(eps > 0.0)) throw std::invalid_argument("extract_subcluster: eps must be positive");
    if (k > interior_limit) throw RegimeError("extract_subcluster: cluster is not interior to the truncation");
    const Cluster* c = rep.find(k);
    if (!c) throw RegimeError("extract_subcluster: cluster not present in the report");
    SubclusterWindow w{k, F0, eps, C, base_energy + eps * F0, eps / C, {}};
    for (double z : c->eigenvalues)
        if (std::abs(z - w.center) < w.half_width) w.eigenvalues.push_back(z);
    return w;
}

// ---------------------------------------------------------------------------
// Degenerate perturbation oracle

/// h(k + 1) + eps * eig(Pi_k Q Pi_k).
inline std::vector<double> perturbation_oracle(int k, const FockOperator& Q, double eps, double h) {
    if (k < 0 || k > Q.interior_limit()) throw RegimeError("perturbation_oracle: cluster is not interior");
    const Eigen::VectorXd ev = symmetric_eigen(Q.block(k, k)).values;
    std::vector<double> out;
    for (Eigen::Index i = 0; i < ev.size(); ++i) out.push_back(h * (k + 1) + eps * ev[i]);
    return out;
}

/// Leading-order coupling constant C2 = max_k ||(1 - Pi_k) Q Pi_k||^2 over
/// interior clusters, so that |full - oracle| <= eps^2 C2 / h to second order.
inline double second_order_constant(const FockOperator& Q) {
    double c = 0.0;
    for (int k = 0; k <= Q.interior_limit(); ++k) {
        const int lo = std::max(0, k - Q.symbol_degree), hi = k + Q.symbol_degree;
        Eigen::MatrixXcd col = Q.matrix.block(FockBasis::cluster_offset(lo), FockBasis::cluster_offset(k),
                                              FockBasis::cluster_offset(hi + 1) - FockBasis::cluster_offset(lo), k + 1);
        col.block(FockBasis::cluster_offset(k) - FockBasis::cluster_offset(lo), 0, k + 1, k + 1).setZero();
        const double s = Eigen::JacobiSVD<Eigen::MatrixXcd>(col).singularValues()(0);
        c = std::max(c, s * s);
    }
    return c;
}

// ---------------------------------------------------------------------------
// Shift bounds

struct ShiftBoundsReport {
    bool ok = true;
    double worst_margin = 0.0;  // min over clusters of the distance inside the bounds (negative = violation)
    int worst_k = -1;
};

/// Every eigenvalue z of an interior cluster satisfies
/// eps min q_E - slack <= z - h(k+1) <= eps max q_E + slack, slack = slack_factor (eps^2 + h^2),
/// with min/max of the flow average on the reduced sphere at E = h(k + 1).
template <class C>
ShiftBoundsReport check_shift_bounds(const ClusterReport& rep, const PolySymbol<C>& qavg, int interior_limit,
                                     double slack_factor = 5.0) {
    ShiftBoundsReport out;
    out.worst_margin = std::numeric_limits<double>::infinity();
    const double slack = slack_factor * (rep.eps * rep.eps + rep.h * rep.h);
    for (const auto& c : rep.clusters) {
        if (c.k > interior_limit || c.k < 0) continue;
        const double E = rep.h * (c.k + 1);
        double qmin = 0.0, qmax = 0.0;
        const ReducedHamiltonian red(qavg, E);
        if (!red.is_zero()) {
            const auto cv = critical_values(red);
            qmin = cv.front();
            qmax = cv.back();
        }
        for (double z : c.eigenvalues) {
            const double s = z - E;
            const double margin = std::min(s - (rep.eps * qmin - slack), (rep.eps * qmax + slack) - s);
            if (margin < out.worst_margin) {
                out.worst_margin = margin;
                out.worst_k = c.k;
            }
        }
    }
    out.ok = out.worst_margin >= 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Bohr-Sommerfeld prediction

struct Offsets {
    double mu1 = 0.0, sigma1 = 0.0, mu2 = 0.0, sigma2 = 0.0;
};

/// Chart offsets sigma_j = S_j / 2pi and mu_j = alpha_j / 4 from configured Maslov integers.
inline Offsets chart_offsets(const ChartFamily& fam) {
    return {fam.maslov()[0] / 4.0, fam.S1() / (2.0 * M_PI), fam.maslov()[1] / 4.0, fam.S2() / (2.0 * M_PI)};
}

struct PredictedLevel {
    int k = 0, ell = 0, component = 0;
    double xi1 = 0.0, xi2 = 0.0;
    double E = 0.0, F = 0.0;
    double z = 0.0;
    double T_red = 0.0;
    double local_spacing = 0.0;  // eps h 2pi / T_red
};

struct SkippedIndex {
    int k = 0, ell = 0, component = 0;
    std::string reason;
};

struct PredictionGrid {
    std::vector<PredictedLevel> levels;  // sorted by z
    std::vector<SkippedIndex> skipped;
};

/// z(k, l) = f(xi1(k)) + eps F(xi1(k), xi2(l)) for each charted component.
inline PredictionGrid bs_predict(const std::vector<const ChartFamily*>& families, const std::vector<int>& ks,
                                 const std::vector<int>& ells, const Offsets& off, double eps, double h) {
    PredictionGrid grid;
    for (std::size_t c = 0; c < families.size(); ++c) {
        const ChartFamily& fam = *families[c];
        for (int k : ks) {
            for (int ell : ells) {
                const double xi1 = h * (k - off.mu1) - off.sigma1;
                const double xi2 = h * (ell - off.mu2) - off.sigma2;
                try {
                    const auto [E, F] = fam.invert(xi1, xi2);
                    const double T = fam.contour(E, F).period;
                    grid.levels.push_back({k, ell, static_cast<int>(c), xi1, xi2, E, F, E + eps * F, T,
                                           eps * h * 2.0 * M_PI / T});
                } catch (const ChartError& e) {
                    grid.skipped.push_back({k, ell, static_cast<int>(c), e.what()});
                }
            }
        }
    }
    std::sort(grid.levels.begin(), grid.levels.end(), [](const auto& a, const auto& b) { return a.z < b.z; });
    return grid;
}

/// Quantum numbers l whose predicted F lies in [F_lo, F_hi] at cluster k,
/// padded by `pad` on each side.
inline std::vector<int> ell_range(const ChartFamily& fam, int k, const Offsets& off, double h, double F_lo, double F_hi,
                                  int pad = 1) {
    const double xi1 = h * (k - off.mu1) - off.sigma1;
    const double E = fam.profile().f(xi1 + fam.profile().g(fam.E0()));
    const auto [lo, hi] = fam.regular_range(E);
    const double a = std::max(F_lo, lo + 1e-9 * (hi - lo)), b = std::min(F_hi, hi - 1e-9 * (hi - lo));
    std::vector<int> out;
    if (!(a < b)) return out;
    const double A0 = fam.S2();
    const double l_lo = (fam.area(E, a) - A0) / (2.0 * M_PI * h) + off.sigma2 / h + off.mu2;
    const double l_hi = (fam.area(E, b) - A0) / (2.0 * M_PI * h) + off.sigma2 / h + off.mu2;
    for (int l = static_cast<int>(std::ceil(l_lo)) - pad; l <= static_cast<int>(std::floor(l_hi)) + pad; ++l)
        out.push_back(l);
    return out;
}

// ---------------------------------------------------------------------------
// Offset fitting

struct OffsetFit {
    Offsets offsets;          // full real mu_j consistent with the labels used
    double mu1_canonical = 0.0, mu2_canonical = 0.0;  // representatives in [0, 1)
    double residual1 = 0.0;   // rms of k - nu1 - mu1 over clusters
    double residual2 = 0.0;   // rms circular deviation of the phases nu2 from -mu2
    int measurements = 0;
    int clusters = 0;
};

namespace detail {

inline double frac(double x) { return x - std::floor(x); }

/// Circular location on R/Z maximizing sum exp(kappa (cos 2pi(theta - mu) - 1)):
/// a mean that ignores outlying phases.
inline double robust_circular_mean(const std::vector<double>& theta, double kappa = 8.0) {
    auto score = [&](double mu) {
        double s = 0.0;
        for (double t : theta) s += std::exp(kappa * (std::cos(2.0 * M_PI * (t - mu)) - 1.0));
        return s;
    };
    double best = 0.0, best_s = -1.0;
    for (int i = 0; i < 1000; ++i) {
        const double mu = i / 1000.0;
        const double s = score(mu);
        if (s > best_s) {
            best_s = s;
            best = mu;
        }
    }
    double a = best - 1e-3, b = best + 1e-3;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 60; ++it) {
        const double c = b - g * (b - a), d = a + g * (b - a);
        if (score(c) > score(d)) b = d;
        else a = c;
    }
    return frac(0.5 * (a + b));
}

}  // namespace detail

/// Fits mu1 from cluster centers (corrected by eps times the Liouville mean of
/// the flow average) and mu2 from the phases of the measured subcluster values
/// on the chart of component 0. sigma_j are taken from that chart.
inline OffsetFit fit_offsets(const std::vector<const ChartFamily*>& families, const ClusterReport& rep,
                             const std::vector<SubclusterWindow>& windows, double eps, double h) {
    if (families.empty()) throw std::invalid_argument("fit_offsets: no chart");
    const ChartFamily& fam = *families.front();
    int count = 0, nclusters = 0;
    for (const auto& w : windows) {
        count += static_cast<int>(w.eigenvalues.size());
        if (!w.eigenvalues.empty()) ++nclusters;
    }
    if (count < 8 || nclusters < 2)
        throw std::invalid_argument("fit_offsets: degenerate fit (need >= 8 values across >= 2 clusters)");

    OffsetFit fit;
    fit.offsets.sigma1 = fam.S1() / (2.0 * M_PI);
    fit.offsets.sigma2 = fam.S2() / (2.0 * M_PI);
    fit.measurements = count;
    fit.clusters = nclusters;
    const double g0 = fam.profile().g(fam.E0());

    // mu1: k - mu1 = (g(E_k) - g(E0) + sigma1) / h at the unperturbed level E_k.
    std::map<int, double> level;
    std::vector<double> d1;
    for (const auto& w : windows) {
        const Cluster* c = rep.find(w.k);
        if (!c) throw RegimeError("fit_offsets: window cluster missing from the report");
        double E = c->center;
        for (int it = 0; it < 8; ++it) E = c->center - eps * ReducedHamiltonian(fam.average(), E).liouville_mean();
        level[w.k] = E;
        d1.push_back(w.k - (fam.profile().g(E) - g0 + fit.offsets.sigma1) / h);
    }
    fit.offsets.mu1 = std::accumulate(d1.begin(), d1.end(), 0.0) / static_cast<double>(d1.size());
    double r1 = 0.0;
    for (double d : d1) r1 += (d - fit.offsets.mu1) * (d - fit.offsets.mu1);
    fit.residual1 = std::sqrt(r1 / static_cast<double>(d1.size()));

    // mu2: A_sub(E_k, F) / (2pi h) = l - mu2 for each measured z = E_k + eps F.
    std::vector<double> phases;
    for (const auto& w : windows) {
        const double E = level[w.k];
        for (double z : w.eigenvalues) {
            try {
                const double A = fam.area(E, (z - E) / eps);
                phases.push_back(detail::frac(A / (2.0 * M_PI * h)));
            } catch (const ChartError&) {
            }
        }
    }
    if (phases.size() < 8) throw std::invalid_argument("fit_offsets: too few charted measurements");
    const double nu = detail::robust_circular_mean(phases);
    fit.mu2_canonical = detail::frac(-nu);
    fit.mu1_canonical = detail::frac(fit.offsets.mu1);
    fit.offsets.mu2 = fit.mu2_canonical;
    double r2 = 0.0;
    for (double p : phases) {
        const double d = std::remainder(p - nu, 1.0);
        r2 += d * d;
    }
    fit.residual2 = std::sqrt(r2 / static_cast<double>(phases.size()));
    return fit;
}

// ---------------------------------------------------------------------------
// Comparison

struct ComparisonRow {
    int k = 0, ell = 0, component = 0;
    double predicted = 0.0, measured = 0.0, error = 0.0;
    double spacing_measured = std::nan(""), spacing_predicted = std::nan("");
    double local_spacing = 0.0;
};

struct PredictionReport {
    Offsets offsets;
    std::vector<ComparisonRow> rows;       // matched pairs, sorted by (component, k, ell)
    std::vector<double> unmatched_measured;
    std::vector<PredictedLevel> unmatched_predicted;
    double max_error = 0.0;                // over matched pairs
    double max_relative_error = 0.0;       // error / local spacing
    double max_spacing_deviation = 0.0;    // |s_meas - s_pred| / s_pred over adjacent matched pairs
    double mean_second_difference = 0.0;   // mean |second difference| of measured values relative to local spacing
    int spacing_pairs = 0;
};

/// Greedy injective nearest matching; a pair is admissible only within half the
/// local predicted spacing of the predicted level.
inline PredictionReport compare(const PredictionGrid& predicted, const std::vector<double>& measured,
                                const Offsets& offsets = {}) {
    struct Cand {
        double d;
        std::size_t i, j;
    };
    std::vector<Cand> cands;
    for (std::size_t i = 0; i < predicted.levels.size(); ++i) {
        const auto& p = predicted.levels[i];
        const double cap = 0.5 * p.local_spacing;
        const auto lo = std::lower_bound(measured.begin(), measured.end(), p.z - cap);
        for (auto it = lo; it != measured.end() && *it <= p.z + cap; ++it)
            cands.push_back({std::abs(*it - p.z), i, static_cast<std::size_t>(it - measured.begin())});
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        return a.d != b.d ? a.d < b.d : (a.i != b.i ? a.i < b.i : a.j < b.j);
    });
    std::vector<int> pmatch(predicted.levels.size(), -1), mmatch(measured.size(), -1);
    for (const auto& c : cands) {
        if (pmatch[c.i] >= 0 || mmatch[c.j] >= 0) continue;
        pmatch[c.i] = static_cast<int>(c.j);
        mmatch[c.j] = static_cast<int>(c.i);
    }

    PredictionReport rep;
    rep.offsets = offsets;
    std::map<std::array<int, 3>, std::size_t> by_index;
    for (std::size_t i = 0; i < predicted.levels.size(); ++i) {
        const auto& p = predicted.levels[i];
        if (pmatch[i] < 0) {
            rep.unmatched_predicted.push_back(p);
            continue;
        }
        ComparisonRow r;
        r.k = p.k;
        r.ell = p.ell;
        r.component = p.component;
        r.predicted = p.z;
        r.measured = measured[static_cast<std::size_t>(pmatch[i])];
        r.error = std::abs(r.predicted - r.measured);
        r.local_spacing = p.local_spacing;
        rep.rows.push_back(r);
    }
    for (std::size_t j = 0; j < measured.size(); ++j)
        if (mmatch[j] < 0) rep.unmatched_measured.push_back(measured[j]);
    std::sort(rep.rows.begin(), rep.rows.end(), [](const auto& a, const auto& b) {
        return std::tie(a.component, a.k, a.ell) < std::tie(b.component, b.k, b.ell);
    });
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        auto& r = rep.rows[i];
        rep.max_error = std::max(rep.max_error, r.error);
        rep.max_relative_error = std::max(rep.max_relative_error, r.error / r.local_spacing);
        if (i + 1 < rep.rows.size()) {
            const auto& n = rep.rows[i + 1];
            if (n.component == r.component && n.k == r.k && n.ell == r.ell + 1) {
                r.spacing_measured = n.measured - r.measured;
                r.spacing_predicted = n.predicted - r.predicted;
                rep.max_spacing_deviation = std::max(
                    rep.max_spacing_deviation, std::abs(r.spacing_measured - r.spacing_predicted) / std::abs(r.spacing_predicted));
                ++rep.spacing_pairs;
            }
        }
    }
    double sd = 0.0;
    int nsd = 0;
    for (std::size_t i = 0; i + 2 < rep.rows.size(); ++i) {
        const auto &a = rep.rows[i], &b = rep.rows[i + 1], &c = rep.rows[i + 2];
        if (a.component == c.component && a.k == c.k && b.ell == a.ell + 1 && c.ell == a.ell + 2) {
            sd += std::abs(c.measured - 2 * b.measured + a.measured) / b.local_spacing;
            ++nsd;
        }
    }
    rep.mean_second_difference = nsd ? sd / nsd : 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Serialization

inline void to_json(nlohmann::json& j, const Cluster& c) {
    j = {{"k", c.k}, {"center", c.center}, {"width", c.width}, {"eigenvalues", c.eigenvalues}};
}

inline void to_json(nlohmann::json& j, const ClusterReport& r) {
    j = {{"h", r.h}, {"eps", r.eps}, {"gap_threshold", r.gap_threshold}, {"clusters", r.clusters}};
}

inline void to_json(nlohmann::json& j, const Offsets& o) {
    j = {{"mu1", o.mu1}, {"sigma1", o.sigma1}, {"mu2", o.mu2}, {"sigma2", o.sigma2}};
}

inline void from_json(const nlohmann::json& j, Offsets& o) {
    o.mu1 = j.at("mu1").get<double>();
    o.sigma1 = j.at("sigma1").get<double>();
    o.mu2 = j.at("mu2").get<double>();
    o.sigma2 = j.at("sigma2").get<double>();
}

}  // namespace semicluster
