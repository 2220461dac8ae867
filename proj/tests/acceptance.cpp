// Acceptance run: one PASS/FAIL line per criterion with the measured value, the
// threshold and the runtime against its limit. Exit status 1 if any line fails.

#include "semicluster/eigensolver.hpp"
#include "semicluster/fock.hpp"
#include "semicluster/magnetic.hpp"
#include "semicluster/pipeline.hpp"
#include "semicluster/spectral.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace semicluster;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

bool run_criterion(int id, const char* name, double limit_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && secs < limit_s;
    std::printf("%s [%d] %s: %s; runtime %.2f s (limit %.0f s)\n", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(),
                secs, limit_s);
    std::fflush(stdout);
    return pass;
}

const MagneticModel& default_model() {
    static const MagneticModel m = model_from_field(1, 2, 1);
    return m;
}

int n_max_for(double h) { return static_cast<int>(std::ceil(1.25 / h)) + 4; }

SpectrumRun default_run(double h, double eps) { return run_spectrum(magnetic_symbol(default_model()), h, eps, n_max_for(h)); }

Outcome monomial_table() {
    int mismatches = 0, total = 0;
    for (const auto& e : semicluster::testing::monomial_average_table()) {
        ++total;
        if (flow_average(to_complex_basis(semicluster::testing::table_monomial(e)), FrequencyVector{}) !=
            semicluster::testing::table_expected(e))
            ++mismatches;
    }
    return {mismatches == 0 && total == 8, fmt("%.0f of %.0f averages differ from the closed forms (threshold 0)", mismatches, total)};
}

Outcome critical_closed_form() {
    double worst = 0.0;
    for (int b1 : {4, 16, 100})
        for (double E : {1.0, 2.0}) worst = std::max(worst, closed_form_critical_deviation(Rational(b1), E));
    return {worst <= 1e-8, fmt("max |critical value - {-b1E^2/16, 0, b1E^2/16}| = %.3e (threshold 1e-8)", worst)};
}

Outcome harmonic_exactness() {
    const double h = 0.1;
    FockBasis b(60, h);
    const auto P = weyl_quantize(harmonic_symbol(FrequencyVector{}), b);
    const Eigen::VectorXd ev = symmetric_eigen(P.matrix).values;
    std::vector<double> expect;
    for (int i = 0; i < b.dimension(); ++i) {
        const auto [n1, n2] = b.state(i);
        expect.push_back(h * (n1 + n2 + 1));
    }
    std::sort(expect.begin(), expect.end());
    double worst = 0.0;
    for (int i = 0; i < b.dimension(); ++i) worst = std::max(worst, std::abs(ev[i] - expect[i]) / expect[i]);
    return {worst <= 1e-12, fmt("dimension %.0f, max relative deviation from h(n1+n2+1) = %.3e (threshold 1e-12)",
                                b.dimension(), worst)};
}

Outcome cluster_structure() {
    const auto qavg = flow_average(magnetic_symbol(default_model()).q, default_model().lambda);
    std::vector<double> constants;
    double sep_dev = 0.0, worst_margin = std::numeric_limits<double>::infinity();
    int incomplete = 0;
    bool bounds_ok = true;
    for (double h : {0.1, 0.05, 0.025}) {
        const auto run = default_run(h, std::pow(h, 1.5));
        const auto st = cluster_stats(run, &qavg);
        constants.push_back(st.width_constant);
        sep_dev = std::max({sep_dev, std::abs(st.separation_min - 1.0), std::abs(st.separation_max - 1.0)});
        incomplete += st.incomplete;
        bounds_ok = bounds_ok && st.bounds->ok;
        worst_margin = std::min(worst_margin, st.bounds->worst_margin);
    }
    const auto [mn, mx] = std::minmax_element(constants.begin(), constants.end());
    const double variation = (*mx - *mn) / *mx;
    const bool pass = variation < 0.25 && sep_dev <= 0.10 && bounds_ok && incomplete == 0;
    return {pass, fmt("fitted C = %.4f..%.4f, variation %.3f (threshold 0.25); separation deviation %.2e (threshold 0.10)",
                      *mn, *mx, variation, sep_dev) +
                      "; shift bounds " + (bounds_ok ? "hold" : "violated") +
                      fmt(", worst margin %.3e; incomplete clusters %.0f", worst_margin, incomplete)};
}

Outcome averaging_exactness() {
    const double h = 0.05;
    FockBasis b(n_max_for(h), h);
    std::mt19937_64 rng(31);
    double worst = 0.0;
    for (int trial = 0; trial < 4; ++trial) {
        const ExactSymbol q = trial == 0 ? magnetic_symbol(default_model()).q : semicluster::testing::random_real_symbol(rng, 4, 6);
        const auto Q = weyl_quantize(q, b);
        const auto avg = quantum_time_average(Q);
        const auto cls = weyl_quantize(flow_average(q, FrequencyVector{}), b);
        const int m = FockBasis::cluster_offset(Q.interior_limit() + 1);
        const double diff = (avg.matrix - cls.matrix).topLeftCorner(m, m).norm();
        worst = std::max(worst, diff / Q.matrix.norm());
    }
    return {worst <= 1e-10, fmt("max ||<Q> - Weyl(<q>)|| / ||Q|| on interior clusters = %.3e (threshold 1e-10)", worst)};
}

Outcome oracle_second_order() {
    const double h = 0.05;
    const auto sym = magnetic_symbol(default_model());
    FockBasis b(n_max_for(h), h);
    const auto Q = weyl_quantize(sym.q, b);
    const double C2 = second_order_constant(Q);
    std::vector<double> errs, bounds;
    for (double eps : {std::pow(h, 1.5), std::pow(h, 1.5) / 2}) {
        const auto run = run_spectrum(sym, h, eps, n_max_for(h));
        double err = 0.0;
        for (const auto& c : run.clusters.clusters) {
            const auto orc = perturbation_oracle(c.k, Q, eps, h);
            for (std::size_t i = 0; i < orc.size(); ++i) err = std::max(err, std::abs(orc[i] - c.eigenvalues[i]));
        }
        errs.push_back(err);
        bounds.push_back(C2 * eps * eps / h);
    }
    const double ratio = errs[0] / errs[1];
    const bool pass = errs[0] <= bounds[0] && errs[1] <= bounds[1] && ratio >= 3.0 && ratio <= 5.0;
    return {pass, fmt("errors %.3e, %.3e vs C eps^2/h = %.3e, %.3e", errs[0], errs[1], bounds[0], bounds[1]) +
                      fmt("; ratio under eps-halving %.3f (range [3, 5])", ratio)};
}

Outcome bohr_sommerfeld() {
    const double F0 = 0.16, C = 10.0;
    const auto qavg = flow_average(magnetic_symbol(default_model()).q, default_model().lambda);
    std::vector<std::unique_ptr<ChartFamily>> fams;
    fams.push_back(std::make_unique<ChartFamily>(qavg, harmonic_action_profile(FrequencyVector{}, 1.0), 1.0, F0));
    const int components = fams.front()->base_component_count();
    std::vector<double> count_h;
    SubclusterStudy fine;
    for (double h : {0.04, 0.02}) {
        auto s = subcluster_study(fams, default_run(h, std::pow(h, 1.5)), C, 1, std::nullopt);
        count_h.push_back(s.count * h);
        if (h == 0.02) fine = std::move(s);
    }
    const double scaling = std::abs(count_h[1] - count_h[0]) / std::max(count_h[0], count_h[1]);
    const auto& r = fine.report;
    const bool pass = components == 1 && r.unmatched_measured.empty() && !r.rows.empty() && r.max_relative_error <= 0.15 &&
                      r.max_spacing_deviation <= 0.10 && scaling <= 0.15;
    return {pass, fmt("h = 0.02: %.0f matched, %.0f unmatched, max error / local spacing %.4f (threshold 0.15)",
                      r.rows.size(), r.unmatched_measured.size(), r.max_relative_error) +
                      fmt("; spacing deviation %.4f (threshold 0.10); count h = %.3f, %.3f, variation %.3f (threshold 0.15)",
                          r.max_spacing_deviation, count_h[0], count_h[1], scaling) +
                      fmt("; offsets mu1 %.4f mu2 %.4f", fine.offsets.mu1, fine.offsets.mu2)};
}

Outcome symbolic_residuals() {
    const auto one = symbolic_residual_suite(20240601, 24);
    const auto two = symbolic_residual_suite(20240602, 12, FrequencyVector(Rational(2), Rational(1)));
    const int failures = one.failures() + two.failures();
    return {failures == 0, fmt("%.0f nonzero residuals over %.0f randomized inputs per check (threshold 0)", failures,
                               one.trials + two.trials)};
}

Outcome action_period() {
    const auto pts = action_period_duality(reduced_hamiltonian(default_model(), 1.0), 0.16, 10);
    double worst = 0.0;
    for (const auto& p : pts) worst = std::max(worst, p.relative_deviation);
    return {pts.size() == 10 && worst <= 1e-4,
            fmt("max |(dxi2/dF) / (T_red/2pi) - 1| over %.0f regular F = %.3e (threshold 1e-4)", pts.size(), worst)};
}

}  // namespace

int main() {
    bool all = true;
    all &= run_criterion(1, "monomial-average table", 1, monomial_table);
    all &= run_criterion(2, "critical values", 10, critical_closed_form);
    all &= run_criterion(3, "harmonic exactness", 30, harmonic_exactness);
    all &= run_criterion(4, "cluster structure", 300, cluster_structure);
    all &= run_criterion(5, "averaging exactness", 60, averaging_exactness);
    all &= run_criterion(6, "oracle second-order law", 300, oracle_second_order);
    all &= run_criterion(7, "Bohr-Sommerfeld subcluster law", 900, bohr_sommerfeld);
    all &= run_criterion(8, "symbolic residual suite", 30, symbolic_residuals);
    all &= run_criterion(9, "action-period duality", 60, action_period);
    std::printf("%s\n", all ? "ALL CRITERIA PASS" : "SOME CRITERIA FAIL");
    return all ? 0 : 1;
}
