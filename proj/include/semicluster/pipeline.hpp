// pipeline.hpp - batch run: symbols, dynamics, quantization, spectra, comparison.
//
// Stages and the artifacts they write into the output directory:
//
//   config       config.json
//   symbols      symbols.json, symbolic_checks.json
//   dynamics     critical_values.json, actions_F<F0>.json
//   spectrum     eigenvalues_h<h>.json
//   clusters     clusters_h<h>.json
//   prediction   prediction_h<h>_F<F0>.json, comparison_h<h>_F<F0>.csv
//   report       spectrum_h<h>.svg, summary.json
//
// A failing stage leaves the files already written in place, records itself in
// summary.json and is rethrown as StageError.

#pragma once

#include "semicluster/action_profile.hpp"
#include "semicluster/birkhoff.hpp"
#include "semicluster/config.hpp"
#include "semicluster/magnetic.hpp"
#include "semicluster/reduced.hpp"
#include "semicluster/report.hpp"
#include "semicluster/spectral.hpp"
#include "semicluster/symbol_io.hpp"
#include "semicluster/torus.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace semicluster {

class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what)
        : std::runtime_error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

inline std::string number_tag(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Symbolic residual suite

struct ResidualSuite {
    int trials = 0;
    int homological_nonzero = 0;
    int commutation_nonzero = 0;
    int gauge_nonzero = 0;
    int idempotence_nonzero = 0;
    int failures() const { return homological_nonzero + commutation_nonzero + gauge_nonzero + idempotence_nonzero; }
};

namespace detail {

inline Rational seeded_rational(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> num(-6, 6), den(1, 5);
    return Rational(num(rng), den(rng));
}

inline ExactSymbol seeded_real_symbol(std::mt19937_64& rng, int degree, int terms) {
    std::uniform_int_distribution<int> slot(0, 3);
    ExactSymbol s;
    for (int i = 0; i < terms; ++i) {
        MonomialKey k{0, 0, 0, 0};
        for (int d = 0; d < degree; ++d) ++k[slot(rng)];
        const ComplexRational c{seeded_rational(rng), seeded_rational(rng)};
        s.add_term(k, c);
        s.add_term(swap_conjugate(k), conj(c));
    }
    return s;
}

}  // namespace detail

/// Homological residual, order-2 commutation, gauge difference and average
/// idempotence on `trials` seeded inputs each, all in exact arithmetic.
inline ResidualSuite symbolic_residual_suite(std::uint64_t seed, int trials, const FrequencyVector& lam = {}) {
    std::mt19937_64 rng(seed);
    ResidualSuite r;
    r.trials = trials;
    const auto p2 = harmonic_symbol(lam);
    for (int i = 0; i < trials; ++i) {
        const auto q = detail::seeded_real_symbol(rng, 1 + i % 6, 5);
        const auto g = solve_homological(q, lam);
        if (!(poisson_bracket(p2, g) - (q - flow_average(q, lam))).is_zero()) ++r.homological_nonzero;
        const auto avg = flow_average(q, lam);
        if (!(flow_average(avg, lam) - avg).is_zero()) ++r.idempotence_nonzero;

        const auto q4 = detail::seeded_real_symbol(rng, 4, 3);
        const auto nf = birkhoff_normal_form(p2, q4, lam, 2);
        for (const auto& t : nf.invariant_terms)
            if (!poisson_bracket(p2, t).is_zero()) {
                ++r.commutation_nonzero;
                break;
            }

        MagneticModel m;
        m.lambda = lam;
        for (auto& row : m.a)
            for (auto& c : row) c = detail::seeded_rational(rng);
        for (auto& c : m.p4) c = detail::seeded_rational(rng);
        RealPolynomial<Rational> phi;
        for (int k = 0; k <= 4; ++k) phi.add_term({k, 4 - k, 0, 0}, detail::seeded_rational(rng));
        if (!gauge_check(m, phi).difference.is_zero()) ++r.gauge_nonzero;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Classical checks

/// Largest deviation of the critical values of b = (0, b1, 0) at E from {-b1 E^2/16, 0, b1 E^2/16};
/// infinity when the count is not three.
inline double closed_form_critical_deviation(const Rational& b1, double E) {
    const auto cv = critical_values(reduced_hamiltonian(model_from_field(0, b1, 0), E));
    if (cv.size() != 3) return std::numeric_limits<double>::infinity();
    const double c = to_double(b1) * E * E / 16.0;
    return std::max({std::abs(cv[0] + c), std::abs(cv[1]), std::abs(cv[2] - c)});
}

struct DualityPoint {
    double F, dxi2_dF, T_red, relative_deviation;
};

/// d xi2 / dF against T_red / 2pi on `n` points of the regular interval containing F0.
inline std::vector<DualityPoint> action_period_duality(const ReducedHamiltonian& red, double F0, int n = 10) {
    const auto [lo, hi] = regular_interval(critical_values(red), F0);
    std::vector<DualityPoint> out;
    for (int i = 0; i < n; ++i) {
        const double F = lo + (hi - lo) * (0.1 + 0.8 * i / std::max(n - 1, 1));
        const double dF = 1e-4 * (hi - lo);
        const double d = (torus_actions(red, F + dF, F0).xi2 - torus_actions(red, F - dF, F0).xi2) / (2 * dF);
        const double T = torus_actions(red, F, F0).T_red;
        out.push_back({F, d, T, std::abs(d / (T / (2 * M_PI)) - 1.0)});
    }
    return out;
}

inline ActionProfile harmonic_action_profile(const FrequencyVector& lam, double E0) {
    const double T = lam.period();
    return ActionProfile([T](double) { return T; }, 0.5 * E0, 1.5 * E0, 0.0);
}

// ---------------------------------------------------------------------------
// Spectra and clusters

struct SpectrumRun {
    double h = 0.0, eps = 0.0;
    int n_max = 0, dimension = 0, interior_limit = 0;
    std::vector<double> eigenvalues;
    ClusterReport clusters;
};

/// Eigenvalues of Weyl(p2) + eps Weyl(q) and their clusters up to the interior limit.
inline SpectrumRun run_spectrum(const ModelSymbols& sym, double h, double eps, int n_max) {
    SpectrumRun r;
    r.h = h;
    r.eps = eps;
    r.n_max = n_max;
    FockBasis basis(n_max, h);
    r.dimension = basis.dimension();
    auto H = weyl_quantize(sym.p2, basis);
    const auto Q = weyl_quantize(sym.q, basis);
    H.matrix += eps * Q.matrix;
    H.symbol_degree = std::max(H.symbol_degree, Q.symbol_degree);
    r.interior_limit = Q.interior_limit();
    const auto ev = operator_spectrum(H);
    r.eigenvalues.assign(ev.data(), ev.data() + ev.size());
    ClusterOptions opt;
    opt.max_k = r.interior_limit;
    r.clusters = detect_clusters(r.eigenvalues, h, eps, opt);
    return r;
}

struct ClusterStats {
    int clusters = 0;
    int incomplete = 0;          // clusters whose size differs from k + 1
    double max_width = 0.0;
    double width_constant = 0.0; // max width / eps
    double separation_min = std::numeric_limits<double>::quiet_NaN();
    double separation_max = std::numeric_limits<double>::quiet_NaN();  // in units of h
    std::optional<ShiftBoundsReport> bounds;
};

template <class C>
ClusterStats cluster_stats(const SpectrumRun& run, const PolySymbol<C>* qavg) {
    ClusterStats s;
    const auto& cl = run.clusters.clusters;
    s.clusters = static_cast<int>(cl.size());
    for (std::size_t i = 0; i < cl.size(); ++i) {
        if (static_cast<int>(cl[i].eigenvalues.size()) != cl[i].k + 1) ++s.incomplete;
        s.max_width = std::max(s.max_width, cl[i].width);
        if (i > 0) {
            const double sep = (cl[i].center - cl[i - 1].center) / run.h;
            s.separation_min = i == 1 ? sep : std::min(s.separation_min, sep);
            s.separation_max = i == 1 ? sep : std::max(s.separation_max, sep);
        }
    }
    s.width_constant = run.eps > 0.0 ? s.max_width / run.eps : 0.0;
    if (qavg && !qavg->is_zero()) s.bounds = check_shift_bounds(run.clusters, *qavg, run.interior_limit);
    return s;
}

// ---------------------------------------------------------------------------
// Subclusters and prediction

struct SubclusterStudy {
    double F0 = 0.0;
    int components = 0;
    std::vector<SubclusterWindow> windows;
    int count = 0;
    std::optional<OffsetFit> fit;
    Offsets offsets;
    PredictionGrid grid;
    PredictionReport report;
};

/// Windows on clusters k0 - r .. k0 + r (k0 the cluster at E0), offsets fitted or
/// fixed, Bohr-Sommerfeld grid over the window and the matched comparison.
inline SubclusterStudy subcluster_study(const std::vector<std::unique_ptr<ChartFamily>>& families, const SpectrumRun& run,
                                        double C, int r, const std::optional<std::pair<double, double>>& fixed) {
    const ChartFamily& fam = *families.front();
    SubclusterStudy s;
    s.F0 = fam.F0();
    s.components = static_cast<int>(families.size());
    const int k0 = static_cast<int>(std::lround(fam.E0() / run.h)) - 1;
    std::vector<double> measured;
    std::vector<int> ks;
    for (int k = k0 - r; k <= k0 + r; ++k) {
        s.windows.push_back(extract_subcluster(run.clusters, k, run.h * (k + 1), s.F0, run.eps, C, run.interior_limit));
        ks.push_back(k);
        s.count += static_cast<int>(s.windows.back().eigenvalues.size());
        measured.insert(measured.end(), s.windows.back().eigenvalues.begin(), s.windows.back().eigenvalues.end());
    }
    std::sort(measured.begin(), measured.end());
    std::vector<const ChartFamily*> fams;
    for (const auto& f : families) fams.push_back(f.get());
    if (fixed) {
        s.offsets = chart_offsets(fam);
        s.offsets.mu1 = fixed->first;
        s.offsets.mu2 = fixed->second;
    } else {
        s.fit = fit_offsets(fams, run.clusters, s.windows, run.eps, run.h);
        s.offsets = s.fit->offsets;
    }
    for (int k : ks) {
        std::vector<int> ells;
        for (const auto* f : fams) {
            const auto e = ell_range(*f, k, s.offsets, run.h, s.F0 - 1.0 / C, s.F0 + 1.0 / C, 1);
            ells.insert(ells.end(), e.begin(), e.end());
        }
        std::sort(ells.begin(), ells.end());
        ells.erase(std::unique(ells.begin(), ells.end()), ells.end());
        const auto g = bs_predict(fams, {k}, ells, s.offsets, run.eps, run.h);
        s.grid.levels.insert(s.grid.levels.end(), g.levels.begin(), g.levels.end());
        s.grid.skipped.insert(s.grid.skipped.end(), g.skipped.begin(), g.skipped.end());
    }
    std::sort(s.grid.levels.begin(), s.grid.levels.end(), [](const auto& a, const auto& b) { return a.z < b.z; });
    s.report = compare(s.grid, measured, s.offsets);
    return s;
}

/// Predicted levels inside a window.
inline std::vector<double> predicted_in(const PredictionGrid& g, double lo, double hi) {
    std::vector<double> out;
    for (const auto& l : g.levels)
        if (l.z >= lo && l.z <= hi) out.push_back(l.z);
    return out;
}

// ---------------------------------------------------------------------------
// Run

struct RunArtifacts {
    RunConfig config;
    std::vector<StageRecord> stages;
    std::vector<CheckResult> checks;
    std::vector<SpectrumRun> spectra;                       // one per h
    std::vector<std::vector<SubclusterStudy>> studies;      // [h][F0]
    std::vector<std::string> files;
    bool harmonic = false;
    bool all_pass() const {
        return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; }) &&
               std::none_of(stages.begin(), stages.end(), [](const auto& s) { return s.status == "failed"; });
    }
};

namespace detail {

inline nlohmann::json summary_json(const RunArtifacts& a) {
    nlohmann::json j;
    j["all_pass"] = a.all_pass();
    j["harmonic"] = a.harmonic;
    j["stages"] = a.stages;
    j["checks"] = a.checks;
    return j;
}

inline nlohmann::json level_json(const PredictedLevel& l) {
    return {{"k", l.k}, {"ell", l.ell}, {"component", l.component}, {"xi1", l.xi1}, {"xi2", l.xi2}, {"E", l.E},
            {"F", l.F}, {"z", l.z}, {"T_red", l.T_red}, {"local_spacing", l.local_spacing}};
}

inline nlohmann::json study_json(const SubclusterStudy& s) {
    nlohmann::json j;
    j["F0"] = s.F0;
    j["components"] = s.components;
    j["count"] = s.count;
    j["offsets"] = s.offsets;
    if (s.fit) {
        j["fit"] = {{"mu1_canonical", s.fit->mu1_canonical}, {"mu2_canonical", s.fit->mu2_canonical},
                    {"residual1", s.fit->residual1},         {"residual2", s.fit->residual2},
                    {"measurements", s.fit->measurements},   {"clusters", s.fit->clusters}};
    } else {
        j["fit"] = nullptr;
    }
    nlohmann::json w = nlohmann::json::array();
    for (const auto& x : s.windows)
        w.push_back({{"k", x.k}, {"center", x.center}, {"half_width", x.half_width}, {"eigenvalues", x.eigenvalues}});
    j["windows"] = w;
    nlohmann::json lv = nlohmann::json::array();
    for (const auto& l : s.grid.levels) lv.push_back(level_json(l));
    j["predicted"] = lv;
    nlohmann::json sk = nlohmann::json::array();
    for (const auto& x : s.grid.skipped)
        sk.push_back({{"k", x.k}, {"ell", x.ell}, {"component", x.component}, {"reason", x.reason}});
    j["skipped"] = sk;
    const auto& r = s.report;
    j["matched"] = r.rows.size();
    j["unmatched_measured"] = r.unmatched_measured;
    j["unmatched_predicted"] = r.unmatched_predicted.size();
    j["max_error"] = r.max_error;
    j["max_relative_error"] = r.max_relative_error;
    j["max_spacing_deviation"] = r.max_spacing_deviation;
    j["spacing_pairs"] = r.spacing_pairs;
    return j;
}

inline double relative_variation(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    return *mx > 0.0 ? (*mx - *mn) / *mx : 0.0;
}

inline std::string artifact_list(const std::vector<double>& hs, const std::string& prefix, const std::string& suffix) {
    std::string out;
    for (double h : hs) out += (out.empty() ? "" : ",") + prefix + number_tag(h) + suffix;
    return out;
}

}  // namespace detail

/// Writes CSV tables, charts and the summary for completed (or partial) artifacts.
inline void emit_reports(RunArtifacts& a, ArtifactWriter& out) {
    const int r = a.config.window_clusters;
    for (std::size_t i = 0; i < a.spectra.size(); ++i) {
        const auto& run = a.spectra[i];
        const std::string htag = number_tag(run.h);
        SpectrumChart chart;
        chart.title = "eigenvalues near E0, h = " + htag + ", eps = " + number_tag(run.eps);
        const int k0 = static_cast<int>(std::lround(a.config.E0 / run.h)) - 1;
        for (const auto& c : run.clusters.clusters) {
            if (std::abs(c.k - k0) > r + 2) continue;
            chart.eigenvalues.insert(chart.eigenvalues.end(), c.eigenvalues.begin(), c.eigenvalues.end());
            chart.clusters.emplace_back(c.center - c.width / 2, c.center + c.width / 2);
        }
        if (i < a.studies.size()) {
            for (const auto& s : a.studies[i]) {
                const std::string tag = "h" + htag + "_F" + number_tag(s.F0);
                std::ostringstream csv;
                write_comparison_csv(csv, s.report.rows);
                out.write_text("comparison_" + tag + ".csv", csv.str());
                for (const auto& w : s.windows) {
                    const double lo = w.center - w.half_width, hi = w.center + w.half_width;
                    chart.windows.push_back({w.k, lo, hi, w.eigenvalues, predicted_in(s.grid, lo, hi)});
                }
            }
        }
        out.write_text("spectrum_h" + htag + ".svg", render_spectrum_svg(chart));
    }
    out.write_json("summary.json", detail::summary_json(a));
    a.files = out.files();
}

inline RunArtifacts run_pipeline(const RunConfig& cfg) {
    cfg.validate();
    RunArtifacts a;
    a.config = cfg;
    ArtifactWriter out(cfg.output_dir);
    std::string stage = "config";
    auto done = [&](const std::string& note = "") { a.stages.push_back({stage, "ok", note}); };
    auto skip = [&](const std::string& name, const std::string& note) { a.stages.push_back({name, "skipped", note}); };
    try {
        out.write_json("config.json", config_to_json(cfg));
        done();

        stage = "symbols";
        const MagneticModel model = cfg.model.build();
        const ModelSymbols sym = magnetic_symbol(model);
        const ExactSymbol qavg = flow_average(sym.q, model.lambda);
        const auto nf = birkhoff_normal_form(sym.p2, sym.q, model.lambda, 2);
        a.harmonic = sym.q.is_zero();
        out.write_json("symbols.json", {{"p2", symbol_to_json(sym.p2)},
                                        {"q", symbol_to_json(sym.q)},
                                        {"average", symbol_to_json(qavg)},
                                        {"normal_form_order2", symbol_to_json(nf.invariant_terms[1])},
                                        {"q_hash", symbol_hash(sym.q)}});
        const auto suite = symbolic_residual_suite(cfg.seed, cfg.residual_trials, model.lambda);
        out.write_json("symbolic_checks.json", {{"seed", cfg.seed},
                                                {"trials", suite.trials},
                                                {"homological_nonzero", suite.homological_nonzero},
                                                {"commutation_nonzero", suite.commutation_nonzero},
                                                {"gauge_nonzero", suite.gauge_nonzero},
                                                {"idempotence_nonzero", suite.idempotence_nonzero}});
        a.checks.push_back(make_check("symbolic_residuals_nonzero", suite.failures(), "==", 0, "symbolic_checks.json"));
        done();

        stage = "dynamics";
        const bool one_one = model.lambda.is_one_one();
        std::vector<std::vector<std::unique_ptr<ChartFamily>>> charts;  // [F0][component]
        if (!one_one) {
            skip(stage, "sphere reduction needs lambda = (1, 1)");
        } else if (qavg.is_zero()) {
            skip(stage, "flow average vanishes");
        } else {
            const auto red = reduced_hamiltonian(model, cfg.E0);
            const auto cv = critical_values(red);
            nlohmann::json cj;
            cj["E0"] = cfg.E0;
            cj["critical_values"] = cv;
            const Rational b1 = magnetic_field(model).b1;
            if (b1 != 0) {
                double dev = 0.0;
                nlohmann::json rows = nlohmann::json::array();
                for (double E : {cfg.E0, 2.0 * cfg.E0}) {
                    const double d = closed_form_critical_deviation(b1, E);
                    rows.push_back({{"E", E}, {"deviation", std::isfinite(d) ? nlohmann::json(d) : nlohmann::json(nullptr)}});
                    dev = std::max(dev, d);
                }
                cj["closed_form"] = {{"b1", format_rational(b1)}, {"field", "(0, b1, 0)"}, {"rows", rows}};
                a.checks.push_back(make_check("critical_values_closed_form", dev, "<=", cfg.thresholds.critical_value,
                                              "critical_values.json"));
            }
            out.write_json("critical_values.json", cj);

            const auto profile = harmonic_action_profile(model.lambda, cfg.E0);
            for (double F0 : cfg.F0_list) {
                std::vector<std::unique_ptr<ChartFamily>> comps;
                comps.push_back(std::make_unique<ChartFamily>(qavg, profile, cfg.E0, F0));
                for (int c = 1; c < comps.front()->base_component_count(); ++c)
                    comps.push_back(std::make_unique<ChartFamily>(qavg, profile, cfg.E0, F0, c));
                const auto [lo, hi] = comps.front()->regular_range(cfg.E0);
                std::vector<double> Es, Fs;
                for (int i = -2; i <= 2; ++i) Es.push_back(cfg.E0 * (1.0 + 0.05 * i));
                for (int i = 0; i <= 20; ++i) Fs.push_back(lo + (hi - lo) * i / 20.0);
                const auto duality = action_period_duality(red, F0);
                double worst = 0.0;
                nlohmann::json dj = nlohmann::json::array();
                for (const auto& d : duality) {
                    worst = std::max(worst, d.relative_deviation);
                    dj.push_back({{"F", d.F}, {"dxi2_dF", d.dxi2_dF}, {"T_red", d.T_red}, {"relative_deviation", d.relative_deviation}});
                }
                const std::string name = "actions_F" + number_tag(F0) + ".json";
                out.write_json(name, {{"F0", F0},
                                      {"components", comps.front()->base_component_count()},
                                      {"S1", comps.front()->S1()},
                                      {"S2", comps.front()->S2()},
                                      {"table", action_table(*comps.front(), Es, Fs)},
                                      {"duality", dj}});
                a.checks.push_back(make_check("action_period_duality_F" + number_tag(F0), worst, "<=", 1e-4, name));
                charts.push_back(std::move(comps));
            }
            done();
        }

        stage = "spectrum";
        {
            std::vector<std::future<SpectrumRun>> jobs;
            for (double h : cfg.h_list)
                jobs.push_back(std::async(std::launch::async, [&sym, &cfg, h] {
                    return run_spectrum(sym, h, cfg.eps_rule(h), cfg.n_max_rule(h));
                }));
            for (auto& j : jobs) a.spectra.push_back(j.get());
        }
        for (const auto& run : a.spectra)
            out.write_json("eigenvalues_h" + number_tag(run.h) + ".json",
                           {{"h", run.h}, {"eps", run.eps}, {"n_max", run.n_max}, {"dimension", run.dimension},
                            {"interior_limit", run.interior_limit}, {"eigenvalues", run.eigenvalues}});
        done();

        stage = "clusters";
        if (!one_one) {
            skip(stage, "cluster labels need lambda = (1, 1)");
        } else {
            std::vector<double> constants;
            for (const auto& run : a.spectra) {
                const auto st = cluster_stats(run, a.harmonic ? nullptr : &qavg);
                const std::string name = "clusters_h" + number_tag(run.h) + ".json";
                nlohmann::json j = run.clusters;
                j["stats"] = {{"clusters", st.clusters},
                              {"incomplete", st.incomplete},
                              {"max_width", st.max_width},
                              {"width_constant", st.width_constant},
                              {"separation_min", st.separation_min},
                              {"separation_max", st.separation_max}};
                if (st.bounds)
                    j["stats"]["shift_bounds"] = {{"ok", st.bounds->ok}, {"worst_margin", st.bounds->worst_margin},
                                                  {"worst_k", st.bounds->worst_k}};
                out.write_json(name, j);
                const std::string htag = number_tag(run.h);
                a.checks.push_back(make_check("incomplete_clusters_h" + htag, st.incomplete, "==", 0, name));
                if (st.clusters > 1) {
                    const double sep = std::max(std::abs(st.separation_min - 1.0), std::abs(st.separation_max - 1.0));
                    a.checks.push_back(make_check("separation_deviation_h" + htag, sep, "<=", cfg.thresholds.separation, name));
                }
                if (a.harmonic) {
                    a.checks.push_back(make_check("harmonic_width_h" + htag, st.max_width, "<=", 1e-10 * run.h * run.n_max, name));
                } else {
                    constants.push_back(st.width_constant);
                    if (st.bounds)
                        a.checks.push_back(make_check("shift_bounds_margin_h" + htag, st.bounds->worst_margin, ">=", 0.0, name));
                }
            }
            if (constants.size() > 1)
                a.checks.push_back(make_check("width_constant_variation", detail::relative_variation(constants), "<",
                                              cfg.thresholds.width_constant_variation,
                                              detail::artifact_list(cfg.h_list, "clusters_h", ".json")));
            done();
        }

        stage = "prediction";
        if (a.harmonic) {
            skip(stage, "perturbation vanishes: harmonic clusters only");
        } else if (charts.empty()) {
            skip(stage, "no action charts");
        } else {
            std::vector<std::vector<double>> count_h(cfg.F0_list.size());
            for (const auto& run : a.spectra) {
                std::vector<SubclusterStudy> row;
                for (std::size_t f = 0; f < cfg.F0_list.size(); ++f) {
                    auto s = subcluster_study(charts[f], run, cfg.window_C, cfg.window_clusters, cfg.fixed_offsets);
                    const std::string tag = "h" + number_tag(run.h) + "_F" + number_tag(s.F0);
                    const std::string name = "prediction_" + tag + ".json";
                    out.write_json(name, detail::study_json(s));
                    a.checks.push_back(make_check("unmatched_measured_" + tag, s.report.unmatched_measured.size(), "==", 0, name));
                    a.checks.push_back(make_check("relative_error_" + tag, s.report.max_relative_error, "<=",
                                                  cfg.thresholds.relative_error, name));
                    a.checks.push_back(make_check("spacing_deviation_" + tag, s.report.max_spacing_deviation, "<=",
                                                  cfg.thresholds.spacing_deviation, name));
                    count_h[f].push_back(s.count * run.h);
                    row.push_back(std::move(s));
                }
                a.studies.push_back(std::move(row));
            }
            if (cfg.h_list.size() > 1)
                for (std::size_t f = 0; f < cfg.F0_list.size(); ++f)
                    a.checks.push_back(make_check("count_scaling_F" + number_tag(cfg.F0_list[f]),
                                                  detail::relative_variation(count_h[f]), "<=", cfg.thresholds.count_scaling,
                                                  detail::artifact_list(cfg.h_list, "prediction_h",
                                                                        "_F" + number_tag(cfg.F0_list[f]) + ".json")));
            done();
        }

        stage = "report";
        a.stages.push_back({stage, "ok", ""});
        emit_reports(a, out);
    } catch (const std::exception& e) {
        if (!a.stages.empty() && a.stages.back().name == stage) a.stages.pop_back();
        a.stages.push_back({stage, "failed", e.what()});
        try {
            out.write_json("summary.json", detail::summary_json(a));
        } catch (const std::exception&) {
        }
        throw StageError(stage, e.what());
    }
    return a;
}

}  // namespace semicluster
