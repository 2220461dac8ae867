// semicluster - command-line driver for the cluster and subcluster pipeline.
//
// Every subcommand reads an optional JSON run configuration (--config) and then
// applies flag overrides. Exit status: 0 on success, 1 when an acceptance check
// fails, 2 on configuration or computation errors.

#include "semicluster/config.hpp"
#include "semicluster/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

using namespace semicluster;

namespace {

struct Overrides {
    std::string config;
    std::vector<std::string> field;
    std::vector<std::string> lambda;
    std::vector<double> h;
    std::optional<double> eps_c, eps_gamma, nmax_factor, window_C, E0, mu1, mu2;
    std::optional<int> nmax_margin, window_clusters;
    std::vector<double> F0;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;

    void attach(CLI::App* app) {
        app->add_option("-c,--config", config, "JSON run configuration")->check(CLI::ExistingFile);
        app->add_option("--field", field, "field coefficients b2 b1 b0 (rationals)")->expected(3);
        app->add_option("--lambda", lambda, "frequencies lambda1 lambda2")->expected(2);
        app->add_option("--h-list", h, "semiclassical parameters");
        app->add_option("--eps-c", eps_c, "eps = c h^gamma: c");
        app->add_option("--eps-gamma", eps_gamma, "eps = c h^gamma: gamma > 1");
        app->add_option("--nmax-factor", nmax_factor, "n_max = ceil(factor / h) + margin: factor");
        app->add_option("--nmax-margin", nmax_margin, "n_max = ceil(factor / h) + margin: margin");
        app->add_option("--F0-list", F0, "subcluster centers F0");
        app->add_option("--window-C", window_C, "window constant C");
        app->add_option("--E0", E0, "base energy");
        app->add_option("--window-clusters", window_clusters, "clusters on each side of E0");
        app->add_option("--mu1", mu1, "fixed first offset (with --mu2)");
        app->add_option("--mu2", mu2, "fixed second offset (with --mu1)");
        app->add_option("-o,--out", out, "output directory");
        app->add_option("--seed", seed, "seed of the randomized checks");
    }

    RunConfig resolve() const {
        nlohmann::json j = nlohmann::json::object();
        if (!config.empty()) j = config_to_json(load_config(config));
        if (!field.empty()) j["model"] = {{"field", field}, {"lambda", j.value("model", nlohmann::json::object()).value("lambda", nlohmann::json::array({"1", "1"}))}};
        if (!lambda.empty()) j["model"]["lambda"] = lambda;
        if (!h.empty()) j["h_list"] = h;
        if (eps_c) j["eps_rule"]["c"] = *eps_c;
        if (eps_gamma) j["eps_rule"]["gamma"] = *eps_gamma;
        if (nmax_factor) j["n_max_rule"]["factor"] = *nmax_factor;
        if (nmax_margin) j["n_max_rule"]["margin"] = *nmax_margin;
        if (!F0.empty()) j["F0_list"] = F0;
        if (window_C) j["window_C"] = *window_C;
        if (E0) j["E0"] = *E0;
        if (window_clusters) j["window_clusters"] = *window_clusters;
        if (mu1.has_value() != mu2.has_value()) throw ConfigError("--mu1 and --mu2 go together");
        if (mu1) j["offsets"] = {{"mu1", *mu1}, {"mu2", *mu2}};
        if (out) j["output_dir"] = *out;
        if (seed) j["seed"] = *seed;
        return config_from_json(j);
    }
};

std::vector<std::unique_ptr<ChartFamily>> charts_for(const RunConfig& cfg, const ExactSymbol& qavg, double F0) {
    const auto profile = harmonic_action_profile(cfg.model.build().lambda, cfg.E0);
    std::vector<std::unique_ptr<ChartFamily>> comps;
    comps.push_back(std::make_unique<ChartFamily>(qavg, profile, cfg.E0, F0));
    for (int c = 1; c < comps.front()->base_component_count(); ++c)
        comps.push_back(std::make_unique<ChartFamily>(qavg, profile, cfg.E0, F0, c));
    return comps;
}

struct Model {
    MagneticModel model;
    ModelSymbols sym;
    ExactSymbol qavg;
    explicit Model(const RunConfig& cfg)
        : model(cfg.model.build()), sym(magnetic_symbol(model)), qavg(flow_average(sym.q, model.lambda)) {}
};

SubclusterStudy study_for(const RunConfig& cfg) {
    const Model m(cfg);
    const double h = cfg.h_list.front();
    const auto run = run_spectrum(m.sym, h, cfg.eps_rule(h), cfg.n_max_rule(h));
    return subcluster_study(charts_for(cfg, m.qavg, cfg.F0_list.front()), run, cfg.window_C, cfg.window_clusters,
                            cfg.fixed_offsets);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cluster and subcluster spectra of perturbed 1:1 oscillators"};
    app.require_subcommand(1);
    Overrides ov;
    int order = 2;
    std::vector<double> energies;

    auto* average = app.add_subcommand("average", "flow average of the perturbation");
    auto* normal = app.add_subcommand("normal-form", "Birkhoff normal form terms");
    normal->add_option("--order", order, "normal form order")->check(CLI::Range(1, 3));
    auto* actions = app.add_subcommand("actions", "action table and action-period duality for each F0");
    actions->add_option("--E", energies, "energies of the table (default E0 +- 5%, 10%)");
    auto* critical = app.add_subcommand("critical-values", "critical values of the flow average on the orbit sphere");
    critical->add_option("--E", energies, "energies (default E0)");
    auto* spectrum = app.add_subcommand("spectrum", "eigenvalues for each h");
    auto* clusters = app.add_subcommand("clusters", "cluster reports for each h");
    auto* predict = app.add_subcommand("predict", "Bohr-Sommerfeld levels at the first h and F0");
    auto* comparison = app.add_subcommand("compare", "comparison table (CSV) at the first h and F0");
    auto* report = app.add_subcommand("report", "full run with artifacts and summary");
    for (auto* s : {average, normal, actions, critical, spectrum, clusters, predict, comparison, report}) ov.attach(s);

    CLI11_PARSE(app, argc, argv);

    try {
        const RunConfig cfg = ov.resolve();
        if (average->parsed()) {
            const Model m(cfg);
            std::cout << nlohmann::json{{"q", symbol_to_json(m.sym.q)}, {"average", symbol_to_json(m.qavg)}}.dump(2) << '\n';
        } else if (normal->parsed()) {
            const Model m(cfg);
            const auto nf = birkhoff_normal_form(m.sym.p2, m.sym.q, m.model.lambda, order);
            nlohmann::json terms = nlohmann::json::array();
            for (const auto& t : nf.invariant_terms) terms.push_back(symbol_to_json(t));
            std::cout << nlohmann::json{{"order", order}, {"invariant_terms", terms}}.dump(2) << '\n';
        } else if (critical->parsed()) {
            const Model m(cfg);
            if (energies.empty()) energies = {cfg.E0};
            nlohmann::json out = nlohmann::json::array();
            for (double E : energies) out.push_back({{"E", E}, {"critical_values", critical_values(reduced_hamiltonian(m.model, E))}});
            std::cout << out.dump(2) << '\n';
        } else if (actions->parsed()) {
            const Model m(cfg);
            if (energies.empty())
                for (int i = -2; i <= 2; ++i) energies.push_back(cfg.E0 * (1.0 + 0.05 * i));
            const auto red = reduced_hamiltonian(m.model, cfg.E0);
            nlohmann::json out = nlohmann::json::array();
            int status = 0;
            for (double F0 : cfg.F0_list) {
                const auto comps = charts_for(cfg, m.qavg, F0);
                const auto [lo, hi] = comps.front()->regular_range(cfg.E0);
                std::vector<double> Fs;
                for (int i = 0; i <= 20; ++i) Fs.push_back(lo + (hi - lo) * i / 20.0);
                double worst = 0.0;
                for (const auto& d : action_period_duality(red, F0)) worst = std::max(worst, d.relative_deviation);
                if (!(worst <= 1e-4)) status = 1;
                out.push_back({{"F0", F0}, {"components", comps.front()->base_component_count()},
                               {"table", action_table(*comps.front(), energies, Fs)}, {"duality_max_deviation", worst}});
            }
            std::cout << out.dump(2) << '\n';
            return status;
        } else if (spectrum->parsed() || clusters->parsed()) {
            const Model m(cfg);
            nlohmann::json out = nlohmann::json::array();
            for (double h : cfg.h_list) {
                const auto run = run_spectrum(m.sym, h, cfg.eps_rule(h), cfg.n_max_rule(h));
                if (spectrum->parsed()) {
                    out.push_back({{"h", h}, {"eps", run.eps}, {"n_max", run.n_max}, {"eigenvalues", run.eigenvalues}});
                } else {
                    nlohmann::json j = run.clusters;
                    const auto st = cluster_stats(run, m.qavg.is_zero() ? nullptr : &m.qavg);
                    j["width_constant"] = st.width_constant;
                    j["incomplete"] = st.incomplete;
                    out.push_back(j);
                }
            }
            std::cout << out.dump(2) << '\n';
        } else if (predict->parsed()) {
            std::cout << detail::study_json(study_for(cfg)).dump(2) << '\n';
        } else if (comparison->parsed()) {
            const auto s = study_for(cfg);
            write_comparison_csv(std::cout, s.report.rows);
            const auto& t = cfg.thresholds;
            const bool ok = s.report.unmatched_measured.empty() && s.report.max_relative_error <= t.relative_error &&
                            s.report.max_spacing_deviation <= t.spacing_deviation;
            return ok ? 0 : 1;
        } else if (report->parsed()) {
            const auto a = run_pipeline(cfg);
            for (const auto& s : a.stages) std::cout << "stage " << s.name << ": " << s.status << (s.note.empty() ? "" : " (" + s.note + ")") << '\n';
            for (const auto& c : a.checks)
                std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " = " << c.value << ' ' << c.relation << ' '
                          << c.threshold << "  [" << c.artifact << "]\n";
            std::cout << "artifacts in " << cfg.output_dir.string() << '\n';
            return a.all_pass() ? 0 : 1;
        }
    } catch (const StageError& e) {
        std::cerr << "semicluster: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "semicluster: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
