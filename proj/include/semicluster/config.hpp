// config.hpp - run configuration for the batch pipeline.
//
// A run is described by one JSON document. Every key is optional; missing keys
// take the defaults below.
//
//   {
//     "model": {                      // either a field or explicit coefficients
//       "field": ["1", "2", "1"],     // (b2, b1, b0) of B = b2 x1^2 + b1 x1 x2 + b0 x2^2
//       "a": [["0","0","0","0"], ["0","1","1","1/3"]],  // a[j][k]: x1^k x2^(3-k) in A_{j+1}
//       "p4": ["0","0","0","0","0"],  // p4[k]: x1^k x2^(4-k)
//       "lambda": ["1", "1"]          // frequencies of p2
//     },
//     "h_list": [0.04, 0.02],
//     "eps_rule": {"c": 1.0, "gamma": 1.5},     // eps = c h^gamma, gamma > 1
//     "n_max_rule": {"factor": 1.25, "margin": 4},  // n_max = ceil(factor / h) + margin
//     "F0_list": [0.16],
//     "window_C": 10.0,               // subcluster window half width eps / C
//     "offsets": "fit",               // or {"mu1": -1, "mu2": 0.5}
//     "E0": 1.0,                      // base energy of the action charts
//     "window_clusters": 1,           // clusters k0 - r .. k0 + r around E0 are analysed
//     "output_dir": "semicluster-run",
//     "seed": 20240601,               // drives the randomized symbolic checks
//     "residual_trials": 20,
//     "thresholds": {
//       "relative_error": 0.15,       // matched error / local spacing
//       "spacing_deviation": 0.10,    // |s_meas - s_pred| / s_pred
//       "count_scaling": 0.15,        // count h variation across h_list
//       "width_constant_variation": 0.25,
//       "separation": 0.10,           // adjacent cluster separation vs h
//       "critical_value": 1e-8
//     }
//   }
//
// Rationals may be given as strings ("1/3") or numbers.

#pragma once

#include "semicluster/magnetic.hpp"
#include "semicluster/symbol_io.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace semicluster {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ModelSpec {
    std::optional<FieldCoefficients> field = FieldCoefficients{1, 2, 1};
    std::array<std::array<Rational, 4>, 2> a{};
    std::array<Rational, 5> p4{};
    std::array<Rational, 2> lambda{Rational(1), Rational(1)};

    MagneticModel build() const {
        const FrequencyVector lam(lambda[0], lambda[1]);
        if (field) return model_from_field(field->b2, field->b1, field->b0, lam);
        MagneticModel m;
        m.lambda = lam;
        m.a = a;
        m.p4 = p4;
        return m;
    }
};

struct EpsRule {
    double c = 1.0, gamma = 1.5;
    double operator()(double h) const { return c * std::pow(h, gamma); }
};

struct NmaxRule {
    double factor = 1.25;
    int margin = 4;
    int operator()(double h) const { return static_cast<int>(std::ceil(factor / h)) + margin; }
};

struct Thresholds {
    double relative_error = 0.15;
    double spacing_deviation = 0.10;
    double count_scaling = 0.15;
    double width_constant_variation = 0.25;
    double separation = 0.10;
    double critical_value = 1e-8;
};

struct RunConfig {
    ModelSpec model;
    std::vector<double> h_list{0.04, 0.02};
    EpsRule eps_rule;
    NmaxRule n_max_rule;
    std::vector<double> F0_list{0.16};
    double window_C = 10.0;
    std::optional<std::pair<double, double>> fixed_offsets;  // (mu1, mu2); nullopt means fit
    double E0 = 1.0;
    int window_clusters = 1;
    std::filesystem::path output_dir = "semicluster-run";
    std::uint64_t seed = 20240601;
    int residual_trials = 20;
    Thresholds thresholds;

    /// Throws ConfigError naming the offending field.
    void validate() const {
        if (h_list.empty()) throw ConfigError("h_list: at least one value required");
        for (double h : h_list)
            if (!(h > 0.0 && h < 1.0)) throw ConfigError("h_list: values must lie in (0, 1)");
        if (!(eps_rule.gamma > 1.0)) throw ConfigError("eps_rule.gamma: must exceed 1");
        if (!(eps_rule.c > 0.0)) throw ConfigError("eps_rule.c: must be positive");
        if (!(n_max_rule.factor >= 1.0)) throw ConfigError("n_max_rule.factor: must be at least 1");
        if (n_max_rule.margin < 4) throw ConfigError("n_max_rule.margin: must cover the symbol degree 4");
        if (!(window_C > 1.0)) throw ConfigError("window_C: must exceed 1");
        if (!(E0 > 0.0)) throw ConfigError("E0: must be positive");
        if (window_clusters < 0) throw ConfigError("window_clusters: must be non-negative");
        if (residual_trials < 0) throw ConfigError("residual_trials: must be non-negative");
        if (model.lambda[0] <= 0 || model.lambda[1] <= 0) throw ConfigError("model.lambda: must be positive");
        for (double h : h_list)
            if (n_max_rule(h) - 4 < E0 / h + window_clusters + 1)
                throw ConfigError("n_max_rule: clusters near E0 are not interior");
    }
};

namespace detail {

inline void read_rationals(const nlohmann::json& j, Rational* out, std::size_t n, const char* what) {
    if (!j.is_array() || j.size() != n) throw ConfigError(std::string(what) + ": expected " + std::to_string(n) + " entries");
    for (std::size_t i = 0; i < n; ++i) out[i] = json_rational(j[i]);
}

inline nlohmann::json rational_json(const Rational& r) { return format_rational(r); }

}  // namespace detail

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c;
    try {
        if (!j.is_object()) throw ConfigError("config: expected an object");
        if (j.contains("model")) {
            const auto& m = j.at("model");
            if (m.contains("field") && (m.contains("a") || m.contains("p4")))
                throw ConfigError("model: give either field or a/p4");
            if (m.contains("field")) {
                Rational b[3];
                detail::read_rationals(m.at("field"), b, 3, "model.field");
                c.model.field = FieldCoefficients{b[0], b[1], b[2]};
            } else if (m.contains("a") || m.contains("p4")) {
                c.model.field.reset();
                if (m.contains("a")) {
                    const auto& a = m.at("a");
                    if (!a.is_array() || a.size() != 2) throw ConfigError("model.a: expected two rows");
                    for (int r = 0; r < 2; ++r) detail::read_rationals(a[r], c.model.a[r].data(), 4, "model.a");
                }
                if (m.contains("p4")) detail::read_rationals(m.at("p4"), c.model.p4.data(), 5, "model.p4");
            }
            if (m.contains("lambda")) detail::read_rationals(m.at("lambda"), c.model.lambda.data(), 2, "model.lambda");
        }
        if (j.contains("h_list")) c.h_list = j.at("h_list").get<std::vector<double>>();
        if (j.contains("eps_rule")) {
            c.eps_rule.c = j.at("eps_rule").value("c", c.eps_rule.c);
            c.eps_rule.gamma = j.at("eps_rule").value("gamma", c.eps_rule.gamma);
        }
        if (j.contains("n_max_rule")) {
            c.n_max_rule.factor = j.at("n_max_rule").value("factor", c.n_max_rule.factor);
            c.n_max_rule.margin = j.at("n_max_rule").value("margin", c.n_max_rule.margin);
        }
        if (j.contains("F0_list")) c.F0_list = j.at("F0_list").get<std::vector<double>>();
        c.window_C = j.value("window_C", c.window_C);
        if (j.contains("offsets")) {
            const auto& o = j.at("offsets");
            if (o.is_string()) {
                if (o.get<std::string>() != "fit") throw ConfigError("offsets: expected \"fit\" or {mu1, mu2}");
            } else {
                c.fixed_offsets = std::make_pair(o.at("mu1").get<double>(), o.at("mu2").get<double>());
            }
        }
        c.E0 = j.value("E0", c.E0);
        c.window_clusters = j.value("window_clusters", c.window_clusters);
        if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
        c.seed = j.value("seed", c.seed);
        c.residual_trials = j.value("residual_trials", c.residual_trials);
        if (j.contains("thresholds")) {
            const auto& t = j.at("thresholds");
            auto& th = c.thresholds;
            th.relative_error = t.value("relative_error", th.relative_error);
            th.spacing_deviation = t.value("spacing_deviation", th.spacing_deviation);
            th.count_scaling = t.value("count_scaling", th.count_scaling);
            th.width_constant_variation = t.value("width_constant_variation", th.width_constant_variation);
            th.separation = t.value("separation", th.separation);
            th.critical_value = t.value("critical_value", th.critical_value);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

inline nlohmann::json config_to_json(const RunConfig& c) {
    nlohmann::json m;
    if (c.model.field) {
        m["field"] = {detail::rational_json(c.model.field->b2), detail::rational_json(c.model.field->b1),
                      detail::rational_json(c.model.field->b0)};
    } else {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& row : c.model.a) {
            nlohmann::json r = nlohmann::json::array();
            for (const auto& v : row) r.push_back(detail::rational_json(v));
            a.push_back(r);
        }
        nlohmann::json p = nlohmann::json::array();
        for (const auto& v : c.model.p4) p.push_back(detail::rational_json(v));
        m["a"] = a;
        m["p4"] = p;
    }
    m["lambda"] = {detail::rational_json(c.model.lambda[0]), detail::rational_json(c.model.lambda[1])};
    nlohmann::json j;
    j["model"] = m;
    j["h_list"] = c.h_list;
    j["eps_rule"] = {{"c", c.eps_rule.c}, {"gamma", c.eps_rule.gamma}};
    j["n_max_rule"] = {{"factor", c.n_max_rule.factor}, {"margin", c.n_max_rule.margin}};
    j["F0_list"] = c.F0_list;
    j["window_C"] = c.window_C;
    if (c.fixed_offsets)
        j["offsets"] = {{"mu1", c.fixed_offsets->first}, {"mu2", c.fixed_offsets->second}};
    else
        j["offsets"] = "fit";
    j["E0"] = c.E0;
    j["window_clusters"] = c.window_clusters;
    j["output_dir"] = c.output_dir.generic_string();
    j["seed"] = c.seed;
    j["residual_trials"] = c.residual_trials;
    const auto& t = c.thresholds;
    j["thresholds"] = {{"relative_error", t.relative_error},     {"spacing_deviation", t.spacing_deviation},
                       {"count_scaling", t.count_scaling},       {"width_constant_variation", t.width_constant_variation},
                       {"separation", t.separation},             {"critical_value", t.critical_value}};
    return j;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot read " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(f, nullptr, true, true);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

}  // namespace semicluster
