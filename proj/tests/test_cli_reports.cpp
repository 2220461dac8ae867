#include "semicluster/config.hpp"
#include "semicluster/pipeline.hpp"
#include "semicluster/report.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace semicluster;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("semicluster_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = slurp(e.path());
    return out;
}

const CheckResult* find_check(const RunArtifacts& a, const std::string& name) {
    for (const auto& c : a.checks)
        if (c.name == name) return &c;
    return nullptr;
}

const StageRecord* find_stage(const RunArtifacts& a, const std::string& name) {
    for (const auto& s : a.stages)
        if (s.name == name) return &s;
    return nullptr;
}

int count_of(const std::string& text, const std::string& needle) {
    int n = 0;
    for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
    return n;
}

RunConfig small_default(const std::string& dir) {
    RunConfig c;
    c.h_list = {0.05, 0.04};
    c.residual_trials = 4;
    c.output_dir = scratch_dir(dir);
    return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

TEST(RunConfig, DefaultsAreValid) {
    const RunConfig c;
    EXPECT_NO_THROW(c.validate());
    EXPECT_NEAR(c.eps_rule(0.04), 0.008, 1e-15);
    EXPECT_EQ(c.n_max_rule(0.02), 67);
    EXPECT_TRUE(c.model.field.has_value());
}

TEST(RunConfig, JsonRoundTrip) {
    const auto j = nlohmann::json::parse(R"({
        "model": {"a": [["0", "1/2", 0, 0], [1, "-3/4", 0, "1/3"]], "p4": [0, 0, "1/5", 0, 0], "lambda": [1, 1]},
        "h_list": [0.05], "eps_rule": {"c": 0.5, "gamma": 1.25}, "F0_list": [0.1, 0.2],
        "window_C": 8, "offsets": {"mu1": -1, "mu2": 0.5}, "seed": 7, "output_dir": "out"
    })");
    const RunConfig c = config_from_json(j);
    EXPECT_FALSE(c.model.field.has_value());
    EXPECT_EQ(c.model.a[0][1], Rational(1, 2));
    EXPECT_EQ(c.model.a[1][3], Rational(1, 3));
    EXPECT_EQ(c.model.p4[2], Rational(1, 5));
    ASSERT_TRUE(c.fixed_offsets.has_value());
    EXPECT_EQ(c.fixed_offsets->second, 0.5);
    EXPECT_EQ(c.seed, 7u);
    const RunConfig back = config_from_json(config_to_json(c));
    EXPECT_EQ(config_to_json(back), config_to_json(c));
}

TEST(RunConfig, FieldModelMatchesExplicitPotential) {
    const RunConfig f = config_from_json(nlohmann::json::parse(R"({"model": {"field": [1, 2, 1]}})"));
    const RunConfig a = config_from_json(nlohmann::json::parse(R"({"model": {"a": [[0,0,0,0],[0,1,1,"1/3"]]}})"));
    EXPECT_EQ(magnetic_symbol(f.model.build()).q, magnetic_symbol(a.model.build()).q);
}

TEST(RunConfig, Rejections) {
    auto bad = [](const char* text) { return config_from_json(nlohmann::json::parse(text)); };
    EXPECT_THROW(bad(R"({"eps_rule": {"gamma": 1.0}})"), ConfigError);
    EXPECT_THROW(bad(R"({"eps_rule": {"c": -1}})"), ConfigError);
    EXPECT_THROW(bad(R"({"h_list": []})"), ConfigError);
    EXPECT_THROW(bad(R"({"h_list": [1.5]})"), ConfigError);
    EXPECT_THROW(bad(R"({"n_max_rule": {"factor": 0.9}})"), ConfigError);
    EXPECT_THROW(bad(R"({"n_max_rule": {"margin": 2}})"), ConfigError);
    EXPECT_THROW(bad(R"({"E0": 2.0})"), ConfigError);
    EXPECT_THROW(bad(R"({"window_C": 1})"), ConfigError);
    EXPECT_THROW(bad(R"({"offsets": "guess"})"), ConfigError);
    EXPECT_THROW(bad(R"({"model": {"field": [1, 2]}})"), ConfigError);
    EXPECT_THROW(bad(R"({"model": {"field": [1, 2, 1], "p4": [0, 0, 0, 0, 0]}})"), ConfigError);
    EXPECT_THROW(bad(R"({"model": {"field": ["1/0", 2, 1]}})"), ConfigError);
    EXPECT_THROW(bad(R"({"h_list": "0.1"})"), ConfigError);
    EXPECT_THROW(bad(R"([1, 2])"), ConfigError);
}

TEST(RunConfig, LoadFromFile) {
    const fs::path dir = scratch_dir("load");
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "run.json");
        f << "{\n  // comments are allowed\n  \"h_list\": [0.05]\n}\n";
    }
    EXPECT_EQ(load_config(dir / "run.json").h_list, std::vector<double>{0.05});
    EXPECT_THROW(load_config(dir / "missing.json"), ConfigError);
    {
        std::ofstream f(dir / "broken.json");
        f << "{ \"h_list\": [0.05 ";
    }
    EXPECT_THROW(load_config(dir / "broken.json"), ConfigError);
}

// ---------------------------------------------------------------------------
// Tables and charts

TEST(ComparisonCsv, RoundTrip) {
    std::vector<ComparisonRow> rows(3);
    rows[0] = {48, -3, 0, 0.98012345678901234, 0.98012, 3.4567e-7, 1.25e-4, 1.24e-4, 0.0};
    rows[1] = {48, -2, 0, 0.98024, 0.98025, 1e-5, std::nan(""), std::nan(""), 0.0};
    rows[2] = {49, 7, 1, -0.5, -0.5, 0.0, 2.0, 2.0, 0.0};
    std::stringstream ss;
    write_comparison_csv(ss, rows);
    const auto back = read_comparison_csv(ss);
    ASSERT_EQ(back.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(back[i].k, rows[i].k);
        EXPECT_EQ(back[i].ell, rows[i].ell);
        EXPECT_EQ(back[i].component, rows[i].component);
        EXPECT_EQ(back[i].predicted, rows[i].predicted);
        EXPECT_EQ(back[i].measured, rows[i].measured);
        EXPECT_EQ(back[i].error, rows[i].error);
        EXPECT_EQ(std::isnan(back[i].spacing_measured), std::isnan(rows[i].spacing_measured));
        if (!std::isnan(rows[i].spacing_measured)) {
            EXPECT_EQ(back[i].spacing_measured, rows[i].spacing_measured);
        }
    }
    std::stringstream again;
    write_comparison_csv(again, back);
    ss.clear();
    ss.seekg(0);
    EXPECT_EQ(again.str(), ss.str());
}

TEST(ComparisonCsv, MalformedInputRejected) {
    std::stringstream no_header("1,2,3\n");
    EXPECT_THROW(read_comparison_csv(no_header), std::invalid_argument);
    std::stringstream short_row(std::string(kComparisonHeader) + "\n1,2,0,0.5\n");
    EXPECT_THROW(read_comparison_csv(short_row), std::invalid_argument);
    std::stringstream bad_number(std::string(kComparisonHeader) + "\n1,2,0,abc,1,1,,\n");
    EXPECT_THROW(read_comparison_csv(bad_number), std::invalid_argument);
    std::stringstream empty_required(std::string(kComparisonHeader) + "\n1,2,0,,1,1,,\n");
    EXPECT_THROW(read_comparison_csv(empty_required), std::invalid_argument);
}

TEST(SpectrumChart, EmptySpectrumHasAxesOnly) {
    const std::string svg = render_spectrum_svg(SpectrumChart{});
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    EXPECT_EQ(count_of(svg, "fill=\"none\" stroke=\"#000\""), 1);  // one axes frame
    EXPECT_EQ(count_of(svg, "stroke-width=\"1\"/>"), 1);           // the frame, no level ticks
    EXPECT_EQ(count_of(svg, "fill-opacity"), 0);
}

TEST(SpectrumChart, WindowsAndPredictionsDrawn) {
    SpectrumChart c;
    c.eigenvalues = {0.95, 0.951, 1.0, 1.001, 1.002};
    c.clusters = {{0.95, 0.951}, {1.0, 1.002}};
    c.windows = {{49, 0.9995, 1.0025, {1.0, 1.001, 1.002}, {1.00001, 1.00101}}};
    const std::string svg = render_spectrum_svg(c);
    EXPECT_EQ(count_of(svg, "fill=\"none\" stroke=\"#000\""), 2);
    EXPECT_EQ(count_of(svg, "stroke=\"#c00\""), 2);
    EXPECT_EQ(count_of(svg, "fill-opacity"), 3);
    EXPECT_NE(svg.find("cluster k = 49"), std::string::npos);
    EXPECT_EQ(svg, render_spectrum_svg(c));
}

TEST(ArtifactWriter, UnwritablePathRejected) {
    const fs::path dir = scratch_dir("unwritable");
    fs::create_directories(dir);
    { std::ofstream(dir / "file") << "x"; }
    EXPECT_THROW(ArtifactWriter(dir / "file" / "sub"), OutputError);
}

// ---------------------------------------------------------------------------
// Pipeline

TEST(Pipeline, HarmonicConfigSkipsPrediction) {
    RunConfig c = small_default("harmonic");
    c.model.field = FieldCoefficients{0, 0, 0};
    c.h_list = {0.1};
    const auto a = run_pipeline(c);
    EXPECT_TRUE(a.harmonic);
    ASSERT_NE(find_stage(a, "prediction"), nullptr);
    EXPECT_EQ(find_stage(a, "prediction")->status, "skipped");
    EXPECT_EQ(find_stage(a, "dynamics")->status, "skipped");
    ASSERT_NE(find_check(a, "harmonic_width_h0.1"), nullptr);
    EXPECT_TRUE(find_check(a, "harmonic_width_h0.1")->pass);
    EXPECT_TRUE(find_check(a, "incomplete_clusters_h0.1")->pass);
    EXPECT_TRUE(a.all_pass());
    EXPECT_FALSE(fs::exists(c.output_dir / "comparison_h0.1_F0.16.csv"));
    EXPECT_TRUE(fs::exists(c.output_dir / "spectrum_h0.1.svg"));
    for (const auto& cl : a.spectra.front().clusters.clusters) {
        EXPECT_EQ(static_cast<int>(cl.eigenvalues.size()), cl.k + 1);
        EXPECT_NEAR(cl.center, 0.1 * (cl.k + 1), 1e-12);
    }
}

TEST(Pipeline, DefaultConfigSummaryAndDeterminism) {
    const RunConfig c = small_default("default");
    const auto a = run_pipeline(c);
    for (const char* name : {"critical_values_closed_form", "spacing_deviation_h0.04_F0.16", "relative_error_h0.04_F0.16",
                             "count_scaling_F0.16", "width_constant_variation", "action_period_duality_F0.16",
                             "symbolic_residuals_nonzero"}) {
        const auto* chk = find_check(a, name);
        ASSERT_NE(chk, nullptr) << name;
        EXPECT_TRUE(chk->pass) << name << " value " << chk->value;
    }
    EXPECT_TRUE(a.all_pass());
    const auto summary = nlohmann::json::parse(slurp(c.output_dir / "summary.json"));
    EXPECT_TRUE(summary.at("all_pass").get<bool>());
    for (const auto& chk : summary.at("checks")) {
        std::stringstream names(chk.at("artifact").get<std::string>());
        std::string file;
        while (std::getline(names, file, ',')) EXPECT_TRUE(fs::exists(c.output_dir / file)) << file;
    }
    std::ifstream csv(c.output_dir / "comparison_h0.04_F0.16.csv");
    const auto rows = read_comparison_csv(csv);
    ASSERT_EQ(rows.size(), a.studies[1][0].report.rows.size());
    EXPECT_GT(rows.size(), 5u);

    const auto first = snapshot(c.output_dir);
    run_pipeline(c);
    const auto second = snapshot(c.output_dir);
    ASSERT_EQ(first.size(), second.size());
    for (const auto& [name, text] : first) EXPECT_EQ(second.at(name), text) << name;
}

TEST(Pipeline, FailingStageIsNamedAndArtifactsKept) {
    RunConfig c = small_default("failing");
    c.F0_list = {5.0};  // outside the range of the flow average
    try {
        run_pipeline(c);
        FAIL() << "expected StageError";
    } catch (const StageError& e) {
        EXPECT_EQ(e.stage(), "dynamics");
    }
    EXPECT_TRUE(fs::exists(c.output_dir / "symbols.json"));
    EXPECT_TRUE(fs::exists(c.output_dir / "critical_values.json"));
    const auto summary = nlohmann::json::parse(slurp(c.output_dir / "summary.json"));
    EXPECT_FALSE(summary.at("all_pass").get<bool>());
    EXPECT_EQ(summary.at("stages").back().at("stage"), "dynamics");
    EXPECT_EQ(summary.at("stages").back().at("status"), "failed");
}

TEST(Pipeline, FixedOffsetsReproduceFit) {
    RunConfig c = small_default("fixed");
    c.h_list = {0.04};
    c.fixed_offsets = std::make_pair(-1.0, 0.5);
    const auto a = run_pipeline(c);
    const auto& s = a.studies.front().front();
    EXPECT_FALSE(s.fit.has_value());
    EXPECT_EQ(s.report.unmatched_measured.size(), 0u);
    EXPECT_LE(s.report.max_relative_error, 0.15);
}
