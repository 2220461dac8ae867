// report.hpp - comparison tables, run summaries, and spectrum charts.
//
// Comparison CSV schema, one matched (predicted, measured) pair per row:
//
//     k,ell,component,predicted,measured,error,spacing_measured,spacing_predicted
//
// k, ell, component are integers; the rest are decimals printed with 17
// significant digits. An empty spacing field means the pair has no matched
// successor in the same cluster.

#pragma once

#include "semicluster/spectral.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace semicluster {

class OutputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kComparisonHeader =
    "k,ell,component,predicted,measured,error,spacing_measured,spacing_predicted";

inline std::string format_number(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_comparison_csv(std::ostream& os, const std::vector<ComparisonRow>& rows) {
    os << kComparisonHeader << '\n';
    for (const auto& r : rows)
        os << r.k << ',' << r.ell << ',' << r.component << ',' << format_number(r.predicted) << ','
           << format_number(r.measured) << ',' << format_number(r.error) << ',' << format_number(r.spacing_measured)
           << ',' << format_number(r.spacing_predicted) << '\n';
}

/// Parses the schema above; local_spacing is not part of it and comes back as NaN.
inline std::vector<ComparisonRow> read_comparison_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kComparisonHeader)
        throw std::invalid_argument("read_comparison_csv: missing or unexpected header");
    std::vector<ComparisonRow> rows;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        if (f.size() != 8) throw std::invalid_argument("read_comparison_csv: line " + std::to_string(lineno) + ": expected 8 fields");
        auto num = [&](const std::string& s, bool optional) {
            if (s.empty()) {
                if (optional) return std::nan("");
                throw std::invalid_argument("read_comparison_csv: line " + std::to_string(lineno) + ": empty field");
            }
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument("read_comparison_csv: line " + std::to_string(lineno) + ": bad number");
            return v;
        };
        auto integer = [&](const std::string& s) {
            std::size_t used = 0;
            const int v = std::stoi(s, &used);
            if (used != s.size()) throw std::invalid_argument("read_comparison_csv: line " + std::to_string(lineno) + ": bad integer");
            return v;
        };
        ComparisonRow r;
        try {
            r.k = integer(f[0]);
            r.ell = integer(f[1]);
            r.component = integer(f[2]);
            r.predicted = num(f[3], false);
            r.measured = num(f[4], false);
            r.error = num(f[5], false);
            r.spacing_measured = num(f[6], true);
            r.spacing_predicted = num(f[7], true);
        } catch (const std::out_of_range&) {
            throw std::invalid_argument("read_comparison_csv: line " + std::to_string(lineno) + ": value out of range");
        }
        r.local_spacing = std::nan("");
        rows.push_back(r);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Summary

struct CheckResult {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    std::string relation = "<=";  // value relation threshold must hold
    bool pass = false;
    std::string artifact;         // file holding the data behind value
};

inline CheckResult make_check(std::string name, double value, std::string relation, double threshold, std::string artifact) {
    CheckResult c{std::move(name), value, threshold, std::move(relation), false, std::move(artifact)};
    if (c.relation == "<=") c.pass = value <= threshold;
    else if (c.relation == "<") c.pass = value < threshold;
    else if (c.relation == ">=") c.pass = value >= threshold;
    else if (c.relation == "==") c.pass = value == threshold;
    else throw std::invalid_argument("make_check: unknown relation " + c.relation);
    if (std::isnan(value)) c.pass = false;
    return c;
}

inline void to_json(nlohmann::json& j, const CheckResult& c) {
    j = {{"name", c.name}, {"value", std::isfinite(c.value) ? nlohmann::json(c.value) : nlohmann::json(nullptr)},
         {"relation", c.relation}, {"threshold", c.threshold}, {"pass", c.pass}, {"artifact", c.artifact}};
}

struct StageRecord {
    std::string name;
    std::string status;  // "ok", "skipped", "failed"
    std::string note;
};

inline void to_json(nlohmann::json& j, const StageRecord& s) {
    j = {{"stage", s.name}, {"status", s.status}, {"note", s.note}};
}

// ---------------------------------------------------------------------------
// Output directory with serialized writes

class ArtifactWriter {
public:
    explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec || !std::filesystem::is_directory(dir_))
            throw OutputError("cannot create output directory " + dir_.string());
    }

    const std::filesystem::path& dir() const { return dir_; }

    void write_text(const std::string& name, const std::string& text) {
        std::lock_guard<std::mutex> lock(mu_);
        std::ofstream f(dir_ / name, std::ios::binary | std::ios::trunc);
        if (!f) throw OutputError("cannot write " + (dir_ / name).string());
        f << text;
        if (!f) throw OutputError("write failed for " + (dir_ / name).string());
        if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
    }

    void write_json(const std::string& name, const nlohmann::json& j) { write_text(name, j.dump(2) + "\n"); }

    std::vector<std::string> files() const {
        std::lock_guard<std::mutex> lock(mu_);
        return files_;
    }

private:
    std::filesystem::path dir_;
    mutable std::mutex mu_;
    std::vector<std::string> files_;
};

// ---------------------------------------------------------------------------
// Spectrum chart

struct ChartWindow {
    int k = 0;
    double lo = 0.0, hi = 0.0;
    std::vector<double> measured;
    std::vector<double> predicted;
};

struct SpectrumChart {
    std::string title;
    std::vector<double> eigenvalues;                   // top panel
    std::vector<std::pair<double, double>> clusters;   // shaded cluster extents
    std::vector<ChartWindow> windows;                  // marked in the top panel, zoomed below
};

namespace detail {

inline std::string fmt(double v, int prec = 2) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

inline std::string tick_label(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Panel {
    double x0, y0, w, h, lo, hi;
    double x(double v) const { return x0 + w * (v - lo) / (hi - lo); }
};

inline void axes(std::ostream& os, const Panel& p, const std::string& label) {
    os << "<rect x=\"" << fmt(p.x0) << "\" y=\"" << fmt(p.y0) << "\" width=\"" << fmt(p.w) << "\" height=\"" << fmt(p.h)
       << "\" fill=\"none\" stroke=\"#000\" stroke-width=\"1\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = p.lo + (p.hi - p.lo) * i / 4.0;
        const double x = p.x(v);
        os << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(p.y0 + p.h) << "\" x2=\"" << fmt(x) << "\" y2=\""
           << fmt(p.y0 + p.h + 5) << "\" stroke=\"#000\"/>\n";
        os << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(p.y0 + p.h + 18)
           << "\" font-size=\"11\" text-anchor=\"middle\">" << tick_label(v) << "</text>\n";
    }
    os << "<text x=\"" << fmt(p.x0) << "\" y=\"" << fmt(p.y0 - 6) << "\" font-size=\"12\">" << xml_escape(label)
       << "</text>\n";
}

inline void ticks(std::ostream& os, const Panel& p, const std::vector<double>& vals, double ya, double yb,
                  const char* color) {
    for (double v : vals) {
        if (v < p.lo || v > p.hi) continue;
        const double x = p.x(v);
        os << "<line x1=\"" << fmt(x, 3) << "\" y1=\"" << fmt(ya) << "\" x2=\"" << fmt(x, 3) << "\" y2=\"" << fmt(yb)
           << "\" stroke=\"" << color << "\" stroke-width=\"1\"/>\n";
    }
}

inline void band(std::ostream& os, const Panel& p, double lo, double hi, const char* color, double opacity) {
    const double a = std::max(p.x(lo), p.x0), b = std::min(p.x(hi), p.x0 + p.w);
    if (!(b > a)) return;
    os << "<rect x=\"" << fmt(a, 3) << "\" y=\"" << fmt(p.y0) << "\" width=\"" << fmt(std::max(b - a, 0.5), 3)
       << "\" height=\"" << fmt(p.h) << "\" fill=\"" << color << "\" fill-opacity=\"" << fmt(opacity) << "\"/>\n";
}

}  // namespace detail

/// Self-contained SVG: the spectrum with cluster extents (top), and one zoomed
/// panel per subcluster window with measured (black, lower half) and predicted
/// (red, upper half) levels.
inline std::string render_spectrum_svg(const SpectrumChart& chart) {
    const double width = 900, margin = 50, top_h = 120, win_h = 80, gap = 50;
    const double height = margin + top_h + gap + chart.windows.size() * (win_h + gap) + 10;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::fmt(width, 0) << "\" height=\""
       << detail::fmt(height, 0) << "\" viewBox=\"0 0 " << detail::fmt(width, 0) << ' ' << detail::fmt(height, 0)
       << "\" font-family=\"sans-serif\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n";

    double lo = 0.0, hi = 1.0;
    if (!chart.eigenvalues.empty()) {
        lo = *std::min_element(chart.eigenvalues.begin(), chart.eigenvalues.end());
        hi = *std::max_element(chart.eigenvalues.begin(), chart.eigenvalues.end());
        const double pad = hi > lo ? 0.03 * (hi - lo) : 0.5;
        lo -= pad;
        hi += pad;
    }
    const detail::Panel top{margin, margin, width - 2 * margin, top_h, lo, hi};
    for (const auto& [a, b] : chart.clusters) detail::band(os, top, a, b, "#4a7bd0", 0.18);
    for (const auto& w : chart.windows) detail::band(os, top, w.lo, w.hi, "#d04a4a", 0.35);
    detail::ticks(os, top, chart.eigenvalues, top.y0 + 10, top.y0 + top.h - 10, "#000");
    detail::axes(os, top, chart.title.empty() ? "eigenvalues" : chart.title);

    double y = margin + top_h + gap;
    for (const auto& w : chart.windows) {
        const detail::Panel p{margin, y, width - 2 * margin, win_h, w.lo, w.hi > w.lo ? w.hi : w.lo + 1.0};
        detail::ticks(os, p, w.measured, p.y0 + p.h / 2 + 4, p.y0 + p.h - 6, "#000");
        detail::ticks(os, p, w.predicted, p.y0 + 6, p.y0 + p.h / 2 - 4, "#c00");
        detail::axes(os, p, "cluster k = " + std::to_string(w.k) + ": measured (black), predicted (red)");
        y += win_h + gap;
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace semicluster
