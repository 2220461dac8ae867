// torus.hpp - level curves of the reduced Hamiltonian, torus actions and charts.
//
// A component of {q = F} on the sphere of radius E is traced with the reduced
// flow dX/dt = 2 grad q x X (adaptive Dormand-Prince, return detected on a
// transversal section and refined by bisection). The enclosed area is
// integrated with composite Gauss-Legendre on the accepted steps, using the
// 1-form
//
//     alpha_n = n . (X x dX) / (2 (E - n . X)),   d alpha_n = dK ^ dphi,
//
// which is regular away from the pole E n. Traversed along the flow, the q < F
// side lies to the left, so the integral is the dK dphi area A_sub of the disc
// bounded by the component on the q < F side (mod 2 pi E), and dA_sub/dF = T_red.

#pragma once

#include "semicluster/action_profile.hpp"
#include "semicluster/errors.hpp"
#include "semicluster/flow.hpp"
#include "semicluster/reduced.hpp"
#include "semicluster/symbol_io.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/roots.hpp>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

namespace semicluster {

struct LevelContour {
    Vec3 start;
    double period = 0.0;       ///< T_red
    double area = 0.0;         ///< A_sub, dK dphi area of the disc on the q < F side
    std::vector<Vec3> points;  ///< quadrature nodes along the contour
};

struct TraceOptions {
    double tol = 1e-12;
    std::size_t max_steps = 2'000'000;
    double close = 1e-6;  ///< return acceptance, relative to E
};

namespace detail {

using State3 = std::array<double, 3>;

struct ReducedField {
    const ReducedHamiltonian* red;
    void operator()(const State3& x, State3& dx, double /*t*/) const {
        const Vec3 v = red->flow(Vec3(x[0], x[1], x[2]));
        dx = {v[0], v[1], v[2]};
    }
};

inline Vec3 to_vec(const State3& s) { return {s[0], s[1], s[2]}; }

/// Gauss-Legendre nodes and weights on [0, 1].
inline const std::vector<std::pair<double, double>>& unit_gauss_nodes() {
    static const std::vector<std::pair<double, double>> nodes = [] {
        using GL = boost::math::quadrature::gauss<double, 10>;
        std::vector<std::pair<double, double>> n;
        const auto& x = GL::abscissa();
        const auto& w = GL::weights();
        for (std::size_t i = 0; i < x.size(); ++i) {
            n.emplace_back(0.5 + 0.5 * x[i], 0.5 * w[i]);
            if (x[i] != 0.0) n.emplace_back(0.5 - 0.5 * x[i], 0.5 * w[i]);
        }
        std::sort(n.begin(), n.end());
        return n;
    }();
    return nodes;
}

}  // namespace detail

/// Traces the component of {q = q(seed)} through seed over one period.
inline LevelContour trace_level_contour(const ReducedHamiltonian& red, const Vec3& seed, const TraceOptions& opt = {}) {
    const double E = red.E();
    const Vec3 v0 = red.flow(seed);
    if (v0.norm() == 0.0) throw ChartError("trace_level_contour: seed is a critical point");
    FlowOptions fo;
    fo.max_steps = opt.max_steps;
    fo.initial_step = 1e-3 * E / v0.norm();
    fo.min_step = 1e-15 * E / v0.norm();
    DenseFlow<detail::State3, detail::ReducedField> flow(detail::ReducedField{&red}, {seed[0], seed[1], seed[2]},
                                                         opt.tol * E, opt.tol, fo);
    auto section = [&](const Vec3& X) { return (X - seed).dot(v0); };

    struct Node {
        Vec3 X;
        double w;
    };
    std::vector<Node> nodes;
    auto add_nodes = [&](double a, double b) {
        for (const auto& [x, w] : detail::unit_gauss_nodes())
            nodes.push_back({detail::to_vec(flow.state(a + (b - a) * x)), w * (b - a)});
    };

    LevelContour c;
    c.start = seed;
    double g0 = 0.0;
    for (;;) {
        const double t1 = flow.advance();
        const double t0 = flow.previous_time();
        const double g1 = section(detail::to_vec(flow.current_state()));
        if (t0 > 0.0 && g0 < 0.0 && g1 >= 0.0) {
            double a = t0, b = t1;
            for (int it = 0; it < 200 && b - a > 1e-15 * b; ++it) {
                const double m = 0.5 * (a + b);
                if (section(detail::to_vec(flow.state(m))) < 0.0) a = m;
                else b = m;
            }
            const double T = 0.5 * (a + b);
            if ((detail::to_vec(flow.state(T)) - seed).norm() < opt.close * E) {
                add_nodes(t0, T);
                c.period = T;
                break;
            }
        }
        add_nodes(t0, t1);
        g0 = g1;
    }

    // Pole for the area form: the candidate farthest from the contour.
    Vec3 centroid = Vec3::Zero();
    for (const auto& n : nodes) centroid += n.X;
    std::vector<Vec3> candidates{Vec3::UnitX(), -Vec3::UnitX(), Vec3::UnitY(), -Vec3::UnitY(), Vec3::UnitZ(),
                                 -Vec3::UnitZ()};
    if (centroid.norm() > 1e-9 * E * static_cast<double>(nodes.size())) candidates.push_back(-centroid.normalized());
    Vec3 pole = candidates.front();
    double best = -1.0;
    for (const auto& cand : candidates) {
        double dmin = std::numeric_limits<double>::infinity();
        for (const auto& n : nodes) dmin = std::min(dmin, (n.X - E * cand).norm());
        if (dmin > best) {
            best = dmin;
            pole = cand;
        }
    }
    double A = 0.0;
    for (const auto& n : nodes) {
        const Vec3 V = red.flow(n.X);
        A += n.w * pole.dot(n.X.cross(V)) / (2.0 * (E - pole.dot(n.X)));
    }
    c.area = A >= 0.0 ? A : A + 2.0 * M_PI * E;
    c.points.reserve(nodes.size());
    for (const auto& n : nodes) c.points.push_back(n.X);
    return c;
}

/// Moves a sphere point along the normalized gradient of q until q = F.
inline Vec3 transport_to_level(const ReducedHamiltonian& red, Vec3 X, double F, int substeps = 64) {
    const double E = red.E();
    X *= E / X.norm();
    auto dir = [&](const Vec3& P) {
        const Vec3 g = red.gradient(P);
        const Vec3 gt = g - g.dot(P) / (E * E) * P;
        const double n2 = gt.squaredNorm();
        if (n2 == 0.0) throw ChartError("transport_to_level: passed through a critical point");
        return Vec3(gt / n2);
    };
    const double ds = (F - red.value(X)) / substeps;
    for (int i = 0; i < substeps; ++i) {
        const Vec3 k1 = dir(X);
        const Vec3 k2 = dir(X + 0.5 * ds * k1);
        const Vec3 k3 = dir(X + 0.5 * ds * k2);
        const Vec3 k4 = dir(X + ds * k3);
        X += ds / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        X *= E / X.norm();
    }
    const double scale = std::max(1.0, std::abs(F));
    for (int i = 0; i < 20 && std::abs(red.value(X) - F) > 1e-15 * scale; ++i) {
        X += (F - red.value(X)) * dir(X);
        X *= E / X.norm();
    }
    return X;
}

/// Guarded regular interval (lo, hi) of values containing F, or ChartError.
/// The guard band is 1e-3 of the spread of critical values.
inline std::pair<double, double> regular_interval(const std::vector<double>& cvals, double F, double guard_rel = 1e-3) {
    if (cvals.size() < 2) throw ChartError("regular_interval: fewer than two critical values");
    const double guard = guard_rel * (cvals.back() - cvals.front());
    for (std::size_t i = 0; i + 1 < cvals.size(); ++i) {
        if (F > cvals[i] && F < cvals[i + 1]) {
            const double lo = cvals[i] + guard, hi = cvals[i + 1] - guard;
            if (F <= lo || F >= hi) throw ChartError("regular_interval: value within the guard band of a critical value");
            return {lo, hi};
        }
    }
    throw ChartError("regular_interval: value is critical or outside the range of q");
}

namespace detail {

/// Sign changes of q - F along the minor great-circle arc from A to B.
inline std::vector<Vec3> arc_crossings(const ReducedHamiltonian& red, const Vec3& A, const Vec3& B, double F,
                                       int samples = 256) {
    const double E = red.E();
    Vec3 a = A.normalized(), b = B.normalized();
    Vec3 axis = a.cross(b);
    double angle = std::atan2(axis.norm(), a.dot(b));
    if (axis.norm() < 1e-12) {  // antipodal or equal: any great circle through a
        axis = tangent_basis(a).first.cross(a);
        angle = M_PI;
    }
    axis.normalize();
    const Vec3 perp = axis.cross(a);
    auto at = [&](double s) { return Vec3(E * (std::cos(s) * a + std::sin(s) * perp)); };
    std::vector<Vec3> out;
    double s0 = 0.0, f0 = red.value(at(0.0)) - F;
    for (int i = 1; i <= samples; ++i) {
        const double s1 = angle * i / samples;
        const double f1 = red.value(at(s1)) - F;
        if ((f0 < 0.0) != (f1 < 0.0)) {
            double lo = s0, hi = s1, flo = f0;
            for (int it = 0; it < 100; ++it) {
                const double m = 0.5 * (lo + hi);
                const double fm = red.value(at(m)) - F;
                if ((fm < 0.0) == (flo < 0.0)) {
                    lo = m;
                    flo = fm;
                } else {
                    hi = m;
                }
            }
            out.push_back(at(0.5 * (lo + hi)));
        }
        s0 = s1;
        f0 = f1;
    }
    return out;
}

inline bool on_contour(const LevelContour& c, const Vec3& X) {
    double maxchord = 0.0;
    for (std::size_t i = 1; i < c.points.size(); ++i) maxchord = std::max(maxchord, (c.points[i] - c.points[i - 1]).norm());
    double dmin = std::numeric_limits<double>::infinity();
    for (const auto& p : c.points) dmin = std::min(dmin, (p - X).norm());
    return dmin < 2.0 * maxchord;
}

}  // namespace detail

/// All components of {q = F}. Every component separates a maximum above F
/// from a minimum below F, so seeds come from great-circle arcs between such
/// pairs, plus meridians for degenerate critical sets.
inline std::vector<LevelContour> level_components(const ReducedHamiltonian& red, double F,
                                                  const std::vector<CriticalPoint>& cps, const TraceOptions& opt = {}) {
    std::vector<Vec3> seeds;
    std::vector<Vec3> above, below;
    for (const auto& cp : cps) {
        if (cp.value > F) above.push_back(cp.X);
        if (cp.value < F) below.push_back(cp.X);
    }
    for (const auto& a : above)
        for (const auto& b : below)
            for (const auto& s : detail::arc_crossings(red, a, b, F)) seeds.push_back(s);
    const double E = red.E();
    for (int m = 0; m < 32; ++m) {
        const double phi = 2.0 * M_PI * m / 32;
        const Vec3 eq(E * std::cos(phi), E * std::sin(phi), 0.0);
        for (const auto& s : detail::arc_crossings(red, Vec3::UnitZ() * E, eq, F, 128)) seeds.push_back(s);
        for (const auto& s : detail::arc_crossings(red, -Vec3::UnitZ() * E, eq, F, 128)) seeds.push_back(s);
    }
    std::vector<LevelContour> comps;
    for (const auto& s : seeds) {
        bool known = false;
        for (const auto& c : comps)
            if (detail::on_contour(c, s)) known = true;
        if (!known) comps.push_back(trace_level_contour(red, s, opt));
    }
    std::sort(comps.begin(), comps.end(), [](const LevelContour& a, const LevelContour& b) {
        if (std::abs(a.area - b.area) > 1e-9 * (a.area + b.area)) return a.area < b.area;
        return a.start[2] < b.start[2];
    });
    return comps;
}

struct TorusActions {
    double xi2 = 0.0;
    double T_red = 0.0;
    int component_count = 0;
};

/// Normalized second action on one component: xi2 = (A_sub(F) - A_sub(F0)) / 2pi, where
/// the component at F is the gradient-flow image of component `component` at F0.
inline TorusActions torus_actions(const ReducedHamiltonian& red, double F, double base_F0, int component = 0,
                                  const TraceOptions& opt = {}) {
    const auto cps = critical_points(red);
    std::vector<double> cv;
    for (const auto& cp : cps)
        if (cv.empty() || cp.value - cv.back() > 1e-9 * std::abs(cps.back().value - cps.front().value))
            cv.push_back(cp.value);
    const auto iv0 = regular_interval(cv, base_F0);
    const auto iv = regular_interval(cv, F);
    if (iv != iv0) throw ChartError("torus_actions: F and F0 lie in different regular intervals");
    const auto base = level_components(red, base_F0, cps, opt);
    if (component < 0 || component >= static_cast<int>(base.size()))
        throw ChartError("torus_actions: component index out of range");
    const auto& c0 = base[static_cast<std::size_t>(component)];
    const auto c = trace_level_contour(red, transport_to_level(red, c0.start, F), opt);
    TorusActions r;
    r.xi2 = (c.area - c0.area) / (2.0 * M_PI);
    r.T_red = c.period;
    r.component_count = static_cast<int>(level_components(red, F, cps, opt).size());
    return r;
}

// ---------------------------------------------------------------------------
// Chart families over (E, F)

struct TorusChart {
    double E = 0.0, F = 0.0;
    double xi1 = 0.0, xi2 = 0.0;
    double T_E = 0.0, T_red = 0.0;
    double S1 = 0.0, S2 = 0.0;
    int alpha1 = 0, alpha2 = 0;
    int component_count = 0;
};

/// Action-angle chart around the torus Lambda_{E0, F0} on a chosen component of
/// the level curve. xi1 = g(E) - g(E0), xi2 = (A_sub(E, F) - A_sub(E0, F0)) / 2pi.
class ChartFamily {
public:
    template <class C>
    ChartFamily(const PolySymbol<C>& qavg, ActionProfile profile, double E0, double F0, int component = 0,
                std::array<int, 2> maslov = {0, 0}, TraceOptions opt = {})
        : qavg_(qavg.template cast<ComplexDouble>()),
          profile_(std::move(profile)),
          E0_(E0),
          F0_(F0),
          component_(component),
          maslov_(maslov),
          opt_(opt) {
        const auto& d = data(E0);
        interval_index_ = interval_index(d.cvals, F0);
        regular_interval(d.cvals, F0);  // guard-band check
        const auto comps = level_components(d.red, F0, d.cps, opt_);
        if (component < 0 || component >= static_cast<int>(comps.size()))
            throw ChartError("ChartFamily: component index out of range");
        base_ = comps[static_cast<std::size_t>(component)];
        component_count0_ = static_cast<int>(comps.size());
    }

    double E0() const { return E0_; }
    double F0() const { return F0_; }
    int component() const { return component_; }
    int base_component_count() const { return component_count0_; }
    const ActionProfile& profile() const { return profile_; }
    const FloatSymbol& average() const { return qavg_; }
    std::array<int, 2> maslov() const { return maslov_; }

    /// Base-cycle actions: S1 = 2pi g(E0), S2 = A_sub(E0, F0).
    double S1() const { return 2.0 * M_PI * profile_.g(E0_); }
    double S2() const { return base_.area; }

    /// Guarded regular interval of F at energy E that continues the base interval.
    std::pair<double, double> regular_range(double E) const {
        const auto& d = data(E);
        if (d.cvals.size() != cvals0().size())
            throw ChartError("ChartFamily: critical-value structure changes between E0 and E");
        const double guard = 1e-3 * (d.cvals.back() - d.cvals.front());
        return {d.cvals[interval_index_] + guard, d.cvals[interval_index_ + 1] - guard};
    }

    /// Contour of the charted component at (E, F).
    LevelContour contour(double E, double F) const {
        const auto [lo, hi] = regular_range(E);
        if (!(F > lo && F < hi)) throw ChartError("ChartFamily: F outside the charted regular interval");
        const auto& d = data(E);
        const Vec3 seed = transport_to_level(d.red, base_.start * (E / E0_), F);
        return trace_level_contour(d.red, seed, opt_);
    }

    double area(double E, double F) const { return contour(E, F).area; }

    TorusChart chart(double E, double F) const {
        const auto c = contour(E, F);
        const auto& d = data(E);
        TorusChart t;
        t.E = E;
        t.F = F;
        t.xi1 = profile_.g(E) - profile_.g(E0_);
        t.xi2 = (c.area - base_.area) / (2.0 * M_PI);
        t.T_E = profile_.period(E);
        t.T_red = c.period;
        t.S1 = S1();
        t.S2 = S2();
        t.alpha1 = maslov_[0];
        t.alpha2 = maslov_[1];
        t.component_count = static_cast<int>(level_components(d.red, F, d.cps, opt_).size());
        return t;
    }

    /// A_sub over the guarded interval at E.
    std::pair<double, double> area_range(double E) const {
        const auto [lo, hi] = regular_range(E);
        return {area(E, lo * (1 - 1e-12) + hi * 1e-12), area(E, hi * (1 - 1e-12) + lo * 1e-12)};
    }

    /// F with A_sub(E, F) = A; monotone since dA_sub/dF = T_red > 0.
    double level_for_area(double E, double A) const {
        const auto [lo, hi] = regular_range(E);
        const double a = lo + 1e-12 * (hi - lo), b = hi - 1e-12 * (hi - lo);
        const double fa = area(E, a) - A, fb = area(E, b) - A;
        if (fa > 0.0 || fb < 0.0) throw ChartError("ChartFamily: action outside the charted region");
        auto f = [&](double F) { return area(E, F) - A; };
        std::uintmax_t iters = 100;
        const auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(48),
                                                         iters);
        return 0.5 * (r.first + r.second);
    }

    /// (E, F) from normalized actions.
    std::pair<double, double> invert(double xi1, double xi2) const {
        double E = 0.0;
        try {
            E = profile_.f(xi1 + profile_.g(E0_));
        } catch (const std::out_of_range&) {
            throw ChartError("ChartFamily::invert: xi1 outside the action profile");
        }
        return {E, level_for_area(E, 2.0 * M_PI * xi2 + base_.area)};
    }

    const ReducedHamiltonian& reduced(double E) const { return data(E).red; }
    const std::vector<double>& critical_values_at(double E) const { return data(E).cvals; }

private:
    struct EnergyData {
        ReducedHamiltonian red;
        std::vector<CriticalPoint> cps;
        std::vector<double> cvals;
    };

    const EnergyData& data(double E) const {
        std::lock_guard<std::mutex> lock(*mutex_);
        auto it = cache_->find(E);
        if (it == cache_->end()) {
            ReducedHamiltonian red(qavg_, E);
            auto cps = critical_points(red);
            std::vector<double> cv;
            const double tol = 1e-9 * value_scale(red);
            for (const auto& p : cps)
                if (cv.empty() || p.value - cv.back() > tol) cv.push_back(p.value);
            it = cache_->emplace(E, std::make_unique<EnergyData>(EnergyData{std::move(red), std::move(cps), std::move(cv)}))
                     .first;
        }
        return *it->second;
    }

    const std::vector<double>& cvals0() const { return data(E0_).cvals; }

    static std::size_t interval_index(const std::vector<double>& cv, double F) {
        for (std::size_t i = 0; i + 1 < cv.size(); ++i)
            if (F > cv[i] && F < cv[i + 1]) return i;
        throw ChartError("ChartFamily: F0 is not a regular value in the range of q");
    }

    FloatSymbol qavg_;
    ActionProfile profile_;
    double E0_, F0_;
    int component_;
    std::array<int, 2> maslov_;
    TraceOptions opt_;
    std::size_t interval_index_ = 0;
    LevelContour base_;
    int component_count0_ = 0;
    std::shared_ptr<std::mutex> mutex_ = std::make_shared<std::mutex>();
    std::shared_ptr<std::map<double, std::unique_ptr<EnergyData>>> cache_ =
        std::make_shared<std::map<double, std::unique_ptr<EnergyData>>>();
};

/// (E, F) from normalized actions; see ChartFamily::invert.
inline std::pair<double, double> invert_actions(const ChartFamily& family, double xi1, double xi2) {
    return family.invert(xi1, xi2);
}

// ---------------------------------------------------------------------------
// Action tables and the chart cache

struct ActionRecord {
    double E, F, xi1, xi2, T_red;
    int component_count;
};

inline void to_json(nlohmann::json& j, const ActionRecord& r) {
    j = {{"E", r.E}, {"F", r.F}, {"xi1", r.xi1}, {"xi2", r.xi2}, {"T_red", r.T_red}, {"component_count", r.component_count}};
}

inline void from_json(const nlohmann::json& j, ActionRecord& r) {
    r.E = j.at("E").get<double>();
    r.F = j.at("F").get<double>();
    r.xi1 = j.at("xi1").get<double>();
    r.xi2 = j.at("xi2").get<double>();
    r.T_red = j.at("T_red").get<double>();
    r.component_count = j.at("component_count").get<int>();
}

/// Charts every (E, F) pair inside the regular region; others are skipped.
inline std::vector<ActionRecord> action_table(const ChartFamily& family, const std::vector<double>& Es,
                                              const std::vector<double>& Fs) {
    std::vector<ActionRecord> out;
    for (double E : Es) {
        for (double F : Fs) {
            try {
                const auto t = family.chart(E, F);
                out.push_back({t.E, t.F, t.xi1, t.xi2, t.T_red, t.component_count});
            } catch (const ChartError&) {
            }
        }
    }
    return out;
}

inline constexpr int kChartCacheVersion = 1;

inline void save_chart_cache(const std::filesystem::path& path, const std::string& model_hash,
                             const std::vector<ActionRecord>& table) {
    nlohmann::json j;
    j["version"] = kChartCacheVersion;
    j["model_hash"] = model_hash;
    j["records"] = table;
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_chart_cache: cannot write " + path.string());
    f << j.dump(2) << '\n';
}

/// Cached table, or nullopt when the file is missing, stale or of another version.
inline std::optional<std::vector<ActionRecord>> load_chart_cache(const std::filesystem::path& path,
                                                                 const std::string& model_hash) {
    std::ifstream f(path);
    if (!f) return std::nullopt;
    try {
        const auto j = nlohmann::json::parse(f);
        if (j.at("version").get<int>() != kChartCacheVersion) return std::nullopt;
        if (j.at("model_hash").get<std::string>() != model_hash) return std::nullopt;
        return j.at("records").get<std::vector<ActionRecord>>();
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    }
}

}  // namespace semicluster
