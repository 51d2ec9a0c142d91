#include "schwartz/verify.hpp"

#include "schwartz/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace schwartz {

namespace {

using Span = std::span<const double>;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

Check at_most(int id, std::string name, double value, double limit, std::string detail = {}) {
    return {id, std::move(name), value <= limit, value, limit, std::move(detail)};
}

Check flag(int id, std::string name, bool ok, std::string detail = {}) {
    return {id, std::move(name), ok, ok ? 1.0 : 0.0, 1.0, std::move(detail)};
}

double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

ExperimentConfig preset_config(const std::string& name) { return find_preset(name).defaults(); }

// The 1D Gaussian Burgers run is shared by the blow-up-time checks.
const ExperimentResult& burgers_gauss_run() {
    static const ExperimentResult r = run_experiment(preset_config("burgers1d-gauss"), false);
    return r;
}

double characteristics_blowup_time() { return std::sqrt(std::numbers::e / 2.0); }

// ---------------------------------------------------------------- 1: propagators

void criterion1(std::vector<Check>& out) {
    {
        const Grid g = make_grid(1, 16.0, 512, false);
        const Field f0 = sample_scalar([](Span x) { return std::exp(-x[0] * x[0]); }, g);
        const double t = 0.25;
        const Field f = heat_step(f0, Viscosity::isotropic(1, 1.0), t);
        const double s = 1.0 + 4.0 * t;
        const Field exact =
            sample_scalar([s](Span x) { return std::exp(-x[0] * x[0] / s) / std::sqrt(s); }, g);
        out.push_back(at_most(1, "heat kernel: |peak - 1/sqrt(1+4 nu t)|", std::abs(f.max_abs() - 1.0 / std::sqrt(s)),
                              1e-8, "peak " + fmt(f.max_abs())));
        out.push_back(at_most(1, "heat kernel: max profile error", max_abs_difference(f, exact), 1e-8));
    }
    {
        const Grid g = make_grid(2, 10.0, 64, false);
        const Field f0 = sample_field(
            [](Span x, std::span<double> o) {
                o[0] = std::exp(-x[0] * x[0] - 0.5 * x[1] * x[1]);
                o[1] = x[0] * std::exp(-x[0] * x[0] - x[1] * x[1]);
            },
            g, 2);
        const Viscosity nu{{0.3, 0.7, 0.0}};
        const Field a = heat_step(heat_step(f0, nu, 0.1), nu, 0.15);
        const Field b = heat_step(f0, nu, 0.25);
        out.push_back(at_most(1, "heat semigroup", max_abs_difference(a, b), 1e-12));
        auto h = [](Span x, double, std::span<double> o) {
            o[0] = 0.3 * std::cos(x[0]);
            o[1] = 0.5;
            o[2] = -0.2;
            o[3] = 0.1 * x[1] / (1.0 + x[1] * x[1]);
        };
        const CoefficientSet c = coefficients_from_functions(g, 2, {}, h, {});
        const Field m1 = multiply_step(multiply_step(f0, c, 0.0, 0.1), c, 0.1, 0.15);
        const Field m2 = multiply_step(f0, c, 0.0, 0.25);
        out.push_back(at_most(1, "multiplication semigroup", max_abs_difference(m1, m2), 1e-12));
    }
    {
        const Grid g = make_grid(2, 10.0, 128, false);
        const Field f0 = sample_scalar(
            [](Span x) { return (1.0 + 0.3 * x[0]) * std::exp(-x[0] * x[0] - 2.0 * x[1] * x[1]); }, g);
        const double a[2] = {0.4, -0.3};
        const double t = 0.5;
        const Field f = scaling_step(f0, Span(a, 2), t, InterpolationOptions{8, 10});
        double worst = 0.0;
        for (const auto& p : all_pairs(2, 2, 2)) {
            const double law = std::exp(((p.beta[0] - p.alpha[0]) * a[0] +
                                         (p.beta[1] - p.alpha[1]) * a[1]) * t);
            const double lhs = weighted_seminorm_refined(f, p);
            const double rhs = law * weighted_seminorm_refined(f0, p);
            worst = std::max(worst, rel_err(lhs, rhs));
        }
        out.push_back(at_most(1, "scaling law e^{<beta-alpha,a>t}, |alpha|,|beta| <= 2", worst, 1e-6));
    }
}

// ---------------------------------------------------------------- 2: heat + source splitting

void criterion2(std::vector<Check>& out) {
    const Grid g = make_grid(1, 10.0, 256, false);
    const Field f0 = sample_scalar([](Span x) { return std::exp(-x[0] * x[0]); }, g);
    const CoefficientSet c = coefficients_from_functions(
        g, 1, {}, {}, [](Span x, double, std::span<double> o) {
            o[0] = std::exp(-x[0] * x[0]);
        });
    const Viscosity nu = Viscosity::isotropic(1, 0.01);
    const double T = 0.5;
    const Field exact = heat_source_exact(f0, c, nu, T, 4096);
    std::vector<double> gaps;
    std::string detail;
    for (int N : {64, 128, 256, 512}) {
        const auto tr = solve_linear(f0, c, nu, make_decomposition(T, N), {});
        gaps.push_back(max_abs_difference(tr.final_state(), exact));
        detail += "N=" + std::to_string(N) + ": " + fmt(gaps.back()) + "  ";
    }
    double worst = 0.0;
    for (std::size_t i = 1; i < gaps.size(); ++i)
        worst = std::max(worst, std::abs(gaps[i - 1] / gaps[i] - 2.0));
    out.push_back(at_most(2, "gap halves per step doubling: max |ratio - 2|", worst, 0.25, detail));
    out.push_back(at_most(2, "gap at 512 steps on 256 points", gaps.back(), 1e-5));
}

// ---------------------------------------------------------------- 3: domination

void domination(std::vector<Check>& out, ExperimentConfig cfg, const std::string& what) {
    const auto r = run_experiment(cfg, false);
    const auto& b = r.summary["bounds"];
    if (b.contains("error")) {
        out.push_back(flag(3, what + ": bounds available", false, b["error"].get<std::string>()));
        return;
    }
    out.push_back(flag(3, what + ": converged, finite traces",
                       r.exit_code == 0 && r.summary["all_traces_finite"].get<bool>(),
                       "exit " + std::to_string(r.exit_code)));
    out.push_back(at_most(3, what + ": max trace/bound, |alpha|,|beta| <= 2",
                          r.comparison.worst_ratio, 1.01));
}

void criterion3(std::vector<Check>& out) {
    domination(out, preset_config("linear-demo"), "linear-demo");
    for (std::uint64_t seed : {1u, 2u}) {
        auto cfg = preset_config("random-linear");
        cfg.seed = seed;
        domination(out, cfg, "random problem seed " + std::to_string(seed));
    }
}

// ---------------------------------------------------------------- 4: Burgers

void criterion4(std::vector<Check>& out) {
    const auto& r = burgers_gauss_run();
    const double Tstar = characteristics_blowup_time();
    const auto& b = r.summary["blowup"];
    if (b["T2_estimate"].is_number()) {
        const double est = b["T2_estimate"].get<double>();
        out.push_back(at_most(4, "blow-up time estimate vs sqrt(e/2)", rel_err(est, Tstar), 0.05,
                              "estimate " + fmt(est)));
    } else {
        out.push_back(flag(4, "blow-up time estimate vs sqrt(e/2)", false, "no blow-up detected"));
    }

    const auto& tr = r.trajectory.seminorms;
    const Field u0 = make_problem(preset_config("burgers1d-gauss")).f0;
    const auto law = burgers_blowup(u0);
    const MultiIndexPair ux{{0, 0, 0}, {1, 0, 0}};
    const auto it = std::find(tr.pairs.begin(), tr.pairs.end(), ux);
    double worst = 0.0;
    std::size_t used = 0;
    if (it != tr.pairs.end()) {
        const auto& v = tr.values[static_cast<std::size_t>(it - tr.pairs.begin())];
        for (std::size_t i = 0; i < tr.times.size(); ++i)
            if (tr.times[i] <= 0.9 * law.T2) {
                worst = std::max(worst, rel_err(v[i], law.sup_derivative(tr.times[i])));
                ++used;
            }
    }
    out.push_back(at_most(4, "sup |u_x| vs characteristics law, t <= 0.9 T2 (4096 points)",
                          used ? worst : INFINITY, 0.02, std::to_string(used) + " nodes"));

    // Compactly supported data: the support endpoints are fixed points of the characteristics.
    const double R = 2.0;
    const Grid g = make_grid(1, 12.0, 4096, false);
    const Field c0 = sample_scalar(
        [R](Span x) {
            const double s = x[0] / R;
            return std::abs(s) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s * s)) : 0.0;
        },
        g);
    const double T = 0.5 * burgers_blowup(c0).T2;
    const int N = 128;
    const auto dec = make_decomposition(T, N);
    DelayedOptions d;
    d.splitting.snapshot_stride = 16;
    const auto traj = solve_delayed(c0, burgers_builder(1), {}, dec.mesh(), T, dec, {}, d);
    const double zero[1] = {0.0};
    // The bump is flatter than any power at |x| = R, so the reference is the initial datum's own
    // thresholded support rather than R itself.
    const double r0 = support_radius(c0, Span(zero, 1), 1e-10);
    double dev = 0.0;
    for (const auto& u : traj.snapshots)
        dev = std::max(dev, std::abs(support_radius(u, Span(zero, 1), 1e-10) - r0));
    out.push_back(at_most(4, "compact support preserved (deviation / dx)", dev / g.spacing(0), 2.0,
                          "T = " + fmt(T) + ", r0 = " + fmt(r0)));
}

// ---------------------------------------------------------------- 5: certified existence

void criterion5(std::vector<Check>& out) {
    for (const char* name : {"burgers1d-gauss", "burgers-nd"}) {
        auto cfg = preset_config(name);
        const double Tc = burgers_existence_time(make_problem(cfg).f0);
        cfg.T = 0.99 * Tc;
        const auto r = run_experiment(cfg, false);
        out.push_back(flag(5, std::string(name) + ": no abort up to 0.99 T_cert",
                           !r.trajectory.abort.has_value(),
                           "T_cert = " + fmt(Tc) + ", exit " + std::to_string(r.exit_code)));
    }
}

// ---------------------------------------------------------------- 6: 2D vorticity

void criterion6(std::vector<Check>& out) {
    {
        const auto cfg = preset_config("tg2d");
        const auto r = run_experiment(cfg, false);
        const Field w0 = make_problem(cfg).f0;
        const double drift = max_abs_difference(r.trajectory.final_state(), w0) / w0.max_abs();
        out.push_back(at_most(6, "Taylor-Green nu=0 steady over [0,1] (256^2)", drift, 0.01,
                              "sup drift " + fmt(r.summary["vorticity"]["omega_sup_drift"].get<double>())));
    }
    {
        auto cfg = preset_config("tg2d");
        const double nu = 0.1;
        cfg.nu = {nu, nu, 0.0};
        const auto r = run_experiment(cfg, false);
        const auto& v = *r.vorticity;
        double worst = 0.0;
        for (std::size_t i = 0; i < v.times.size(); ++i)
            worst = std::max(worst, rel_err(v.omega_sup[i] / v.omega_sup[0],
                                            std::exp(-2.0 * nu * v.times[i])));
        out.push_back(at_most(6, "Taylor-Green nu=0.1 decay e^{-2 nu t}", worst, 0.01));
    }
    {
        const auto r = run_experiment(preset_config("gauss-vortex-2d"), false);
        out.push_back(at_most(6, "Gaussian vortex sup conserved",
                              r.summary["vorticity"]["omega_sup_drift"].get<double>(), 0.01));
    }
}

// ---------------------------------------------------------------- 7: 3D vorticity

void criterion7(std::vector<Check>& out) {
    {
        const auto r = run_experiment(preset_config("compact-vortex-3d"), false);
        const auto& d = r.summary["vorticity"];
        out.push_back(at_most(7, "max |div u| over all nodes", d["max_div_u"].get<double>(), 1e-10));
        const auto& c = r.comparison;
        double worst = 0.0;
        bool ok = !c.times.empty() && !r.summary["bounds"].contains("error");
        for (std::size_t p = 0; ok && p < c.pairs.size(); ++p) {
            if (order(c.pairs[p].beta) > 1) continue;
            for (std::size_t k = 0; k < c.times.size(); ++k)
                worst = std::max(worst, c.trace[p][k] / c.bound[p][k]);
        }
        out.push_back(at_most(7, "traces / vorticity bounds, orders 0-1", ok ? worst : INFINITY, 1.0));
        out.push_back(flag(7, "support <= R0 + int |u| + 2 dx (nu=0)",
                           d["support_within_transport_bound"].get<bool>()));
    }
    {
        auto cfg = preset_config("compact-vortex-3d");
        cfg.nu = {0.05, 0.05, 0.05};
        const auto r = run_experiment(cfg, false);
        out.push_back(at_most(7, "energy non-increasing (max relative rise per step, nu=0.05)",
                              r.summary["vorticity"]["max_energy_rise"].get<double>(), 1e-3));
    }
}

// ---------------------------------------------------------------- 8: blow-up detection

void criterion8(std::vector<Check>& out) {
    const MultiIndexPair p{};
    SeminormTrace tr(1, {p});
    for (int i = 0; i <= 90; ++i) {
        const double t = 0.01 * i;
        tr.append(t, {1.0 / (1.0 - t)});
    }
    const auto est = detect_blowup(tr);
    out.push_back(at_most(8, "synthetic 1/(1-t) on [0,0.9]: T* error",
                          est.detected ? rel_err(est.T_star, 1.0) : INFINITY, 0.02,
                          est.detected ? "T* = " + fmt(est.T_star) : est.message));
    const auto& b = burgers_gauss_run().summary["blowup"];
    const bool det = b["T2_estimate"].is_number();
    out.push_back(at_most(8, "Burgers T* error",
                          det ? rel_err(b["T2_estimate"].get<double>(), characteristics_blowup_time())
                              : INFINITY,
                          0.05));
}

// ---------------------------------------------------------------- 9: non-Schwartz data

void criterion9(std::vector<Check>& out) {
    const auto r = run_experiment(preset_config("nonschwartz-2d"), false);
    const auto& c = r.comparison;
    const bool have = !r.summary["bounds"].contains("error");
    out.push_back(at_most(9, "declared set: max trace / bound", have ? c.worst_ratio : INFINITY, 10.0));
    std::size_t reported = 0;
    bool finite = true;
    for (std::size_t p = 0; p < c.pairs.size(); ++p)
        if (!c.asserted[p]) {
            ++reported;
            for (double x : c.trace[p]) finite = finite && std::isfinite(x);
        }
    out.push_back(flag(9, "out-of-set monitors reported, not asserted",
                       reported == preset_config("nonschwartz-2d").report_only.size() && finite,
                       std::to_string(reported) + " report-only pairs"));
}

struct Spec {
    const char* title;
    double limit;
    void (*run)(std::vector<Check>&);
};

const Spec kCriteria[] = {
    {"closed-form propagators", 10.0, criterion1},
    {"heat + source splitting converges at first order", 30.0, criterion2},
    {"bounds dominate seminorm traces", 120.0, criterion3},
    {"Burgers blow-up, gradient law and support", 60.0, criterion4},
    {"no abort before the certified existence time", 120.0, criterion5},
    {"2D vorticity invariants", 300.0, criterion6},
    {"3D compact vortex", 600.0, criterion7},
    {"blow-up time estimation", 120.0, criterion8},
    {"non-Schwartz initial vorticity", 120.0, criterion9},
};

} // namespace

bool CriterionReport::pass() const {
    if (checks.empty()) return false;
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

int criterion_count() { return static_cast<int>(std::size(kCriteria)); }

CriterionReport run_criterion(int id) {
    if (id < 1 || id > criterion_count()) throw std::invalid_argument("no criterion " + std::to_string(id));
    const Spec& s = kCriteria[id - 1];
    CriterionReport r;
    r.id = id;
    r.title = s.title;
    r.time_limit = s.limit;
    const auto start = std::chrono::steady_clock::now();
    try {
        s.run(r.checks);
    } catch (const std::exception& e) {
        r.checks.push_back(flag(id, "completed without error", false, e.what()));
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.checks.push_back(at_most(id, "runtime (s)", r.seconds, r.time_limit));
    return r;
}

bool SuiteReport::pass() const {
    return std::all_of(criteria.begin(), criteria.end(),
                       [](const CriterionReport& c) { return c.pass(); });
}

nlohmann::json SuiteReport::to_json() const {
    nlohmann::json checks = nlohmann::json::array();
    auto num = [](double v) -> nlohmann::json {
        if (std::isfinite(v)) return v;
        return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    };
    for (const auto& c : criteria)
        for (const auto& k : c.checks)
            checks.push_back({{"criterion", c.id},
                              {"check", k.name},
                              {"pass", k.pass},
                              {"value", num(k.value)},
                              {"threshold", num(k.threshold)},
                              {"detail", k.detail}});
    return {{"suite", suite}, {"pass", pass()}, {"checks", checks}};
}

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> v{"propagators", "bounds", "burgers", "vorticity", "all"};
    return v;
}

SuiteReport run_suite(const std::string& name) {
    static const std::map<std::string, std::vector<int>> ids{
        {"propagators", {1, 2}},
        {"bounds", {3, 8}},
        {"burgers", {4, 5, 8}},
        {"vorticity", {6, 7, 9}},
        {"all", {1, 2, 3, 4, 5, 6, 7, 8, 9}},
    };
    const auto it = ids.find(name);
    if (it == ids.end()) throw std::invalid_argument("unknown suite '" + name + "'");
    SuiteReport r;
    r.suite = name;
    for (int id : it->second) r.criteria.push_back(run_criterion(id));
    return r;
}

} // namespace schwartz
