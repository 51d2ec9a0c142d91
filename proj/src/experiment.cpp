#include "schwartz/experiment.hpp"

#include "schwartz/errors.hpp"
#include "schwartz/svg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace schwartz {

namespace {

constexpr double kDominationSlack = 0.01;

using json = nlohmann::json;

// JSON has no infinities; non-finite numbers become strings so the output stays valid.
json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

json num_array(std::span<const double> v) {
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

json labels(const std::vector<MultiIndexPair>& pairs, int n) {
    json a = json::array();
    for (const auto& p : pairs) a.push_back(p.label(n));
    return a;
}

int max_beta_order(const std::vector<MultiIndexPair>& pairs) {
    int k = 0;
    for (const auto& p : pairs) k = std::max(k, order(p.beta));
    return k;
}

std::vector<MultiIndex> distinct_alphas(const std::vector<MultiIndexPair>& pairs) {
    std::vector<MultiIndex> out;
    for (const auto& p : pairs)
        if (std::find(out.begin(), out.end(), p.alpha) == out.end()) out.push_back(p.alpha);
    return out;
}

/// Indices into `times` of the given node times (both increasing, node times a subset).
std::vector<std::size_t> match_times(const std::vector<double>& times,
                                     const std::vector<double>& wanted) {
    std::vector<std::size_t> idx;
    std::size_t j = 0;
    for (double t : wanted) {
        while (j < times.size() && times[j] < t - 1e-12 * std::max(1.0, std::abs(t))) ++j;
        if (j == times.size()) throw std::logic_error("bound node missing from the trace");
        idx.push_back(j);
    }
    return idx;
}

/// Bound curves per monitored pair: curves[alpha] holds orders 0..max.
using CurveTable = std::vector<std::pair<MultiIndex, std::vector<BoundCurve>>>;

BoundComparison compare(const SeminormTrace& trace, const std::vector<std::size_t>& nodes,
                        const CurveTable& curves, const std::vector<MultiIndexPair>& pairs,
                        std::size_t asserted_count) {
    BoundComparison c;
    for (auto i : nodes) c.times.push_back(trace.times[i]);
    c.pairs = pairs;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        std::vector<double> tr, bd;
        const auto it = std::find_if(curves.begin(), curves.end(),
                                     [&](const auto& e) { return e.first == pairs[p].alpha; });
        const auto& curve = it->second.at(static_cast<std::size_t>(order(pairs[p].beta)));
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            tr.push_back(trace.values[p][nodes[k]]);
            bd.push_back(curve.values[k]);
        }
        const bool asserted = p < asserted_count;
        if (asserted)
            for (std::size_t k = 0; k < tr.size(); ++k) {
                const double ratio = bd[k] > 0 ? tr[k] / bd[k]
                                               : (tr[k] > 0 ? std::numeric_limits<double>::infinity() : 0.0);
                c.worst_ratio = std::max(c.worst_ratio, ratio);
                if (!(tr[k] <= (1.0 + kDominationSlack) * bd[k])) c.dominated = false;
            }
        c.trace.push_back(std::move(tr));
        c.bound.push_back(std::move(bd));
        c.asserted.push_back(asserted);
    }
    return c;
}

json comparison_json(const BoundComparison& c, int n) {
    json j;
    j["dominated"] = c.dominated;
    j["worst_ratio"] = num(c.worst_ratio);
    j["slack"] = kDominationSlack;
    json per = json::object();
    for (std::size_t p = 0; p < c.pairs.size(); ++p) {
        double worst = 0.0;
        for (std::size_t k = 0; k < c.times.size(); ++k)
            if (c.bound[p][k] > 0) worst = std::max(worst, c.trace[p][k] / c.bound[p][k]);
        per[c.pairs[p].label(n)] = {{"asserted", static_cast<bool>(c.asserted[p])},
                                    {"max_trace_over_bound", num(worst)}};
    }
    j["pairs"] = per;
    return j;
}

json decay_json(const Trajectory& tr) {
    json j;
    std::vector<double> ratios;
    bool pass = true;
    for (const auto& d : tr.diagnostics) {
        ratios.push_back(d.ratio);
        pass = pass && d.pass;
    }
    j["all_pass"] = pass;
    j["max_ratio"] = num(ratios.empty() ? 0.0 : *std::max_element(ratios.begin(), ratios.end()));
    j["ratios"] = num_array(ratios);
    return j;
}

json abort_json(const std::optional<AbortInfo>& a) {
    if (!a) return nullptr;
    return {{"node", a->node}, {"time", a->time}, {"reason", a->reason}};
}

struct Refined {
    Trajectory trajectory;
    std::optional<VorticityRun> vorticity;
    NonlinearReport report;
    int stride = 1;
};

/// ε → 0 refinement with the lag tied to the step, each run keeping states at the bound stride.
template <class Run>
Refined refine_delayed(const ExperimentConfig& cfg, const std::vector<MultiIndexPair>& monitors,
                       Run&& run) {
    Refined out;
    auto& rep = out.report;
    rep.monitors = monitors;
    rep.n = cfg.n;
    rep.tol = cfg.tol;
    std::optional<Refined> prev;
    for (int k = 0; k <= cfg.max_doublings; ++k) {
        const int N = cfg.N0 << k;
        const int stride = std::max(1, N / std::max(1, cfg.bound_nodes - 1));
        Refined cur;
        cur.stride = stride;
        run(make_decomposition(cfg.T, N), stride, cur);
        EpsRun e;
        e.eps = cfg.T / N;
        e.steps = N;
        e.abort = cur.trajectory.abort;
        for (const auto& s : cur.trajectory.seminorms.values)
            e.envelope.push_back(s.empty() ? 0.0 : *std::max_element(s.begin(), s.end()));
        rep.runs.push_back(e);
        if (e.abort && !rep.blowup) rep.blowup = e.abort;
        bool done = false;
        if (prev) {
            const double gap = trace_gap(prev->trajectory.seminorms, cur.trajectory.seminorms);
            rep.gaps.push_back(gap);
            if (gap < cfg.tol && !e.abort && !prev->trajectory.abort) {
                rep.converged = true;
                rep.accepted_eps = e.eps;
                done = true;
            }
        }
        prev = std::move(cur);
        if (done) break;
    }
    out.trajectory = std::move(prev->trajectory);
    out.vorticity = std::move(prev->vorticity);
    out.stride = prev->stride;
    return out;
}

std::vector<double> kept_times(const std::vector<Field>& fields) {
    std::vector<double> t;
    for (const auto& f : fields) t.push_back(f.time());
    return t;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os << text;
}

bool wants(const ExperimentConfig& cfg, const char* format) {
    return std::find(cfg.formats.begin(), cfg.formats.end(), format) != cfg.formats.end();
}

void write_artifacts(const ExperimentConfig& cfg, const ExperimentResult& r, bool have_bounds) {
    namespace fs = std::filesystem;
    const fs::path dir(r.directory);
    fs::create_directories(dir);
    const int n = cfg.n;
    const auto& c = r.comparison;
    if (wants(cfg, "csv")) {
        // Trace and bounds share the bound-node time column.
        SeminormTrace sub(n, c.pairs);
        for (std::size_t k = 0; k < c.times.size(); ++k) {
            std::vector<double> row;
            for (std::size_t p = 0; p < c.pairs.size(); ++p) row.push_back(c.trace[p][k]);
            sub.append(c.times[k], row);
        }
        std::ostringstream tr;
        sub.write_csv(tr);
        write_text(dir / "trace.csv", tr.str());
        if (have_bounds) {
            std::ostringstream bd;
            write_bounds_csv(bd, n, c.times, c.pairs, c.bound);
            write_text(dir / "bounds.csv", bd.str());
        }
        if (r.vorticity) {
            const auto& v = *r.vorticity;
            std::ostringstream os;
            os.precision(17);
            os << "t,energy,omega_sup,u_sup,bkm,support_radius,div_u,div_omega\n";
            for (std::size_t i = 0; i < v.times.size(); ++i)
                os << v.times[i] << ',' << v.energy[i] << ',' << v.omega_sup[i] << ','
                   << v.u_sup[i] << ',' << v.bkm[i] << ',' << v.support[i] << ',' << v.div_u[i]
                   << ',' << v.div_omega[i] << '\n';
            write_text(dir / "diagnostics.csv", os.str());
        }
    }
    if (wants(cfg, "json")) {
        write_text(dir / "summary.json", r.summary.dump(2) + "\n");
        write_text(dir / "timing.json", json{{"wall_seconds", r.wall_seconds}}.dump(2) + "\n");
    }
    if (wants(cfg, "svg")) {
        for (std::size_t p = 0; p < c.pairs.size(); ++p) {
            const std::string label = c.pairs[p].label(n);
            std::vector<PlotSeries> s{{"trace " + label, c.times, c.trace[p], false}};
            if (have_bounds) s.push_back({"bound", c.times, c.bound[p], true});
            write_text(dir / ("plot_" + label + ".svg"),
                       render_svg(cfg.name + ": " + label, "t", s, cfg.log_scale));
        }
    }
}

} // namespace

std::string output_root() {
    const char* env = std::getenv("SCHWARTZ_OUTPUT_ROOT");
    return env && *env ? std::string(env) : std::string(".");
}

std::vector<std::size_t> bound_node_indices(std::size_t nodes, int target) {
    if (nodes == 0) return {};
    const std::size_t steps = nodes - 1;
    const std::size_t stride =
        std::max<std::size_t>(1, steps / static_cast<std::size_t>(std::max(1, target - 1)));
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i <= steps; i += stride) idx.push_back(i);
    if (idx.back() != steps) idx.push_back(steps);
    return idx;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write) {
    const auto start = std::chrono::steady_clock::now();
    const Problem prob = make_problem(cfg);
    const Viscosity nu = cfg.viscosity();
    const int n = cfg.n;

    std::vector<MultiIndexPair> pairs = cfg.monitors;
    pairs.insert(pairs.end(), cfg.report_only.begin(), cfg.report_only.end());
    if (pairs.empty()) pairs.push_back({});
    const std::size_t asserted = cfg.monitors.empty() ? pairs.size() : cfg.monitors.size();
    const int kmax = max_beta_order(pairs);
    const auto alphas = distinct_alphas(pairs);

    ExperimentResult res;
    const std::string rel = cfg.directory.empty() ? "runs/" + cfg.name : cfg.directory;
    res.directory = (std::filesystem::path(output_root()) / rel).string();

    json& s = res.summary;
    s["name"] = cfg.name;
    s["preset"] = cfg.preset;
    s["model"] = to_string(cfg.model);
    s["n"] = n;
    s["L"] = std::vector<double>(cfg.L.begin(), cfg.L.begin() + n);
    s["P"] = std::vector<int>(cfg.P.begin(), cfg.P.begin() + n);
    s["periodic"] = cfg.periodic;
    s["T"] = cfg.T;
    s["nu"] = std::vector<double>(cfg.nu.begin(), cfg.nu.begin() + n);
    s["seed"] = cfg.seed;
    s["monitors"] = labels(cfg.monitors, n);
    s["report_only"] = labels(cfg.report_only, n);

    CurveTable curves;
    std::vector<double> bound_times;
    std::string bound_error;
    auto guarded = [&](auto&& compute) {
        try {
            compute();
        } catch (const std::exception& e) {
            bound_error = e.what();
            curves.clear();
        }
    };

    switch (cfg.model) {
    case ModelKind::linear: {
        SplittingOptions so;
        so.strang = cfg.strang;
        so.step.interp = cfg.interp;
        auto rr = refine_until(prob.f0, *prob.coeffs, nu, cfg.T, pairs, cfg.tol, cfg.N0,
                               cfg.max_doublings, so);
        res.trajectory = std::move(rr.trajectory);
        const auto& rep = rr.report;
        s["convergence"] = {{"converged", rep.converged}, {"tol", rep.tol},
                            {"steps", rep.steps},         {"gaps", num_array(rep.gaps)},
                            {"orders", num_array(rep.orders)},
                            {"accepted_steps", rep.accepted_steps}};
        res.exit_code = rep.converged ? 0 : 2;
        const auto& times = res.trajectory.seminorms.times;
        for (auto i : bound_node_indices(times.size(), cfg.bound_nodes)) bound_times.push_back(times[i]);
        guarded([&] {
            const Envelope env = build_envelope(*prob.coeffs, prob.f0.grid(), bound_times, kmax);
            const IDisplacement I = displacement_I(env);
            const HeatData heat = heat_data(prob.f0, &*prob.coeffs, nu, I, alphas, kmax, cfg.decay_tol);
            for (const auto& a : alphas) curves.emplace_back(a, linear_bounds(a, kmax, env, I, heat));
        });
        break;
    }
    case ModelKind::burgers: {
        const auto builder = burgers_builder(n);
        auto rr = refine_delayed(cfg, pairs, [&](const Decomposition& dec, int stride, Refined& out) {
            DelayedOptions d;
            d.splitting.strang = cfg.strang;
            d.splitting.step.interp = cfg.interp;
            d.splitting.snapshot_stride = stride;
            out.trajectory = solve_delayed(prob.f0, builder, nu, dec.mesh(), cfg.T, dec, pairs, d);
        });
        res.trajectory = std::move(rr.trajectory);
        s["convergence"] = to_json(rr.report);
        res.exit_code = res.trajectory.abort ? 3 : (rr.report.converged ? 0 : 2);
        const auto& snaps = res.trajectory.snapshots;
        bound_times = kept_times(snaps);
        guarded([&] {
            std::vector<Field> g;
            for (const auto& u : snaps) g.push_back(scaled(u, -1.0));
            const Envelope env = envelope_from_fields(bound_times, g, {}, n, n, kmax);
            const IDisplacement I = displacement_I(env);
            const HeatData heat = heat_data(prob.f0, nullptr, nu, I, alphas, kmax, cfg.decay_tol);
            for (const auto& a : alphas) curves.emplace_back(a, linear_bounds(a, kmax, env, I, heat));
        });
        json b;
        const auto est = detect_blowup(res.trajectory.seminorms);
        b["detected"] = est.detected;
        b["T2_estimate"] = est.detected ? num(est.T_star) : json(nullptr);
        b["C"] = est.detected ? num(est.C) : json(nullptr);
        b["residual"] = est.detected ? num(est.residual) : json(nullptr);
        b["pair"] = est.detected ? json(est.pair.label(n)) : json(nullptr);
        b["message"] = est.message;
        b["T_cert"] = num(burgers_existence_time(prob.f0));
        if (n == 1) {
            const auto bt = burgers_blowup(prob.f0);
            b["T1"] = num(bt.T1);
            b["T2"] = num(bt.T2);
        }
        b["abort"] = abort_json(res.trajectory.abort);
        s["blowup"] = b;
        break;
    }
    case ModelKind::vorticity: {
        auto rr = refine_delayed(cfg, pairs, [&](const Decomposition& dec, int stride, Refined& out) {
            VorticityOptions vo;
            vo.delayed.splitting.strang = cfg.strang;
            vo.delayed.splitting.step.interp = cfg.interp;
            vo.center = prob.center;
            vo.velocity_stride = stride;
            auto run = evolve_vorticity(prob.f0, nu, cfg.T, dec, pairs, vo);
            out.trajectory = std::move(run.trajectory);
            run.trajectory = Trajectory{};
            out.vorticity = std::move(run);
        });
        res.trajectory = std::move(rr.trajectory);
        res.vorticity = std::move(rr.vorticity);
        s["convergence"] = to_json(rr.report);
        res.exit_code = res.trajectory.abort ? 3 : (rr.report.converged ? 0 : 2);
        const auto& v = *res.vorticity;
        bound_times = v.velocity_times;
        guarded([&] {
            const Envelope env =
                envelope_from_fields(bound_times, v.velocities, {}, n, n == 2 ? 1 : 3, kmax);
            const IDisplacement I = displacement_I(env);
            const HeatData heat = heat_data(prob.f0, nullptr, nu, I, alphas, kmax, cfg.decay_tol);
            for (const auto& a : alphas) curves.emplace_back(a, vorticity_bounds(a, kmax, env, I, heat));
        });

        json d;
        const double w0 = v.omega_sup.front();
        double drift = 0.0, energy_rise = 0.0;
        for (double w : v.omega_sup) drift = std::max(drift, std::abs(w - w0) / w0);
        for (std::size_t i = 1; i < v.energy.size(); ++i)
            if (v.energy[i - 1] > 0)
                energy_rise = std::max(energy_rise, (v.energy[i] - v.energy[i - 1]) / v.energy[i - 1]);
        double h = 0.0;
        for (int a = 0; a < n; ++a) h = std::max(h, prob.f0.grid().spacing(a));
        bool support_ok = true;
        std::vector<double> u_int(v.times.size(), 0.0);
        for (std::size_t i = 1; i < v.times.size(); ++i)
            u_int[i] = u_int[i - 1] + 0.5 * (v.times[i] - v.times[i - 1]) * (v.u_sup[i] + v.u_sup[i - 1]);
        for (std::size_t i = 0; i < v.times.size(); ++i)
            support_ok = support_ok && v.support[i] <= v.support.front() + u_int[i] + 2.0 * h;
        d["omega_sup_drift"] = num(drift);
        d["max_energy_rise"] = num(energy_rise);
        d["max_div_u"] = num(*std::max_element(v.div_u.begin(), v.div_u.end()));
        d["max_div_omega"] = num(*std::max_element(v.div_omega.begin(), v.div_omega.end()));
        d["support_within_transport_bound"] = support_ok;
        d["times"] = num_array(v.times);
        d["energy"] = num_array(v.energy);
        d["omega_sup"] = num_array(v.omega_sup);
        d["bkm"] = num_array(v.bkm);
        d["support"] = num_array(v.support);
        s["vorticity"] = d;
        const auto est = detect_blowup(res.trajectory.seminorms);
        s["blowup"] = {{"detected", est.detected},
                       {"T_estimate", est.detected ? num(est.T_star) : json(nullptr)},
                       {"message", est.message},
                       {"abort", abort_json(res.trajectory.abort)}};
        break;
    }
    }

    const auto idx = match_times(res.trajectory.seminorms.times, bound_times);
    const bool have_bounds = bound_error.empty();
    if (have_bounds) {
        res.comparison = compare(res.trajectory.seminorms, idx, curves, pairs, asserted);
        s["bounds"] = comparison_json(res.comparison, n);
        bool conservative = false;
        for (const auto& [a, cs] : curves)
            for (const auto& c : cs) conservative = conservative || c.conservative;
        s["bounds"]["conservative"] = conservative;
    } else {
        // Keep the trace export; bounds are reported unavailable.
        CurveTable dummy;
        for (const auto& a : alphas) {
            std::vector<BoundCurve> cs(static_cast<std::size_t>(kmax) + 1);
            for (auto& c : cs) c.values.assign(idx.size(), std::numeric_limits<double>::quiet_NaN());
            dummy.emplace_back(a, std::move(cs));
        }
        res.comparison = compare(res.trajectory.seminorms, idx, dummy, pairs, 0);
        s["bounds"] = {{"error", bound_error}};
    }
    bool finite = true;
    for (const auto& series : res.trajectory.seminorms.values)
        for (double x : series) finite = finite && std::isfinite(x);
    s["all_traces_finite"] = finite;
    s["abort"] = abort_json(res.trajectory.abort);
    s["decay_guard"] = decay_json(res.trajectory);
    s["warnings"] = res.trajectory.warnings;
    s["exit_code"] = res.exit_code;

    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (write) write_artifacts(cfg, res, have_bounds);
    return res;
}

} // namespace schwartz
