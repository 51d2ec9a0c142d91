#include "schwartz/nonlinear.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace schwartz {

CoefficientBuilder CoefficientBuilder::constant(CoefficientSet c) {
    CoefficientBuilder b;
    b.n = c.n;
    b.m = c.m;
    b.fixed = std::move(c);
    return b;
}

int lag_steps(double eps, const Decomposition& dec) {
    if (!(eps > 0.0)) throw std::invalid_argument("delay must be positive");
    const double dt = dec.mesh();
    const int L = std::max(1, static_cast<int>(std::lround(eps / dt)));
    return L;
}

namespace {

bool uniform(const Decomposition& dec) {
    const double dt = dec.mesh();
    for (int i = 1; i <= dec.steps(); ++i)
        if (std::abs((dec.nodes[i] - dec.nodes[i - 1]) - dt) > 1e-9 * dt) return false;
    return true;
}

Field mix(const Field& a, const Field& b, double theta) {
    if (theta == 0.0) return a;
    if (theta == 1.0) return b;
    return combine(1.0 - theta, a, theta, b);
}

// Time-interpolated sampler between two snapshot entries (absent = zero).
GridSampler lagged_sampler(const std::optional<Field>& a, const std::optional<Field>& b,
                           double t_start, double dt) {
    if (!a && !b) return {};
    Field fa = a ? *a : Field(b->grid(), b->components());
    Field fb = b ? *b : Field(a->grid(), a->components());
    return [fa = std::move(fa), fb = std::move(fb), t_start, dt](double s) {
        double theta = (s - t_start) / dt;
        theta = std::clamp(theta, 0.0, 1.0);
        Field r = mix(fa, fb, theta);
        r.set_time(s);
        return r;
    };
}

} // namespace

Trajectory solve_delayed(const Field& f0, const CoefficientBuilder& builder, const Viscosity& nu,
                         double eps, double T, const Decomposition& dec,
                         const std::vector<MultiIndexPair>& monitors, const DelayedOptions& opts) {
    if (std::abs(dec.horizon() - T) > 1e-12 * std::max(1.0, T))
        throw std::invalid_argument("decomposition horizon differs from T");
    if (builder.m != f0.components())
        throw std::invalid_argument("builder and initial field disagree on m");
    const bool fixed = builder.fixed.has_value();
    if (!fixed && !builder.rule) throw std::invalid_argument("builder has no rule");
    if (!fixed && !uniform(dec))
        throw std::invalid_argument("state-dependent delayed solves need a uniform decomposition");
    const int L = lag_steps(eps, dec);
    const double dt = dec.mesh();
    const auto& sopts = opts.splitting;

    Trajectory tr;
    tr.seminorms = SeminormTrace(f0.grid().dim(), monitors);
    Field f = f0;
    f.set_time(0.0);
    auto row0 = seminorms(f, monitors);
    tr.seminorms.append(0.0, row0);
    tr.diagnostics.push_back(decay_guard(f, sopts.decay_tol));
    tr.snapshots.push_back(f);
    if (sopts.observer) sopts.observer(0, f);

    std::map<int, CoefficientSnapshot> cache;
    if (!fixed) cache.emplace(0, builder.rule(f));

    const int N = dec.steps();
    for (int i = 1; i <= N; ++i) {
        const double t0 = dec.nodes[i - 1];
        const double h = dec.nodes[i] - t0;
        CoefficientSet coeffs;
        if (fixed) {
            coeffs = *builder.fixed;
        } else {
            // Lagged time on this step runs over nodes (i−1−L, i−L); before 0 the history is f0.
            const int a = std::max(0, i - 1 - L);
            const int b = std::max(0, i - L);
            const auto& sa = cache.at(a);
            const auto& sb = cache.at(b);
            coeffs.n = builder.n;
            coeffs.m = builder.m;
            coeffs.g = lagged_sampler(sa.g, sb.g, t0, dt);
            coeffs.h = lagged_sampler(sa.h, sb.h, t0, dt);
            coeffs.k = lagged_sampler(sa.k, sb.k, t0, dt);
        }
        Field next = split_step(f, coeffs, nu, t0, h, sopts);
        next.set_time(dec.nodes[i]);
        if (!next.all_finite()) {
            tr.abort = AbortInfo{i - 1, t0, "non-finite state at step " + std::to_string(i)};
            break;
        }
        f = std::move(next);
        auto row = seminorms(f, monitors);
        tr.seminorms.append(f.time(), row);
        tr.diagnostics.push_back(decay_guard(f, sopts.decay_tol));
        if (sopts.observer) sopts.observer(i, f);
        if (i == N || (sopts.snapshot_stride > 0 && i % sopts.snapshot_stride == 0))
            tr.snapshots.push_back(f);

        for (std::size_t k = 0; k < row.size(); ++k) {
            const bool nonfinite = !std::isfinite(row[k]);
            const bool exceeded = row0[k] > 0.0 && row[k] > opts.blowup_factor * row0[k];
            if (nonfinite || exceeded) {
                tr.abort = AbortInfo{i, f.time(),
                                     "monitor " + monitors[k].label(f.grid().dim()) +
                                         " exceeded blow-up threshold"};
                break;
            }
        }
        if (tr.abort) {
            if (tr.snapshots.back().time() != f.time()) tr.snapshots.push_back(f);
            break;
        }
        if (!fixed) {
            cache.emplace(i, builder.rule(f));
            // Only nodes ≥ i+1−L are needed from here on.
            while (!cache.empty() && cache.begin()->first < i - L) cache.erase(cache.begin());
        }
    }
    return tr;
}

std::vector<int> default_eps_schedule(int N0, int levels) {
    if (N0 < 1 || levels < 1) throw std::invalid_argument("invalid schedule parameters");
    std::vector<int> s;
    for (int k = 0; k < levels; ++k) s.push_back(N0 << k);
    return s;
}

NonlinearResult solve_nonlinear(const Field& f0, const CoefficientBuilder& builder,
                                const Viscosity& nu, double T,
                                const std::vector<MultiIndexPair>& monitors, double tol,
                                const std::vector<int>& step_schedule, const DelayedOptions& opts) {
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    if (step_schedule.empty()) throw std::invalid_argument("empty eps schedule");
    for (std::size_t i = 1; i < step_schedule.size(); ++i)
        if (step_schedule[i] <= step_schedule[i - 1])
            throw std::invalid_argument("eps schedule must decrease strictly");
    std::vector<MultiIndexPair> mon = monitors;
    if (mon.empty()) mon.push_back({});

    NonlinearResult res;
    auto& rep = res.report;
    rep.monitors = mon;
    rep.n = f0.grid().dim();
    rep.tol = tol;
    Trajectory prev;
    for (std::size_t r = 0; r < step_schedule.size(); ++r) {
        const int N = step_schedule[r];
        const auto dec = make_decomposition(T, N);
        const double eps = T / N;
        Trajectory tr = solve_delayed(f0, builder, nu, eps, T, dec, mon, opts);
        EpsRun run;
        run.eps = eps;
        run.steps = N;
        run.abort = tr.abort;
        for (const auto& series : tr.seminorms.values)
            run.envelope.push_back(series.empty() ? 0.0
                                                  : *std::max_element(series.begin(), series.end()));
        rep.runs.push_back(run);
        if (tr.abort && !rep.blowup) rep.blowup = tr.abort;
        if (r > 0) {
            const double gap = trace_gap(prev.seminorms, tr.seminorms);
            rep.gaps.push_back(gap);
            if (gap < tol && !tr.abort && !prev.abort) {
                rep.converged = true;
                rep.accepted_eps = eps;
                prev = std::move(tr);
                break;
            }
        }
        prev = std::move(tr);
    }
    res.trajectory = std::move(prev);
    return res;
}

nlohmann::json to_json(const NonlinearReport& r) {
    nlohmann::json j;
    j["converged"] = r.converged;
    j["tol"] = r.tol;
    j["accepted_eps"] = r.accepted_eps ? nlohmann::json(*r.accepted_eps) : nlohmann::json(nullptr);
    j["gaps"] = r.gaps;
    std::vector<std::string> labels;
    for (const auto& p : r.monitors) labels.push_back(p.label(r.n));
    j["monitors"] = labels;
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& run : r.runs) {
        nlohmann::json e;
        e["eps"] = run.eps;
        e["steps"] = run.steps;
        e["envelope"] = run.envelope;
        if (run.abort)
            e["abort"] = {{"node", run.abort->node}, {"time", run.abort->time},
                          {"reason", run.abort->reason}};
        runs.push_back(e);
    }
    j["runs"] = runs;
    if (r.blowup)
        j["blowup"] = {{"node", r.blowup->node}, {"time", r.blowup->time},
                       {"reason", r.blowup->reason}};
    return j;
}

} // namespace schwartz
