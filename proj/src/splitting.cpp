#include "schwartz/splitting.hpp"

#include "schwartz/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace schwartz {

double Decomposition::mesh() const noexcept {
    double m = 0.0;
    for (std::size_t i = 1; i < nodes.size(); ++i) m = std::max(m, nodes[i] - nodes[i - 1]);
    return m;
}

Decomposition make_decomposition(double T, int N) {
    if (!(T > 0.0)) throw std::invalid_argument("horizon must be positive");
    if (N < 1) throw std::invalid_argument("at least one step required");
    Decomposition d;
    d.nodes.resize(N + 1);
    for (int i = 0; i <= N; ++i) d.nodes[i] = (i == N) ? T : T * i / N;
    return d;
}

Decomposition decomposition_from_nodes(std::vector<double> nodes) {
    if (nodes.size() < 2 || nodes.front() != 0.0)
        throw std::invalid_argument("decomposition must start at 0 and have a step");
    for (std::size_t i = 1; i < nodes.size(); ++i)
        if (!(nodes[i] > nodes[i - 1])) throw std::invalid_argument("nodes must increase strictly");
    return Decomposition{std::move(nodes)};
}

// ---------------------------------------------------------------- traces

SeminormTrace::SeminormTrace(int dim, std::vector<MultiIndexPair> monitored)
    : n(dim), pairs(std::move(monitored)), values(pairs.size()) {}

void SeminormTrace::append(double t, const std::vector<double>& row) {
    if (row.size() != pairs.size()) throw std::invalid_argument("trace row size mismatch");
    times.push_back(t);
    for (std::size_t k = 0; k < row.size(); ++k) values[k].push_back(row[k]);
}

SeminormTrace SeminormTrace::subsampled(int stride) const {
    if (stride <= 1) return *this;
    SeminormTrace out(n, pairs);
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (i % stride != 0 && i + 1 != times.size()) continue;
        std::vector<double> row(pairs.size());
        for (std::size_t k = 0; k < pairs.size(); ++k) row[k] = values[k][i];
        out.append(times[i], row);
    }
    return out;
}

void SeminormTrace::write_csv(std::ostream& os) const {
    os << "t";
    for (const auto& p : pairs) os << "," << p.label(n);
    os << "\n" << std::setprecision(17);
    for (std::size_t i = 0; i < times.size(); ++i) {
        os << times[i];
        for (std::size_t k = 0; k < pairs.size(); ++k) os << "," << values[k][i];
        os << "\n";
    }
}

// ---------------------------------------------------------------- stepping

Field split_step(const Field& f, const CoefficientSet& c, const Viscosity& nu, double t0, double dt,
                 const SplittingOptions& opts) {
    const auto& so = opts.step;
    if (!opts.strang) {
        Field r = heat_step(f, nu, dt);
        r = transport_step(r, c, t0, dt, so);
        r = multiply_step(r, c, t0, dt, so);
        r = source_step(r, c, t0, dt, so);
        r.set_time(t0 + dt);
        return r;
    }
    const double h = 0.5 * dt;
    Field r = heat_step(f, nu, h);
    r = transport_step(r, c, t0, h, so);
    r = multiply_step(r, c, t0, h, so);
    r = source_step(r, c, t0, dt, so);
    r = multiply_step(r, c, t0 + h, h, so);
    r = transport_step(r, c, t0 + h, h, so);
    r = heat_step(r, nu, h);
    r.set_time(t0 + dt);
    return r;
}

namespace {

void record(Trajectory& tr, const Field& f, const std::vector<MultiIndexPair>& monitors,
            double decay_tol, bool& warned) {
    tr.seminorms.append(f.time(), seminorms(f, monitors));
    const auto rep = decay_guard(f, decay_tol);
    tr.diagnostics.push_back(rep);
    if (!rep.pass && !warned && !f.grid().periodic_native()) {
        const bool weighted = std::any_of(monitors.begin(), monitors.end(),
                                          [](const auto& p) { return order(p.alpha) > 0; });
        if (weighted) {
            tr.warnings.push_back("decay_guard failed at t=" + std::to_string(f.time()) +
                                  " (shell ratio " + std::to_string(rep.ratio) +
                                  "); weighted seminorms are affected by box truncation");
            warned = true;
        }
    }
}

} // namespace

Trajectory solve_linear(const Field& f0, const CoefficientSet& coeffs, const Viscosity& nu,
                        const Decomposition& dec, const std::vector<MultiIndexPair>& monitors,
                        const SplittingOptions& opts) {
    if (coeffs.m != f0.components())
        throw std::invalid_argument("coefficient set and initial field disagree on m");
    Trajectory tr;
    tr.seminorms = SeminormTrace(f0.grid().dim(), monitors);
    bool warned = false;
    Field f = f0;
    f.set_time(dec.nodes.front());
    record(tr, f, monitors, opts.decay_tol, warned);
    tr.snapshots.push_back(f);
    if (opts.observer) opts.observer(0, f);
    const int N = dec.steps();
    for (int i = 1; i <= N; ++i) {
        const double t0 = dec.nodes[i - 1];
        f = split_step(f, coeffs, nu, t0, dec.nodes[i] - t0, opts);
        f.set_time(dec.nodes[i]);
        if (!f.all_finite())
            throw NonFiniteError("non-finite data after step " + std::to_string(i), i);
        record(tr, f, monitors, opts.decay_tol, warned);
        if (opts.observer) opts.observer(i, f);
        if (i == N || (opts.snapshot_stride > 0 && i % opts.snapshot_stride == 0))
            tr.snapshots.push_back(f);
    }
    return tr;
}

double trace_gap(const SeminormTrace& coarse, const SeminormTrace& fine, double floor) {
    if (coarse.pairs.size() != fine.pairs.size())
        throw std::invalid_argument("traces monitor different pairs");
    double gap = 0.0;
    std::size_t j = 0;
    const double T = coarse.times.empty() ? 1.0 : std::max(1.0, std::abs(coarse.times.back()));
    for (std::size_t i = 0; i < coarse.times.size(); ++i) {
        while (j < fine.times.size() && fine.times[j] < coarse.times[i] - 1e-12 * T) ++j;
        if (j >= fine.times.size() || std::abs(fine.times[j] - coarse.times[i]) > 1e-12 * T) continue;
        for (std::size_t k = 0; k < coarse.pairs.size(); ++k) {
            const double a = coarse.values[k][i], b = fine.values[k][j];
            gap = std::max(gap, std::abs(a - b) / std::max(std::abs(b), floor));
        }
    }
    return gap;
}

RefinementResult refine_until(const Field& f0, const CoefficientSet& coeffs, const Viscosity& nu,
                              double T, const std::vector<MultiIndexPair>& monitors, double tol,
                              int N0, int max_doublings, const SplittingOptions& opts) {
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    if (N0 < 1 || max_doublings < 1) throw std::invalid_argument("need N0 >= 1 and a doubling");
    std::vector<MultiIndexPair> mon = monitors;
    if (mon.empty()) mon.push_back({});
    RefinementResult res;
    res.report.tol = tol;
    Trajectory prev = solve_linear(f0, coeffs, nu, make_decomposition(T, N0), mon, opts);
    res.report.steps.push_back(N0);
    int N = N0;
    for (int d = 1; d <= max_doublings; ++d) {
        N *= 2;
        Trajectory next = solve_linear(f0, coeffs, nu, make_decomposition(T, N), mon, opts);
        res.report.steps.push_back(N);
        const double gap = trace_gap(prev.seminorms, next.seminorms);
        res.report.gaps.push_back(gap);
        const auto& g = res.report.gaps;
        if (g.size() >= 2 && g.back() > 0.0 && g[g.size() - 2] > 0.0)
            res.report.orders.push_back(std::log2(g[g.size() - 2] / g.back()));
        prev = std::move(next);
        if (gap < tol) {
            res.report.converged = true;
            break;
        }
    }
    res.report.accepted_steps = N;
    res.trajectory = std::move(prev);
    return res;
}

Field heat_source_exact(const Field& f0, const CoefficientSet& coeffs, const Viscosity& nu,
                        double T, int quad_panels) {
    if (coeffs.has_g() || coeffs.has_h())
        throw std::invalid_argument("heat_source_exact requires g = 0 and h = 0");
    if (quad_panels < 1) throw std::invalid_argument("quad_panels must be positive");
    Field out = heat_step(f0, nu, T);
    if (!coeffs.has_k()) return out;
    const double h = T / quad_panels;
    for (int p = 0; p <= quad_panels; ++p) {
        const double s = p == quad_panels ? T : p * h;
        const double w = (p == 0 || p == quad_panels) ? 0.5 * h : h;
        const Field ks = heat_step(coeffs.k(s), nu, T - s);
        out = combine(1.0, out, w, ks);
    }
    out.set_time(f0.time() + T);
    return out;
}

} // namespace schwartz
