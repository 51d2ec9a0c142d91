#include "schwartz/models.hpp"

#include "schwartz/interpolation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <complex>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>

namespace schwartz {

namespace {

using cplx = std::complex<double>;

MultiIndex unit(int axis) {
    MultiIndex e{0, 0, 0};
    e[axis] = 1;
    return e;
}

// iξ along an axis with the Nyquist mode dropped (odd-order convention).
std::vector<cplx> odd_table(const Grid& g, int axis) {
    const auto xi = g.wavenumbers(axis);
    const int P = g.points(axis);
    std::vector<cplx> d(P);
    for (int j = 0; j < P; ++j) d[j] = (j == P / 2) ? cplx{} : cplx{0.0, xi[j]};
    return d;
}

} // namespace

// ---------------------------------------------------------------- vorticity

CurlResult curl_div(const Field& u) {
    const int n = u.grid().dim();
    if ((n != 2 && n != 3) || u.components() != n)
        throw std::invalid_argument("curl needs an n-component field with n = 2 or 3");
    Spectrum s(u);
    std::array<Field, kMaxDim> d;
    for (int j = 0; j < n; ++j) d[j] = s.derivative(unit(j), u.time());
    // d[j].component(i) = ∂_j u_i
    auto D = [&](int j, int i) { return d[j].component(i); };
    CurlResult r;
    r.omega = Field(u.grid(), n == 2 ? 1 : 3, u.time());
    const std::size_t N = u.points();
    for (std::size_t k = 0; k < N; ++k) {
        if (n == 2) {
            r.omega.component(0)[k] = D(0, 1)[k] - D(1, 0)[k];
        } else {
            r.omega.component(0)[k] = D(1, 2)[k] - D(2, 1)[k];
            r.omega.component(1)[k] = D(2, 0)[k] - D(0, 2)[k];
            r.omega.component(2)[k] = D(0, 1)[k] - D(1, 0)[k];
        }
        double div = 0.0;
        for (int j = 0; j < n; ++j) div += D(j, j)[k];
        r.div_max = std::max(r.div_max, std::abs(div));
    }
    return r;
}

double divergence_max(const Field& v) {
    const int n = v.grid().dim();
    if (v.components() != n) throw std::invalid_argument("divergence needs n components");
    Spectrum s(v);
    std::vector<double> div(v.points(), 0.0);
    for (int j = 0; j < n; ++j) {
        const Field d = s.derivative(unit(j), v.time());
        const auto c = d.component(j);
        for (std::size_t k = 0; k < div.size(); ++k) div[k] += c[k];
    }
    double m = 0.0;
    for (double x : div) m = std::max(m, std::abs(x));
    return m;
}

Field biot_savart(const Field& omega, std::vector<std::string>* warnings) {
    const Grid& g = omega.grid();
    const int n = g.dim();
    if (n == 2 && omega.components() != 1)
        throw std::invalid_argument("2D vorticity must be scalar");
    if (n == 3 && omega.components() != 3)
        throw std::invalid_argument("3D vorticity must have three components");
    if (n != 2 && n != 3) throw std::invalid_argument("Biot–Savart needs n = 2 or 3");

    Spectrum s(omega);
    const std::size_t N = g.size();
    const double scale = std::max(omega.max_abs(), std::numeric_limits<double>::min());
    for (int c = 0; c < omega.components(); ++c) {
        const double mean = s.component(c)[0].real() / static_cast<double>(N);
        // Sampling a compactly supported curl leaves a quadrature-level mean; only report more.
        if (std::abs(mean) > 1e-8 * scale && warnings && !g.periodic_native()) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.3e", mean);
            warnings->push_back("vorticity component " + std::to_string(c) + " has nonzero mean " +
                                buf + "; mean removed");
        }
        s.component(c)[0] = 0.0;
    }

    std::array<std::vector<cplx>, kMaxDim> d;
    std::array<std::span<const double>, kMaxDim> xi;
    for (int j = 0; j < n; ++j) {
        d[j] = odd_table(g, j);
        xi[j] = g.wavenumbers(j);
    }
    std::vector<std::vector<cplx>> uh(n, std::vector<cplx>(N));
    for (std::size_t k = 0; k < N; ++k) {
        const auto ix = g.unravel(k);
        double k2 = 0.0;
        cplx D[kMaxDim];
        for (int j = 0; j < n; ++j) {
            k2 += xi[j][ix[j]] * xi[j][ix[j]];
            D[j] = d[j][ix[j]];
        }
        if (k2 == 0.0) continue;
        if (n == 2) {
            // ψ̂ = ω̂/|ξ|², u = (∂₂ψ, −∂₁ψ)
            const cplx psi = s.component(0)[k] / k2;
            uh[0][k] = D[1] * psi;
            uh[1][k] = -D[0] * psi;
        } else {
            // u = curl ψ with −Δψ = ω
            cplx psi[3];
            for (int c = 0; c < 3; ++c) psi[c] = s.component(c)[k] / k2;
            uh[0][k] = D[1] * psi[2] - D[2] * psi[1];
            uh[1][k] = D[2] * psi[0] - D[0] * psi[2];
            uh[2][k] = D[0] * psi[1] - D[1] * psi[0];
        }
    }
    Field u(g, n, omega.time());
    for (int c = 0; c < n; ++c) fft::inverse_real(g, uh[c].data(), u.component(c).data());
    return u;
}

CoefficientSnapshot vorticity_snapshot(const Field& u) {
    const int n = u.grid().dim();
    if (u.components() != n) throw std::invalid_argument("velocity needs n components");
    CoefficientSnapshot s;
    s.g = scaled(u, -1.0);
    if (n == 3) {
        Spectrum sp(u);
        Field h(u.grid(), 9, u.time());
        for (int j = 0; j < 3; ++j) {
            const Field dj = sp.derivative(unit(j), u.time());
            for (int i = 0; i < 3; ++i) {
                auto dst = h.component(i * 3 + j);
                auto src = dj.component(i);
                std::copy(src.begin(), src.end(), dst.begin());
            }
        }
        s.h = std::move(h);
    }
    return s;
}

CoefficientSet vorticity_coefficients(const Field& u) {
    const int n = u.grid().dim();
    auto snap = std::make_shared<const CoefficientSnapshot>(vorticity_snapshot(u));
    CoefficientSet c;
    c.n = n;
    c.m = n == 2 ? 1 : 3;
    if (snap->g) c.g = [snap](double t) { Field f = *snap->g; f.set_time(t); return f; };
    if (snap->h) c.h = [snap](double t) { Field f = *snap->h; f.set_time(t); return f; };
    return c;
}

CoefficientBuilder vorticity_builder(int n) {
    if (n != 2 && n != 3) throw std::invalid_argument("vorticity builder needs n = 2 or 3");
    CoefficientBuilder b;
    b.n = n;
    b.m = n == 2 ? 1 : 3;
    b.rule = [](const Field& omega) { return vorticity_snapshot(biot_savart(omega)); };
    return b;
}

VorticityRun evolve_vorticity(const Field& omega0, const Viscosity& nu, double T,
                              const Decomposition& dec, const std::vector<MultiIndexPair>& monitors,
                              const VorticityOptions& opts) {
    const int n = omega0.grid().dim();
    VorticityRun run;
    std::vector<std::string> warnings;
    DelayedOptions d = opts.delayed;
    const NodeObserver user = d.splitting.observer;
    std::span<const double> center(opts.center.data(), n);
    d.splitting.observer = [&](int node, const Field& omega) {
        std::vector<std::string>* w = warnings.empty() ? &warnings : nullptr;
        const Field u = biot_savart(omega, w);
        run.times.push_back(omega.time());
        run.energy.push_back(energy(u));
        run.omega_sup.push_back(omega.max_abs());
        run.u_sup.push_back(u.max_abs());
        run.support.push_back(support_radius(omega, center, opts.support_threshold));
        run.div_u.push_back(divergence_max(u));
        run.div_omega.push_back(n == 3 ? divergence_max(omega) : 0.0);
        if (opts.velocity_stride > 0 &&
            (node % opts.velocity_stride == 0 || node == dec.steps())) {
            run.velocity_times.push_back(omega.time());
            run.velocities.push_back(u);
        }
        if (user) user(node, omega);
    };
    run.trajectory = solve_delayed(omega0, vorticity_builder(n), nu, dec.mesh(), T, dec, monitors, d);
    // Keep the last node's velocity even after an abort.
    if (opts.velocity_stride > 0 && !run.times.empty() &&
        (run.velocity_times.empty() || run.velocity_times.back() != run.times.back())) {
        run.velocity_times.push_back(run.times.back());
        run.velocities.push_back(biot_savart(run.trajectory.final_state()));
    }
    run.bkm.assign(run.times.size(), 0.0);
    for (std::size_t i = 1; i < run.times.size(); ++i)
        run.bkm[i] = run.bkm[i - 1] +
                     0.5 * (run.times[i] - run.times[i - 1]) * (run.omega_sup[i] + run.omega_sup[i - 1]);
    for (auto& w : warnings) run.trajectory.warnings.push_back(std::move(w));
    return run;
}

// ---------------------------------------------------------------- monitors

double energy(const Field& u) {
    double s = 0.0;
    for (double v : u.data()) s += v * v;
    return s * u.grid().cell_volume();
}

double bkm_integral(std::span<const double> times, std::span<const double> sup_trace) {
    if (times.size() != sup_trace.size()) throw std::invalid_argument("trace length mismatch");
    double s = 0.0;
    for (std::size_t i = 1; i < times.size(); ++i)
        s += 0.5 * (times[i] - times[i - 1]) * (sup_trace[i] + sup_trace[i - 1]);
    return s;
}

double support_radius(const Field& field, std::span<const double> center, double threshold) {
    const Grid& g = field.grid();
    const int n = g.dim();
    if (static_cast<int>(center.size()) < n) throw std::invalid_argument("center needs n coordinates");
    const double cut = threshold * field.max_abs();
    double r = 0.0;
    double x[kMaxDim];
    for (std::size_t k = 0; k < g.size(); ++k) {
        double a = 0.0;
        for (int c = 0; c < field.components(); ++c) a = std::max(a, std::abs(field.component(c)[k]));
        if (!(a > cut)) continue;
        g.position(k, x);
        double d2 = 0.0;
        for (int i = 0; i < n; ++i) d2 += (x[i] - center[i]) * (x[i] - center[i]);
        r = std::max(r, std::sqrt(d2));
    }
    return r;
}

// ---------------------------------------------------------------- Burgers

double BlowupTimes::sup_derivative(double t) const {
    return std::max(std::abs(min_slope) / std::abs(1.0 + min_slope * t),
                    std::abs(max_slope) / std::abs(1.0 + max_slope * t));
}

namespace {

void require_1d(const Field& u0) {
    if (u0.grid().dim() != 1 || u0.components() != 1)
        throw std::invalid_argument("1D scalar field required");
}

// Extremum of grid samples refined by a parabola through the neighbours.
double refined_extremum(std::span<const double> v, bool maximum) {
    const std::size_t P = v.size();
    std::size_t j = 0;
    for (std::size_t i = 1; i < P; ++i)
        if (maximum ? v[i] > v[j] : v[i] < v[j]) j = i;
    const double a = v[(j + P - 1) % P], b = v[j], c = v[(j + 1) % P];
    const double denom = a - 2.0 * b + c;
    if (denom == 0.0) return b;
    const double s = 0.5 * (a - c) / denom;
    if (std::abs(s) > 1.0) return b;
    const double refined = b - 0.25 * (a - c) * s;
    return maximum ? std::max(b, refined) : std::min(b, refined);
}

} // namespace

BlowupTimes burgers_blowup(const Field& u0) {
    require_1d(u0);
    if (u0.max_abs() == 0.0) throw std::invalid_argument("u0 is identically zero");
    const Field d = spectral_derivative(u0, {1, 0, 0});
    BlowupTimes b;
    b.min_slope = refined_extremum(d.component(0), false);
    b.max_slope = refined_extremum(d.component(0), true);
    const double inf = std::numeric_limits<double>::infinity();
    b.T1 = b.max_slope > 0.0 ? -1.0 / b.max_slope : -inf;
    b.T2 = b.min_slope < 0.0 ? -1.0 / b.min_slope : inf;
    return b;
}

Field burgers_oracle(const Field& u0, double t) {
    require_1d(u0);
    if (t == 0.0) return u0;
    if (u0.max_abs() > 0.0) {
        const auto bt = burgers_blowup(u0);
        if (!(t > bt.T1 && t < bt.T2))
            throw std::domain_error("oracle time outside the classical interval (T1, T2)");
    }
    const Field du = spectral_derivative(u0, {1, 0, 0});
    Field both(u0.grid(), 2);
    std::copy(u0.data().begin(), u0.data().end(), both.component(0).begin());
    std::copy(du.data().begin(), du.data().end(), both.component(1).begin());
    const Interpolator interp(both);
    const double M = u0.max_abs();
    Field out(u0.grid(), 1, u0.time() + t);
    const auto x = u0.grid().coords(0);
    for (std::size_t j = 0; j < x.size(); ++j) {
        // F(ξ) = ξ + t·u0(ξ) − x is increasing; keep a bracket and take Newton steps inside it.
        double lo = x[j] - std::abs(t) * M - 1e-12, hi = x[j] + std::abs(t) * M + 1e-12;
        double xi = x[j] - t * interp.value(0, &x[j]);
        double val[2];
        for (int it = 0; it < 200; ++it) {
            interp.evaluate(&xi, val);
            const double F = xi + t * val[0] - x[j];
            if (F > 0.0) hi = xi; else lo = xi;
            const double dF = 1.0 + t * val[1];
            double next = dF > 0.0 ? xi - F / dF : 0.5 * (lo + hi);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            const bool done = std::abs(next - xi) <= 1e-14 * std::max(1.0, std::abs(xi));
            xi = next;
            if (done || hi - lo < 1e-15) break;
        }
        out.component(0)[j] = interp.value(0, &xi);
    }
    return out;
}

Field cole_hopf(const Field& u0, double nu, double t) {
    require_1d(u0);
    if (!(nu > 0.0)) throw std::invalid_argument("Cole–Hopf needs positive viscosity");
    if (!(t >= 0.0)) throw std::invalid_argument("time must be non-negative");
    const Grid& g = u0.grid();
    const int P = g.points(0);
    const double L = g.half_width(0);
    const auto x = g.coords(0);

    // Primitive U0 with U0(−L) = 0: spectral antiderivative of the zero-mean part plus the mean ramp.
    std::vector<cplx> hat(P);
    fft::forward(g, u0.component(0).data(), hat.data());
    const double mean = hat[0].real() / P;
    const double total = mean * 2.0 * L;
    const auto xi = g.wavenumbers(0);
    for (int k = 0; k < P; ++k)
        hat[k] = (k == 0 || k == P / 2) ? cplx{} : hat[k] / cplx{0.0, xi[k]};
    std::vector<double> prim(P);
    fft::inverse_real(g, hat.data(), prim.data());

    if (std::abs(total) / (2.0 * nu) > 690.0)
        throw std::domain_error("Cole–Hopf transform under/overflows: viscosity too small for this data");

    // φ0 = 1 + b·E(x) + ψ with E an erf step whose heat evolution is exact and ψ decaying.
    const double w = L / 8.0;
    const double b = std::exp(-total / (2.0 * nu)) - 1.0;
    auto step = [](double y, double s) { return 0.5 * (1.0 + std::erf(y / s)); };
    Field psi(g, 1);
    double phi_min = std::numeric_limits<double>::infinity();
    for (int j = 0; j < P; ++j) {
        const double U = prim[j] - prim[0] + mean * (x[j] + L);
        const double phi = std::exp(-U / (2.0 * nu));
        phi_min = std::min(phi_min, phi);
        psi.component(0)[j] = phi - 1.0 - b * step(x[j], w);
    }
    if (!(phi_min > 1e-280))
        throw std::domain_error("Cole–Hopf transform underflows: viscosity too small for this data");

    const double s = std::sqrt(w * w + 4.0 * nu * t);
    Spectrum ps(psi);
    const Field psi_t = ps.apply(
        [nu, t](const double* k) { return std::exp(-nu * k[0] * k[0] * t); }, t);
    const Field psi_x = Spectrum(psi_t).derivative({1, 0, 0}, t);
    Field u(g, 1, u0.time() + t);
    for (int j = 0; j < P; ++j) {
        const double phi = 1.0 + b * step(x[j], s) + psi_t.component(0)[j];
        const double phi_x =
            b * std::exp(-x[j] * x[j] / (s * s)) / (s * std::sqrt(std::numbers::pi)) +
            psi_x.component(0)[j];
        if (!(phi > 0.0)) throw std::domain_error("Cole–Hopf: heat solution lost positivity");
        u.component(0)[j] = -2.0 * nu * phi_x / phi;
    }
    return u;
}

CoefficientBuilder burgers_builder(int n) {
    if (n < 1 || n > kMaxDim) throw std::invalid_argument("dimension out of range");
    CoefficientBuilder b;
    b.n = n;
    b.m = n;
    b.rule = [](const Field& u) {
        CoefficientSnapshot s;
        s.g = scaled(u, -1.0);
        return s;
    };
    return b;
}

} // namespace schwartz
