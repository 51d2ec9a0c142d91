#include "schwartz/propagators.hpp"

#include "schwartz/interpolation.hpp"

#include <Eigen/Core>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace schwartz {

Viscosity Viscosity::isotropic(int n, double v) {
    if (v < 0.0) throw std::invalid_argument("viscosity must be non-negative");
    Viscosity nu;
    for (int i = 0; i < n; ++i) nu.nu[i] = v;
    return nu;
}

CoefficientSet coefficients_from_functions(const Grid& grid, int m, PointSampler g, PointSampler h,
                                           PointSampler k) {
    CoefficientSet c;
    c.n = grid.dim();
    c.m = m;
    auto make = [grid](PointSampler fn, int comps) -> GridSampler {
        if (!fn) return {};
        return [grid, fn, comps](double t) {
            return sample_field(
                [&](std::span<const double> x, std::span<double> out) { fn(x, t, out); }, grid,
                comps, t);
        };
    };
    c.g = make(g, c.n);
    c.h = make(h, m * m);
    c.k = make(k, m);
    c.g_point = std::move(g);
    c.h_point = std::move(h);
    c.k_point = std::move(k);
    return c;
}

int StepOptions::panels(double dt) const {
    if (quad_dt <= 0.0 || dt <= 0.0) return 4;
    return std::max(2, static_cast<int>(std::ceil(dt / quad_dt - 1e-12)));
}

Field integrate_sampler(const GridSampler& s, double t0, double dt, int panels) {
    if (panels < 1) throw std::invalid_argument("quadrature needs at least one panel");
    const double h = dt / panels;
    Field acc = s(t0);
    for (double& v : acc.data()) v *= 0.5 * h;
    for (int p = 1; p <= panels; ++p) {
        const double t = p == panels ? t0 + dt : t0 + p * h;
        const Field f = s(t);
        if (f.data().size() != acc.data().size())
            throw std::runtime_error("sampler returned inconsistent sizes");
        const double w = p == panels ? 0.5 * h : h;
        auto a = acc.data();
        auto d = f.data();
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += w * d[i];
    }
    if (!acc.all_finite()) throw std::domain_error("coefficient sampler produced non-finite values");
    acc.set_time(t0 + dt);
    return acc;
}

namespace {

void check_dt(double dt) {
    if (!(dt >= 0.0)) throw std::invalid_argument("step duration must be non-negative");
}

} // namespace

Field heat_step(const Field& field, const Viscosity& nu, double dt) {
    check_dt(dt);
    for (double v : nu.nu)
        if (v < 0.0) throw std::invalid_argument("viscosity must be non-negative");
    if (dt == 0.0 || nu.zero()) return field;
    const int n = field.grid().dim();
    Spectrum s(field);
    Field out = s.apply(
        [&](const double* xi) {
            double e = 0.0;
            for (int i = 0; i < n; ++i) e += nu.nu[i] * xi[i] * xi[i];
            return std::exp(-e * dt);
        },
        field.time() + dt);
    return out;
}

Field transport_step(const Field& field, const CoefficientSet& coeffs, double t0, double dt,
                     const StepOptions& opts) {
    check_dt(dt);
    if (dt == 0.0 || !coeffs.has_g()) return field;
    const Field D = integrate_sampler(coeffs.g, t0, dt, opts.panels(dt));
    Field out = interpolate_shifted(field, D, opts.interp);
    out.set_time(field.time());
    return out;
}

void expm_small(int m, const double* a, double* out) {
    if (m == 1) {
        out[0] = std::exp(a[0]);
        return;
    }
    if (m == 2) {
        // exp(A) = e^s [c(δ) I + S(δ) (A − sI)], s = tr/2, δ² = −det(A − sI).
        const double s = 0.5 * (a[0] + a[3]);
        const double b00 = a[0] - s, b11 = a[3] - s;
        const double q = -(b00 * b11 - a[1] * a[2]);
        double c, S;
        const double d = std::sqrt(std::abs(q));
        if (d < 1e-4) {
            // Series in q to stay accurate near the degenerate case.
            c = 1.0 + q / 2.0 + q * q / 24.0 + q * q * q / 720.0;
            S = 1.0 + q / 6.0 + q * q / 120.0 + q * q * q / 5040.0;
        } else if (q > 0.0) {
            c = std::cosh(d);
            S = std::sinh(d) / d;
        } else {
            c = std::cos(d);
            S = std::sin(d) / d;
        }
        const double e = std::exp(s);
        out[0] = e * (c + S * b00);
        out[1] = e * S * a[1];
        out[2] = e * S * a[2];
        out[3] = e * (c + S * b11);
        return;
    }
    using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor, 3, 3>;
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> A(a, m,
                                                                                              m);
    Mat M = A;
    Mat E = M.exp();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) out[i * m + j] = E(i, j);
}

Field multiply_step(const Field& field, const CoefficientSet& coeffs, double t0, double dt,
                    const StepOptions& opts) {
    check_dt(dt);
    if (dt == 0.0 || !coeffs.has_h()) return field;
    const int m = field.components();
    if (coeffs.m != m) throw std::invalid_argument("h size does not match field components");
    const Field H = integrate_sampler(coeffs.h, t0, dt, opts.panels(dt));
    if (H.components() != m * m) throw std::invalid_argument("h sampler must return m*m components");
    Field out(field.grid(), m, field.time());
    const std::size_t N = field.points();
    std::array<double, 9> a{}, e{};
    std::array<double, 3> v{};
    for (std::size_t idx = 0; idx < N; ++idx) {
        for (int q = 0; q < m * m; ++q) a[q] = H.component(q)[idx];
        expm_small(m, a.data(), e.data());
        for (int c = 0; c < m; ++c) v[c] = field.component(c)[idx];
        for (int i = 0; i < m; ++i) {
            double s = 0.0;
            for (int j = 0; j < m; ++j) s += e[i * m + j] * v[j];
            out.component(i)[idx] = s;
        }
    }
    return out;
}

Field source_step(const Field& field, const CoefficientSet& coeffs, double t0, double dt,
                  const StepOptions& opts) {
    check_dt(dt);
    if (dt == 0.0 || !coeffs.has_k()) return field;
    const Field K = integrate_sampler(coeffs.k, t0, dt, opts.panels(dt));
    if (K.components() != field.components())
        throw std::invalid_argument("k sampler must return m components");
    Field out = combine(1.0, field, 1.0, K);
    out.set_time(field.time());
    return out;
}

Field scaling_step(const Field& field, std::span<const double> a, double dt,
                   const InterpolationOptions& interp) {
    check_dt(dt);
    const Grid& g = field.grid();
    const int n = g.dim();
    if (static_cast<int>(a.size()) < n) throw std::invalid_argument("one rate per axis required");
    bool identity = true;
    for (int i = 0; i < n; ++i) identity = identity && a[i] == 0.0;
    if (dt == 0.0 || identity) return field;
    if (g.periodic_native()) throw std::invalid_argument("dilation is undefined on the torus");

    // Where the field is non-negligible, the dilated copy must stay inside 0.9 L.
    const double fmax = field.max_abs();
    const std::size_t N = g.size();
    std::array<double, kMaxDim> x{}, reach{};
    for (int c = 0; c < field.components(); ++c) {
        auto comp = field.component(c);
        for (std::size_t idx = 0; idx < N; ++idx) {
            if (std::abs(comp[idx]) <= kDefaultDecayTol * fmax) continue;
            g.position(idx, x.data());
            for (int i = 0; i < n; ++i) reach[i] = std::max(reach[i], std::abs(x[i]));
        }
    }
    std::array<double, kMaxDim> stretch{};
    for (int i = 0; i < n; ++i) {
        stretch[i] = std::exp(a[i] * dt);
        if (reach[i] / stretch[i] > 0.9 * g.half_width(i))
            throw std::domain_error("dilation exits the guarded box along axis " +
                                    std::to_string(i));
    }

    Interpolator interp_(field, interp);
    Field out(g, field.components(), field.time());
    std::vector<double> vals(field.components());
    for (std::size_t idx = 0; idx < N; ++idx) {
        g.position(idx, x.data());
        bool inside = true;
        for (int i = 0; i < n; ++i) {
            x[i] *= stretch[i];
            inside = inside && x[i] >= -g.half_width(i) && x[i] < g.half_width(i);
        }
        if (!inside) continue;
        interp_.evaluate(x.data(), vals.data());
        for (int c = 0; c < field.components(); ++c) out.component(c)[idx] = vals[c];
    }
    return out;
}

} // namespace schwartz
