#include "schwartz/bounds.hpp"

#include "schwartz/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>

namespace schwartz {

namespace {

// Prefix trapezoid integral over the nodes.
std::vector<double> cumulative(std::span<const double> t, std::span<const double> f) {
    std::vector<double> out(t.size(), 0.0);
    for (std::size_t i = 1; i < t.size(); ++i)
        out[i] = out[i - 1] + 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
    return out;
}

void check_nodes(std::span<const double> times) {
    if (times.empty()) throw std::invalid_argument("envelope needs at least one node");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw std::invalid_argument("envelope nodes must increase");
}

void check_finite(const Field& f, const char* what) {
    if (!f.all_finite()) throw std::domain_error(std::string("non-finite sample of ") + what);
}

// ---- finite differences on a padded sample (coefficients given pointwise on ℝⁿ)

constexpr int kPad = 3;

struct FdStencil {
    int half;
    double w[7];  // offsets −3..3
};

const FdStencil& fd_stencil(int order) {
    // Fourth-order central differences for orders 1–4, second order for 5.
    static const FdStencil table[6] = {
        {0, {0, 0, 0, 1, 0, 0, 0}},
        {2, {0, 1.0 / 12, -8.0 / 12, 0, 8.0 / 12, -1.0 / 12, 0}},
        {2, {0, -1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12, 0}},
        {3, {1.0 / 8, -1.0, 13.0 / 8, 0, -13.0 / 8, 1.0, -1.0 / 8}},
        {3, {-1.0 / 6, 2.0, -6.5, 28.0 / 3, -6.5, 2.0, -1.0 / 6}},
        {3, {-0.5, 2.0, -2.5, 0, 2.5, -2.0, 0.5}},
    };
    if (order < 0 || order > 5) throw std::invalid_argument("finite-difference order above 5");
    return table[order];
}

// Coefficient samples on the grid extended by kPad cells per side.
struct Padded {
    int n = 1, comps = 1;
    std::array<int, kMaxDim> Q{1, 1, 1};
    std::array<double, kMaxDim> dx{1, 1, 1};
    std::size_t total = 0;
    std::vector<double> data;  // component-major, row-major, axis 0 slowest

    std::size_t index(int a, int b, int c) const {
        return (static_cast<std::size_t>(a) * Q[1] + b) * Q[2] + c;
    }
};

Padded sample_padded(const PointSampler& fn, int comps, const Grid& grid, double t) {
    Padded p;
    p.n = grid.dim();
    p.comps = comps;
    std::array<double, kMaxDim> x0{};
    for (int i = 0; i < p.n; ++i) {
        p.Q[i] = grid.points(i) + 2 * kPad;
        p.dx[i] = grid.spacing(i);
        x0[i] = grid.coords(i)[0] - kPad * p.dx[i];
    }
    p.total = static_cast<std::size_t>(p.Q[0]) * p.Q[1] * p.Q[2];
    p.data.assign(p.total * comps, 0.0);
    std::vector<double> x(p.n), out(comps);
    for (int a = 0; a < p.Q[0]; ++a)
        for (int b = 0; b < p.Q[1]; ++b)
            for (int c = 0; c < p.Q[2]; ++c) {
                const int idx3[3] = {a, b, c};
                for (int i = 0; i < p.n; ++i) x[i] = x0[i] + idx3[i] * p.dx[i];
                fn(x, t, out);
                const std::size_t k = p.index(a, b, c);
                for (int q = 0; q < comps; ++q) p.data[q * p.total + k] = out[q];
            }
    for (double v : p.data)
        if (!std::isfinite(v)) throw std::domain_error("non-finite coefficient sample");
    return p;
}

// ∂^γ of the padded samples restricted to the original grid.
Field fd_derivative(const Padded& p, const Grid& grid, const MultiIndex& gamma, double t) {
    std::vector<double> cur = p.data, next(p.data.size());
    for (int axis = 0; axis < p.n; ++axis) {
        if (gamma[axis] == 0) continue;
        const auto& st = fd_stencil(gamma[axis]);
        const double scale = std::pow(p.dx[axis], -gamma[axis]);
        std::fill(next.begin(), next.end(), 0.0);
        std::array<int, kMaxDim> stride{p.Q[1] * p.Q[2], p.Q[2], 1};
        for (int q = 0; q < p.comps; ++q) {
            const double* src = cur.data() + q * p.total;
            double* dst = next.data() + q * p.total;
            for (int a = 0; a < p.Q[0]; ++a)
                for (int b = 0; b < p.Q[1]; ++b)
                    for (int c = 0; c < p.Q[2]; ++c) {
                        const int idx3[3] = {a, b, c};
                        const int pos = idx3[axis];
                        if (pos < kPad || pos >= p.Q[axis] - kPad) continue;
                        const std::size_t k = p.index(a, b, c);
                        double s = 0.0;
                        for (int o = -st.half; o <= st.half; ++o)
                            s += st.w[o + 3] * src[k + static_cast<std::ptrdiff_t>(o) * stride[axis]];
                        dst[k] = s * scale;
                    }
        }
        std::swap(cur, next);
    }
    Field out(grid, p.comps, t);
    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
        const auto u = grid.unravel(idx);
        int a = u[0] + kPad, b = p.n > 1 ? u[1] + kPad : 0, c = p.n > 2 ? u[2] + kPad : 0;
        const std::size_t k = p.index(a, b, c);
        for (int q = 0; q < p.comps; ++q) out.component(q)[idx] = cur[q * p.total + k];
    }
    return out;
}

double largest_singular_value(const Eigen::Matrix3d& A) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
    es.computeDirect(A.transpose() * A, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

// sup_x ‖h(x)‖₂ for an m·m-component row-major matrix field.
double sup_operator_norm(const Field& h, int m) {
    double best = 0.0;
    for (std::size_t idx = 0; idx < h.points(); ++idx) {
        Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c) A(r, c) = h.component(r * m + c)[idx];
        best = std::max(best, largest_singular_value(A));
    }
    return best;
}

// Derivative source for one coefficient at one node.
class DerivativeSource {
public:
    DerivativeSource(const PointSampler* point, const Field* sampled, int comps, const Grid& grid,
                     double t)
        : grid_(grid), t_(t) {
        if (point && *point) {
            padded_ = sample_padded(*point, comps, grid, t);
            use_fd_ = true;
        } else {
            check_finite(*sampled, "coefficient");
            spectrum_.emplace(*sampled);
        }
    }

    Field derivative(const MultiIndex& gamma) const {
        if (use_fd_) return fd_derivative(padded_, grid_, gamma, t_);
        return spectrum_->derivative(gamma, t_);
    }

private:
    Grid grid_;
    double t_;
    bool use_fd_ = false;
    Padded padded_;
    std::optional<Spectrum> spectrum_;
};

void fill_orders(const DerivativeSource& src, int n, int max_j, std::vector<std::vector<double>>& out,
                 std::size_t node, std::vector<Field>* first_order) {
    for (int j = 0; j <= max_j; ++j) {
        double best = 0.0;
        for (const auto& gamma : multi_indices_of_order(n, j)) {
            Field d = src.derivative(gamma);
            best = std::max(best, d.max_abs());
            if (j == 1 && first_order) first_order->push_back(std::move(d));
        }
        out[j][node] = best;
    }
}

Envelope empty_envelope(std::span<const double> times, int n, int m, int order, MatrixNorm norm) {
    if (order < 0) throw std::invalid_argument("negative envelope order");
    check_nodes(times);
    Envelope env;
    env.n = n;
    env.m = m;
    env.order = order;
    env.times.assign(times.begin(), times.end());
    env.g.assign(order + 2, std::vector<double>(times.size(), 0.0));
    env.h.assign(order + 2, std::vector<double>(times.size(), 0.0));
    if (norm == MatrixNorm::spectral) {
        env.g_jacobian_spectral.assign(times.size(), 0.0);
        env.h_spectral.assign(times.size(), 0.0);
    }
    return env;
}

void fill_node(Envelope& env, std::size_t i, const DerivativeSource* g, const DerivativeSource* h,
               const Field* h_sample, MatrixNorm norm, const Grid& grid) {
    const int n = env.n, m = env.m;
    if (g) {
        std::vector<Field> first;
        fill_orders(*g, n, env.order + 1, env.g, i, &first);
        if (norm == MatrixNorm::spectral) {
            // first[b] holds ∂_b g (n comps); Jacobian entry (l, b) = component l of first[b].
            double best = 0.0;
            for (std::size_t idx = 0; idx < grid.size(); ++idx) {
                Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
                for (int l = 0; l < n; ++l)
                    for (int b = 0; b < n; ++b) A(l, b) = first[b].component(l)[idx];
                best = std::max(best, largest_singular_value(A));
            }
            env.g_jacobian_spectral[i] = best;
        }
    }
    if (h) {
        fill_orders(*h, n, env.order + 1, env.h, i, nullptr);
        if (norm == MatrixNorm::spectral) env.h_spectral[i] = sup_operator_norm(*h_sample, m);
    }
}

} // namespace

Envelope build_envelope(const CoefficientSet& coeffs, const Grid& grid,
                        std::span<const double> times, int order, MatrixNorm norm) {
    Envelope env = empty_envelope(times, coeffs.n, coeffs.m, order, norm);
    if (coeffs.n != grid.dim()) throw std::invalid_argument("coefficient dimension differs from grid");
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        std::optional<Field> gs, hs;
        std::optional<DerivativeSource> gsrc, hsrc;
        if (coeffs.has_g()) {
            if (!coeffs.g_point) gs = coeffs.g(t);
            gsrc.emplace(&coeffs.g_point, gs ? &*gs : nullptr, coeffs.n, grid, t);
        }
        if (coeffs.has_h()) {
            hs = coeffs.h(t);  // needed for the spectral norm either way
            check_finite(*hs, "h");
            hsrc.emplace(&coeffs.h_point, &*hs, coeffs.m * coeffs.m, grid, t);
        }
        fill_node(env, i, gsrc ? &*gsrc : nullptr, hsrc ? &*hsrc : nullptr, hs ? &*hs : nullptr,
                  norm, grid);
    }
    return env;
}

Envelope envelope_from_fields(std::span<const double> times, const std::vector<Field>& g,
                              const std::vector<Field>& h, int n, int m, int order,
                              MatrixNorm norm) {
    Envelope env = empty_envelope(times, n, m, order, norm);
    if (!g.empty() && g.size() != times.size())
        throw std::invalid_argument("one g field per node required");
    if (!h.empty() && h.size() != times.size())
        throw std::invalid_argument("one h field per node required");
    for (std::size_t i = 0; i < times.size(); ++i) {
        std::optional<DerivativeSource> gsrc, hsrc;
        if (!g.empty()) {
            if (g[i].components() != n) throw std::invalid_argument("g fields need n components");
            gsrc.emplace(nullptr, &g[i], n, g[i].grid(), times[i]);
        }
        if (!h.empty()) {
            if (h[i].components() != m * m) throw std::invalid_argument("h fields need m·m components");
            hsrc.emplace(nullptr, &h[i], m * m, h[i].grid(), times[i]);
        }
        const Grid& grid = !g.empty() ? g[i].grid() : h.empty() ? Grid{} : h[i].grid();
        if (!grid.valid()) break;
        fill_node(env, i, gsrc ? &*gsrc : nullptr, hsrc ? &*hsrc : nullptr,
                  h.empty() ? nullptr : &h[i], norm, grid);
    }
    return env;
}

IDisplacement displacement_I(const Envelope& env) {
    IDisplacement I;
    I.times = env.times;
    I.values = cumulative(env.times, env.g.at(0));
    return I;
}

double shifted_weighted_sup(const Field& field, const MultiIndex& alpha, double I_value,
                            double decay_tol) {
    const Grid& g = field.grid();
    const int n = g.dim();
    if (!(I_value >= 0.0)) throw std::invalid_argument("displacement must be non-negative");
    if (order(alpha) > 0) {
        if (g.periodic_native())
            throw std::invalid_argument("polynomial weights are undefined on the torus");
        const auto rep = decay_guard(field, decay_tol);
        if (!rep.pass)
            throw DomainTooSmall("field not decayed at the box edge (ratio " +
                                     std::to_string(rep.ratio) + ")",
                                 rep.ratio);
    }
    double best = 0.0;
    double x[kMaxDim] = {0, 0, 0};
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        double w = 1.0;
        if (order(alpha) > 0) {
            g.position(idx, x);
            for (int i = 0; i < n; ++i)
                if (alpha[i]) w *= std::pow(std::abs(x[i]) + I_value, alpha[i]);
        }
        for (int c = 0; c < field.components(); ++c)
            best = std::max(best, w * std::abs(field.component(c)[idx]));
    }
    return best;
}

// ---------------------------------------------------------------- heat data

std::size_t HeatData::alpha_index(const MultiIndex& alpha) const {
    for (std::size_t a = 0; a < alphas.size(); ++a)
        if (alphas[a] == alpha) return a;
    throw std::invalid_argument("weight not precomputed in heat data");
}

namespace {

// Θ_τ applied to a non-negative sampled field. The multiplier is the DFT of the sampled,
// periodized and normalized Gaussian kernel rather than exp(−ν|ξ|²τ): the discrete convolution of
// non-negative samples stays non-negative and free of the Gibbs ringing that kinks in |∂^γ f|
// would otherwise spread to the box edge.
std::function<double(const double*)> heat_multiplier(const Viscosity& nu, const Grid& grid,
                                                     double tau) {
    const int n = grid.dim();
    std::array<std::vector<double>, kMaxDim> tables;
    for (int a = 0; a < n; ++a) {
        const int P = grid.points(a);
        const double h = grid.spacing(a);
        auto& tab = tables[a];
        tab.assign(static_cast<std::size_t>(P), 1.0);
        const double var = 2.0 * nu.nu[a] * tau;  // kernel variance
        if (var <= 0.0) continue;
        std::vector<double> K(static_cast<std::size_t>(P));
        double sum = 0.0;
        for (int j = 0; j < P; ++j) {
            const double d = std::min(j, P - j) * h;
            K[j] = std::exp(-0.5 * d * d / var);
            sum += K[j];
        }
        for (int k = 0; k < P; ++k) {
            double c = 0.0;
            for (int j = 0; j < P; ++j)
                c += K[j] * std::cos(2.0 * std::numbers::pi * static_cast<double>((static_cast<long>(j) * k) % P) / P);
            tab[k] = c / sum;
        }
    }
    std::array<double, kMaxDim> scale{};
    std::array<int, kMaxDim> points{};
    for (int a = 0; a < n; ++a) {
        scale[a] = grid.half_width(a) / std::numbers::pi;
        points[a] = grid.points(a);
    }
    return [tables = std::move(tables), scale, points, n](const double* xi) {
        double v = 1.0;
        for (int a = 0; a < n; ++a) {
            long k = std::lround(xi[a] * scale[a]);
            if (k < 0) k += points[a];
            v *= tables[a][static_cast<std::size_t>(k)];
        }
        return v;
    };
}

// |∂^γ of a field| for every γ of order j, as spectra ready for heat smoothing.
std::vector<Field> abs_derivatives(const Field& f, int j) {
    Spectrum s(f);
    std::vector<Field> out;
    for (const auto& gamma : multi_indices_of_order(f.grid().dim(), j))
        out.push_back(abs(s.derivative(gamma, f.time())));
    return out;
}

std::vector<Field> abs_derivatives_fd(const PointSampler& fn, int comps, const Grid& grid,
                                      double t, int j) {
    const Padded p = sample_padded(fn, comps, grid, t);
    std::vector<Field> out;
    for (const auto& gamma : multi_indices_of_order(grid.dim(), j))
        out.push_back(abs(fd_derivative(p, grid, gamma, t)));
    return out;
}

// shifted_weighted_sup for several weights at once, with per-axis weight tables.
void shifted_sups(const Field& field, const std::vector<MultiIndex>& alphas, double I,
                  double decay_tol, std::vector<double>& out) {
    const Grid& g = field.grid();
    const int n = g.dim();
    out.assign(alphas.size(), 0.0);
    bool weighted = false;
    for (const auto& a : alphas) weighted = weighted || order(a) > 0;
    if (weighted) {
        if (g.periodic_native())
            throw std::invalid_argument("polynomial weights are undefined on the torus");
        const auto rep = decay_guard(field, decay_tol);
        if (!rep.pass)
            throw DomainTooSmall("field not decayed at the box edge (ratio " +
                                     std::to_string(rep.ratio) + ")",
                                 rep.ratio);
    }
    // tables[a][axis][j] = (|x_j| + I)^{α_axis}
    std::vector<std::array<std::vector<double>, kMaxDim>> tables(alphas.size());
    for (std::size_t a = 0; a < alphas.size(); ++a)
        for (int i = 0; i < n; ++i) {
            const auto x = g.coords(i);
            auto& t = tables[a][i];
            t.resize(x.size());
            for (std::size_t j = 0; j < x.size(); ++j)
                t[j] = alphas[a][i] ? std::pow(std::abs(x[j]) + I, alphas[a][i]) : 1.0;
        }
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
        double v = 0.0;
        for (int c = 0; c < field.components(); ++c) v = std::max(v, std::abs(field.component(c)[idx]));
        if (v == 0.0) continue;
        const auto u = g.unravel(idx);
        for (std::size_t a = 0; a < alphas.size(); ++a) {
            double w = v;
            for (int i = 0; i < n; ++i) w *= tables[a][i][u[i]];
            out[a] = std::max(out[a], w);
        }
    }
}

} // namespace

HeatData heat_data(const Field& f0, const CoefficientSet* coeffs, const Viscosity& nu,
                   const IDisplacement& I, std::vector<MultiIndex> alphas, int order,
                   double decay_tol) {
    if (order < 0) throw std::invalid_argument("negative order");
    if (alphas.empty()) alphas.push_back({0, 0, 0});
    check_nodes(I.times);
    const Grid& grid = f0.grid();
    const std::size_t N = I.times.size();
    const bool smooth = !nu.zero();

    HeatData hd;
    hd.times = I.times;
    hd.alphas = alphas;
    hd.order = order;
    const std::size_t A = alphas.size();
    hd.f0_terms.assign(A, std::vector<std::vector<double>>(order + 1, std::vector<double>(N, 0.0)));
    std::vector<double> sups;

    // Node differences repeat on uniform decompositions; reuse the kernel tables.
    std::map<double, std::function<double(const double*)>> kernels;
    auto kernel = [&](double tau) -> const std::function<double(const double*)>& {
        const double tol = 1e-13 * std::max(1.0, tau);
        auto it = kernels.lower_bound(tau - tol);
        if (it != kernels.end() && it->first <= tau + tol) return it->second;
        return kernels.emplace(tau, heat_multiplier(nu, grid, tau)).first->second;
    };

    for (int j = 0; j <= order; ++j) {
        for (const Field& d : abs_derivatives(f0, j)) {
            std::optional<Spectrum> spec;
            if (smooth) spec.emplace(d);
            for (std::size_t i = 0; i < N; ++i) {
                const double t = I.times[i];
                const Field sm = smooth && t > 0.0 ? spec->apply(kernel(t), t) : d;
                shifted_sups(sm, alphas, I.values[i], decay_tol, sups);
                for (std::size_t a = 0; a < A; ++a)
                    hd.f0_terms[a][j][i] = std::max(hd.f0_terms[a][j][i], sups[a]);
            }
        }
    }

    if (coeffs && coeffs->has_k()) {
        hd.k_terms.assign(A, std::vector<std::vector<std::vector<double>>>(
                                 order + 1, std::vector<std::vector<double>>(N)));
        for (std::size_t a = 0; a < A; ++a)
            for (int j = 0; j <= order; ++j)
                for (std::size_t i = 0; i < N; ++i) hd.k_terms[a][j][i].assign(i + 1, 0.0);
        for (std::size_t q = 0; q < N; ++q) {
            const double s = I.times[q];
            std::optional<Field> kq;
            if (!coeffs->k_point) {
                kq = coeffs->k(s);
                check_finite(*kq, "k");
            }
            for (int j = 0; j <= order; ++j) {
                const auto ds = coeffs->k_point
                                    ? abs_derivatives_fd(coeffs->k_point, coeffs->m, grid, s, j)
                                    : abs_derivatives(*kq, j);
                for (const Field& d : ds) {
                    std::optional<Spectrum> spec;
                    if (smooth) spec.emplace(d);
                    for (std::size_t i = q; i < N; ++i) {
                        const double tau = I.times[i] - s;
                        const Field sm =
                            smooth && tau > 0.0 ? spec->apply(kernel(tau), I.times[i]) : d;
                        const double shift = std::max(0.0, I.values[i] - I.values[q]);
                        shifted_sups(sm, alphas, shift, decay_tol, sups);
                        for (std::size_t a = 0; a < A; ++a)
                            hd.k_terms[a][j][i][q] = std::max(hd.k_terms[a][j][i][q], sups[a]);
                    }
                }
            }
        }
    }
    return hd;
}

// ---------------------------------------------------------------- bound evaluation

namespace {

double binomial(int K, int l) {
    double r = 1.0;
    for (int i = 1; i <= l; ++i) r = r * (K - l + i) / i;
    return r;
}

// Cumulative integrals of every envelope column.
struct Integrals {
    std::vector<std::vector<double>> G, H;  // G[j][i] = ∫_0^{t_i} g[j]
    std::vector<double> Gspec, Hspec;

    explicit Integrals(const Envelope& env) {
        for (const auto& c : env.g) G.push_back(cumulative(env.times, c));
        for (const auto& c : env.h) H.push_back(cumulative(env.times, c));
        if (!env.g_jacobian_spectral.empty()) {
            Gspec = cumulative(env.times, env.g_jacobian_spectral);
            Hspec = cumulative(env.times, env.h_spectral);
        }
    }
};

void check_inputs(int order, const Envelope& env, const IDisplacement& I, const HeatData& heat,
                  std::size_t node) {
    if (order < 0) throw std::invalid_argument("negative order");
    if (order > env.order) throw std::invalid_argument("envelope does not cover this order");
    if (order > heat.order) throw std::invalid_argument("heat data does not cover this order");
    if (node >= env.times.size()) throw std::out_of_range("bound node out of range");
    if (heat.times.size() != env.times.size() || I.times.size() != env.times.size())
        throw std::invalid_argument("envelope, displacement and heat data use different nodes");
}

double lower_value(std::span<const BoundCurve> lower, int l, std::size_t node) {
    for (const auto& c : lower)
        if (c.order == l && node < c.values.size()) return c.values[node];
    throw std::invalid_argument("missing lower-order bound value for order " + std::to_string(l));
}

// f0 term + k integral with the exponent E(s, t_i) = ∫_s^{t_i} rate.
double heat_terms(const HeatData& heat, std::size_t a, int order, std::size_t i,
                  const std::vector<double>& E) {
    const double first = heat.f0_terms[a][order][i] * std::exp(E[i] - E[0]);
    double ksum = 0.0;
    if (heat.has_k()) {
        const auto& row = heat.k_terms[a][order][i];
        for (std::size_t q = 1; q <= i; ++q) {
            const double dt = heat.times[q] - heat.times[q - 1];
            const double fq = row[q] * std::exp(E[i] - E[q]);
            const double fp = row[q - 1] * std::exp(E[i] - E[q - 1]);
            ksum += 0.5 * dt * (fq + fp);
        }
    }
    return first + ksum;
}

double linear_bound_impl(int K, std::size_t a, const Envelope& env, const Integrals& in,
                         const HeatData& heat, std::size_t i, std::span<const BoundCurve> lower,
                         const BoundOptions& opts) {
    const int n = env.n, m = env.m;
    const std::size_t N = env.times.size();
    std::vector<double> E(N);
    const bool spec = opts.norm == MatrixNorm::spectral;
    if (spec && in.Gspec.empty())
        throw std::invalid_argument("envelope lacks spectral-norm columns");
    for (std::size_t q = 0; q < N; ++q)
        E[q] = spec ? K * in.Gspec[q] + in.Hspec[q] : K * n * in.G[1][q] + m * in.H[0][q];
    double b = heat_terms(heat, a, K, i, E);
    if (K == 1) {
        b += lower_value(lower, 0, i) * m * in.H[1][i];
    } else if (K == 2) {
        b += (in.G[2][i] + 2.0 * m * in.H[1][i]) * lower_value(lower, 1, i);
        b += m * in.H[2][i] * lower_value(lower, 0, i);
    } else if (K >= 3) {
        for (int l = 0; l < K; ++l) {
            const double C = binomial(K, l) * std::pow(n, K - l) * m;
            b += C * lower_value(lower, l, i) * (in.G[K - l + 1][i] + in.H[K - l][i]);
        }
    }
    return b;
}

double vorticity_bound_impl(int K, std::size_t a, const Envelope& u, const Integrals& in,
                            const HeatData& heat, std::size_t i,
                            std::span<const BoundCurve> lower) {
    const std::size_t N = u.times.size();
    std::vector<double> E(N);
    for (std::size_t q = 0; q < N; ++q) E[q] = 3.0 * (K + 1) * in.G[1][q];
    double b = heat_terms(heat, a, K, i, E);
    if (K == 1) {
        b += 3.0 * in.G[2][i] * lower_value(lower, 0, i);
    } else if (K == 2) {
        b += 9.0 * in.G[2][i] * lower_value(lower, 1, i);
        b += 3.0 * in.G[3][i] * lower_value(lower, 0, i);
    } else if (K >= 3) {
        // g = u and h = ∇u: both integrals are ∫‖∂^{K−l+1} u‖.
        for (int l = 0; l < K; ++l) {
            const double C = binomial(K, l) * std::pow(3.0, K - l) * 3.0;
            b += C * lower_value(lower, l, i) * 2.0 * in.G[K - l + 1][i];
        }
    }
    return b;
}

template <class Eval>
std::vector<BoundCurve> curves(const MultiIndex& alpha, int max_order,
                               const std::vector<double>& times, Eval&& eval) {
    std::vector<BoundCurve> out;
    for (int K = 0; K <= max_order; ++K) {
        BoundCurve c;
        c.order = K;
        c.alpha = alpha;
        c.times = times;
        c.conservative = K >= 3;
        c.values.resize(times.size());
        for (std::size_t i = 0; i < times.size(); ++i) c.values[i] = eval(K, i, out);
        out.push_back(std::move(c));
    }
    return out;
}

} // namespace

double linear_bound(int order, const MultiIndex& alpha, const Envelope& env, const IDisplacement& I,
                    const HeatData& heat, std::size_t node, std::span<const BoundCurve> lower,
                    const BoundOptions& opts) {
    check_inputs(order, env, I, heat, node);
    const Integrals in(env);
    return linear_bound_impl(order, heat.alpha_index(alpha), env, in, heat, node, lower, opts);
}

std::vector<BoundCurve> linear_bounds(const MultiIndex& alpha, int max_order, const Envelope& env,
                                      const IDisplacement& I, const HeatData& heat,
                                      const BoundOptions& opts) {
    check_inputs(max_order, env, I, heat, 0);
    const Integrals in(env);
    const std::size_t a = heat.alpha_index(alpha);
    return curves(alpha, max_order, env.times,
                  [&](int K, std::size_t i, const std::vector<BoundCurve>& lower) {
                      return linear_bound_impl(K, a, env, in, heat, i, lower, opts);
                  });
}

double vorticity_bound(int order, const MultiIndex& alpha, const Envelope& u_env,
                       const IDisplacement& I, const HeatData& omega0_heat, std::size_t node,
                       std::span<const BoundCurve> lower) {
    check_inputs(order, u_env, I, omega0_heat, node);
    const Integrals in(u_env);
    const std::size_t a = omega0_heat.alpha_index(alpha);
    if (u_env.n == 2) {
        Envelope e2 = u_env;
        e2.m = 1;
        for (auto& c : e2.h) std::fill(c.begin(), c.end(), 0.0);
        const Integrals in2(e2);
        return linear_bound_impl(order, a, e2, in2, omega0_heat, node, lower, {});
    }
    if (u_env.n != 3) throw std::invalid_argument("vorticity bounds need n = 2 or 3");
    return vorticity_bound_impl(order, a, u_env, in, omega0_heat, node, lower);
}

std::vector<BoundCurve> vorticity_bounds(const MultiIndex& alpha, int max_order,
                                         const Envelope& u_env, const IDisplacement& I,
                                         const HeatData& omega0_heat) {
    check_inputs(max_order, u_env, I, omega0_heat, 0);
    if (u_env.n == 2) {
        Envelope e2 = u_env;
        e2.m = 1;
        for (auto& c : e2.h) std::fill(c.begin(), c.end(), 0.0);
        return linear_bounds(alpha, max_order, e2, I, omega0_heat);
    }
    if (u_env.n != 3) throw std::invalid_argument("vorticity bounds need n = 2 or 3");
    const Integrals in(u_env);
    const std::size_t a = omega0_heat.alpha_index(alpha);
    return curves(alpha, max_order, u_env.times,
                  [&](int K, std::size_t i, const std::vector<BoundCurve>& lower) {
                      return vorticity_bound_impl(K, a, u_env, in, omega0_heat, i, lower);
                  });
}

// ---------------------------------------------------------------- closed forms and recursions

double burgers_existence_time(const Field& u0) {
    if (!u0.all_finite()) throw std::domain_error("non-finite initial velocity");
    const int n = u0.grid().dim();
    Spectrum s(u0);
    double best = 0.0;
    for (int j = 0; j < n; ++j) {
        MultiIndex e{0, 0, 0};
        e[j] = 1;
        best = std::max(best, s.derivative(e, u0.time()).max_abs());
    }
    if (best == 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / (n * best);
}

double gronwall_c1(double c10, int n, double t) {
    if (n < 1) throw std::invalid_argument("dimension must be positive");
    const double denom = 1.0 - n * c10 * t;
    if (!(denom > 0.0)) {
        const double pole = c10 > 0.0 ? 1.0 / (n * c10) : std::numeric_limits<double>::infinity();
        throw PoleError("Gronwall closed form evaluated at or beyond its pole", pole);
    }
    return c10 / denom;
}

BoundCurve integrate_recursive_bound(int order, const std::function<double(double)>& A,
                                     const std::function<double(double)>& B,
                                     std::span<const double> nodes, Feedback feedback) {
    check_nodes(nodes);
    BoundCurve c;
    c.order = order;
    c.times.assign(nodes.begin(), nodes.end());
    c.values.resize(nodes.size());
    c.values[0] = A(nodes[0]);
    double J = 0.0;  // ∫ C up to the current node
    const double inf = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        const double h = nodes[i] - nodes[i - 1];
        const double a = A(nodes[i]), b = B(nodes[i]);
        const double prev = c.values[i - 1];
        if (!std::isfinite(prev)) {
            c.values[i] = inf;
            continue;
        }
        if (feedback == Feedback::linear) {
            const double denom = 1.0 - 0.5 * h * b;
            if (!(denom > 0.0)) throw std::invalid_argument("step too large for the feedback rate");
            const double Ci = (a + b * (J + 0.5 * h * prev)) / denom;
            J += 0.5 * h * (prev + Ci);
            c.values[i] = Ci;
        } else {
            // J_i = J_{i−1} + h/2 (C_{i−1} + a·exp(b·J_i)), solved by Newton.
            const double base = J + 0.5 * h * prev;
            double x = J + h * prev;
            bool ok = false;
            for (int it = 0; it < 100; ++it) {
                const double e = a * std::exp(b * x);
                const double F = x - base - 0.5 * h * e;
                const double dF = 1.0 - 0.5 * h * b * e;
                if (!(dF > 0.0) || !std::isfinite(e)) break;
                const double step = F / dF;
                x -= step;
                if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(x))) {
                    ok = true;
                    break;
                }
            }
            if (!ok) {
                c.values[i] = inf;  // past the pole of the recursion
                continue;
            }
            J = x;
            c.values[i] = a * std::exp(b * x);
        }
    }
    return c;
}

// ---------------------------------------------------------------- blow-up detection

BlowupEstimate detect_blowup(const SeminormTrace& trace) {
    BlowupEstimate best;
    best.message = "no blow-up detected";
    const std::size_t N = trace.times.size();
    if (N < 5) {
        best.message = "no blow-up detected (fewer than 5 nodes)";
        return best;
    }
    const std::size_t start = N - std::max<std::size_t>(5, static_cast<std::size_t>(std::ceil(0.4 * N)));
    for (std::size_t k = 0; k < trace.pairs.size(); ++k) {
        const auto& v = trace.values[k];
        std::vector<double> ts, ys, vs;
        for (std::size_t i = std::max<std::size_t>(start, 1); i < N; ++i) {
            if (!(v[i] > v[i - 1]) || !(v[i] > 0.0) || !std::isfinite(v[i])) continue;
            ts.push_back(trace.times[i]);
            ys.push_back(1.0 / v[i]);
            vs.push_back(v[i]);
        }
        if (ts.size() < 5) continue;
        if (vs.back() < 1.5 * vs.front()) continue;
        Eigen::MatrixXd X(ts.size(), 2);
        Eigen::VectorXd y(ts.size());
        for (std::size_t i = 0; i < ts.size(); ++i) {
            X(i, 0) = 1.0;
            X(i, 1) = ts[i];
            y(i) = ys[i];
        }
        const Eigen::Vector2d coef = X.colPivHouseholderQr().solve(y);
        const double a = coef(0), b = coef(1);
        if (!(b < 0.0)) continue;
        const double Tstar = -a / b, C = -1.0 / b;
        if (!(Tstar > ts.back())) continue;
        double r = 0.0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const double model = C / (Tstar - ts[i]);
            r += std::pow((model - vs[i]) / vs[i], 2);
        }
        r = std::sqrt(r / ts.size());
        // The series that follows the reciprocal law most closely is reported.
        if (!best.detected || r < best.residual) {
            best.detected = true;
            best.T_star = Tstar;
            best.C = C;
            best.residual = r;
            best.pair = trace.pairs[k];
            best.message = "blow-up fit on " + trace.pairs[k].label(trace.n);
        }
    }
    return best;
}

void write_bounds_csv(std::ostream& os, int n, std::span<const double> times,
                      const std::vector<MultiIndexPair>& pairs,
                      const std::vector<std::vector<double>>& values) {
    if (values.size() != pairs.size()) throw std::invalid_argument("one bound series per pair");
    os << "t";
    for (const auto& p : pairs) os << "," << p.label(n);
    os << "\n" << std::setprecision(17);
    for (std::size_t i = 0; i < times.size(); ++i) {
        os << times[i];
        for (const auto& s : values) os << "," << s.at(i);
        os << "\n";
    }
}

} // namespace schwartz
