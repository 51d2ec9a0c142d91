#include "schwartz/experiment.hpp"

#include "schwartz/field_io.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace schwartz {

namespace {

using Span = std::span<const double>;

double r2(Span x, int n, const double* c = nullptr) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = x[i] - (c ? c[i] : 0.0);
        s += d * d;
    }
    return s;
}

std::vector<MultiIndexPair> pairs(std::initializer_list<std::pair<MultiIndex, MultiIndex>> l) {
    std::vector<MultiIndexPair> out;
    for (const auto& [a, b] : l) out.push_back({a, b});
    return out;
}

// C^∞ bump with support [0, 1): exp(1 − 1/(1 − s²)).
double bump(double s) {
    if (s >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

ExperimentConfig base(const std::string& name, int n) {
    ExperimentConfig c;
    c.name = name;
    c.preset = name;
    c.n = n;
    c.directory = "runs/" + name;
    return c;
}

// ---- linear demo system (two components in 2D)

void demo_g(Span x, double t, std::span<double> out) {
    out[0] = t * x[0] / (1.0 + x[0] * x[0]);
    out[1] = std::exp(t);
}

void demo_h(Span x, double t, std::span<double> out) {
    out[0] = t * t * t * std::cos(x[0] - 2.0 * x[1]);
    out[1] = t / (1.0 + x[1] * x[1] + t);
    out[2] = t * std::exp(-x[0] * x[0]);
    out[3] = 5.0;
}

void demo_k(Span x, double t, std::span<double> out) {
    out[0] = x[0] * x[0] * std::exp(-x[0] * x[0] - x[1] * x[1]);
    out[1] = std::exp(-std::pow(x[0], 4) - x[1] * x[1] + t * t * t);
}

Problem linear_demo(const ExperimentConfig& cfg) {
    if (cfg.n != 2) throw std::invalid_argument("linear-demo is two-dimensional");
    const Grid g = cfg.make_grid();
    Problem p;
    p.f0 = sample_field(
        [](Span x, std::span<double> out) {
            out[0] = std::sin(x[0]) * std::exp(-x[0] * x[0] - 2.0 * std::pow(x[1], 4));
            out[1] = std::exp(-3.0 * std::pow(x[0], 4) - x[1] * x[1]) / (2.0 + std::cos(x[1] - x[0]));
        },
        g, 2);
    p.coeffs = linear_demo_coefficients(g);
    return p;
}

Problem burgers_gauss(const ExperimentConfig& cfg) {
    if (cfg.n != 1) throw std::invalid_argument("burgers1d-gauss is one-dimensional");
    Problem p;
    p.f0 = sample_scalar([](Span x) { return std::exp(-x[0] * x[0]); }, cfg.make_grid());
    return p;
}

Problem burgers_nd(const ExperimentConfig& cfg) {
    const int n = cfg.n;
    Problem p;
    p.f0 = sample_field(
        [n](Span x, std::span<double> out) {
            for (int i = 0; i < n; ++i) {
                double c[kMaxDim] = {0, 0, 0};
                c[i] = 0.25 * i;
                out[i] = std::exp(-r2(x, n, c)) / (1.0 + i);
            }
        },
        cfg.make_grid(), n);
    return p;
}

Problem taylor_green(const ExperimentConfig& cfg) {
    if (cfg.n != 2) throw std::invalid_argument("tg2d is two-dimensional");
    Problem p;
    p.f0 = sample_scalar([](Span x) { return 2.0 * std::sin(x[0]) * std::sin(x[1]); },
                         cfg.make_grid());
    return p;
}

Problem gauss_vortex(const ExperimentConfig& cfg) {
    if (cfg.n != 2) throw std::invalid_argument("gauss-vortex-2d is two-dimensional");
    Problem p;
    p.f0 = sample_scalar([](Span x) { return std::exp(-r2(x, 2)); }, cfg.make_grid());
    return p;
}

constexpr double kVortexRadius = 5.0;
constexpr double kVortexSharpness = 16.0;  // ψ = bump(s)^c: Gaussian-like core, resolvable at 32³

Problem compact_vortex(const ExperimentConfig& cfg) {
    if (cfg.n != 3) throw std::invalid_argument("compact-vortex-3d is three-dimensional");
    // u₀ = curl(0, 0, ψ) with ψ = bump(|x|/R)^c, ω₀ = curl u₀. Both are compactly supported and
    // ∫u₀ = 0, so the Biot–Savart velocity decays like |x|⁻⁴ instead of |x|⁻³.
    // With q = 1 − s²: ψ_ij = B x_i x_j + A δ_ij, A = ψ'/r, B = (ψ'' − ψ'/r)/r².
    Problem p;
    p.f0 = sample_field(
        [](Span x, std::span<double> out) {
            const double R = kVortexRadius;
            const double s = std::sqrt(r2(x, 3)) / R;
            out[0] = out[1] = out[2] = 0.0;
            if (s >= 1.0) return;
            const double c = kVortexSharpness;
            const double q = 1.0 - s * s, b = std::pow(bump(s), c);
            const double A = -2.0 * c * b / (q * q * R * R);
            const double B = b * (4.0 * c * c / (q * q * q * q) - 8.0 * c / (q * q * q)) / (R * R * R * R);
            out[0] = B * x[0] * x[2];
            out[1] = B * x[1] * x[2];
            out[2] = -(B * (x[0] * x[0] + x[1] * x[1]) + 2.0 * A);
        },
        cfg.make_grid(), 3);
    return p;
}

Problem nonschwartz(const ExperimentConfig& cfg) {
    if (cfg.n != 2) throw std::invalid_argument("nonschwartz-2d is two-dimensional");
    Problem p;
    p.f0 = sample_scalar([](Span x) { return x[0] * std::pow(1.0 + r2(x, 2), -3.0); },
                         cfg.make_grid());
    return p;
}

std::vector<PresetInfo> build_presets() {
    std::vector<PresetInfo> v;

    v.push_back({"burgers1d-gauss", "inviscid 1D Burgers, u0 = exp(-x^2)",
                 [] {
                     auto c = base("burgers1d-gauss", 1);
                     c.model = ModelKind::burgers;
                     c.L = {12.0, 12.0, 12.0};
                     c.P = {4096, 1, 1};
                     c.T = 1.0;
                     c.N0 = 64;
                     c.tol = 1e-2;
                     c.max_doublings = 6;
                     c.monitors = pairs({{{0}, {0}}, {{0}, {1}}, {{1}, {0}}, {{1}, {1}}});
                     return c;
                 },
                 burgers_gauss});

    v.push_back({"burgers-nd", "inviscid vector Burgers in n dimensions (default 2), Gaussian data",
                 [] {
                     auto c = base("burgers-nd", 2);
                     c.model = ModelKind::burgers;
                     c.L = {8.0, 8.0, 8.0};
                     c.P = {128, 128, 1};
                     c.T = 0.5;
                     c.N0 = 16;
                     c.tol = 5e-2;
                     c.max_doublings = 3;
                     c.monitors = pairs({{{0, 0}, {0, 0}}, {{0, 0}, {1, 0}}, {{0, 0}, {0, 1}}, {{1, 0}, {0, 0}}});
                     return c;
                 },
                 burgers_nd});

    v.push_back({"tg2d", "2D Taylor-Green vorticity on the torus",
                 [] {
                     auto c = base("tg2d", 2);
                     c.model = ModelKind::vorticity;
                     c.periodic = true;
                     c.L = {std::numbers::pi, std::numbers::pi, std::numbers::pi};
                     c.P = {256, 256, 1};
                     c.T = 1.0;
                     c.N0 = 16;
                     c.tol = 1e-2;
                     c.max_doublings = 3;
                     c.monitors = pairs({{{0, 0}, {0, 0}}, {{0, 0}, {1, 0}}, {{0, 0}, {0, 2}}});
                     return c;
                 },
                 taylor_green});

    v.push_back({"gauss-vortex-2d", "2D Gaussian vortex (radially symmetric steady Euler state)",
                 [] {
                     auto c = base("gauss-vortex-2d", 2);
                     c.model = ModelKind::vorticity;
                     c.L = {8.0, 8.0, 8.0};
                     c.P = {128, 128, 1};
                     c.T = 1.0;
                     c.N0 = 16;
                     c.tol = 1e-2;
                     c.max_doublings = 3;
                     c.monitors = pairs({{{0, 0}, {0, 0}}, {{1, 0}, {0, 0}}, {{0, 0}, {1, 0}}, {{1, 1}, {0, 1}}});
                     return c;
                 },
                 gauss_vortex});

    v.push_back({"compact-vortex-3d", "3D compact swirl, u0 = curl(0,0,bump(|x|/5)^16), omega0 = curl u0",
                 [] {
                     auto c = base("compact-vortex-3d", 3);
                     c.model = ModelKind::vorticity;
                     c.L = {6.0, 6.0, 6.0};
                     c.P = {32, 32, 32};
                     c.T = 0.5;
                     c.N0 = 8;
                     c.tol = 5e-2;
                     c.max_doublings = 2;
                     c.bound_nodes = 17;
                     // Local interpolation: spectral refinement would spread the under-resolved
                     // edge ringing across the box and swamp the support monitor.
                     c.interp = {1, 6};
                     // The Biot–Savart velocity decays like |x|^-4, not faster.
                     c.decay_tol = 1e-4;
                     c.monitors = pairs({{{0, 0, 0}, {0, 0, 0}}, {{0, 0, 0}, {1, 0, 0}}, {{1, 0, 0}, {0, 0, 0}}, {{0, 0, 1}, {0, 1, 0}}});
                     return c;
                 },
                 compact_vortex});

    v.push_back({"linear-demo", "two-component 2D linear system with variable coefficients",
                 [] {
                     auto c = base("linear-demo", 2);
                     c.model = ModelKind::linear;
                     c.L = {20.0, 20.0, 20.0};
                     c.P = {512, 512, 1};
                     c.nu = {2.0, 3.0, 0.0};
                     c.T = 1.0;
                     c.N0 = 32;
                     c.tol = 1e-2;
                     c.max_doublings = 3;
                     c.strang = true;
                     c.bound_nodes = 9;
                     c.monitors = all_pairs(2, 2, 2);
                     return c;
                 },
                 linear_demo});

    v.push_back({"random-linear", "seeded random 2D linear system (two components)",
                 [] {
                     auto c = base("random-linear", 2);
                     c.model = ModelKind::linear;
                     c.seed = 1;
                     c.L = {10.0, 10.0, 10.0};
                     c.P = {128, 128, 1};
                     c.nu = {0.2, 0.1, 0.0};
                     c.T = 0.5;
                     c.N0 = 16;
                     c.tol = 1e-2;
                     c.max_doublings = 3;
                     c.bound_nodes = 17;
                     c.monitors = all_pairs(2, 2, 2);
                     return c;
                 },
                 [](const ExperimentConfig& cfg) { return random_linear_problem(cfg.seed, cfg.make_grid()); }});

    v.push_back({"nonschwartz-2d", "2D Euler with algebraically decaying vorticity x1 (1+|x|^2)^-3",
                 [] {
                     auto c = base("nonschwartz-2d", 2);
                     c.model = ModelKind::vorticity;
                     c.L = {16.0, 16.0, 16.0};
                     c.P = {128, 128, 1};
                     c.T = 0.5;
                     c.N0 = 8;
                     c.tol = 5e-2;
                     c.max_doublings = 2;
                     c.bound_nodes = 21;
                     c.decay_tol = std::numeric_limits<double>::infinity();
                     c.monitors = pairs({{{0, 0}, {0, 0}}, {{1, 0}, {0, 0}}, {{0, 1}, {0, 0}},
                                            {{2, 0}, {0, 0}}, {{1, 1}, {0, 0}}, {{0, 2}, {0, 0}},
                                            {{0, 0}, {1, 0}}, {{0, 0}, {0, 1}}, {{1, 0}, {1, 0}},
                                            {{0, 1}, {0, 1}}, {{1, 0}, {0, 1}}});
                     c.report_only = pairs({{{3, 0}, {0, 0}}, {{2, 0}, {1, 0}}, {{0, 0}, {2, 0}},
                                               {{4, 0}, {0, 0}}});
                     return c;
                 },
                 nonschwartz});
    return v;
}

} // namespace

const std::vector<PresetInfo>& presets() {
    static const std::vector<PresetInfo> v = build_presets();
    return v;
}

const PresetInfo& find_preset(const std::string& name) {
    for (const auto& p : presets())
        if (p.name == name) return p;
    throw std::invalid_argument("unknown preset '" + name + "'");
}

CoefficientSet linear_demo_coefficients(const Grid& grid) {
    return coefficients_from_functions(grid, 2, demo_g, demo_h, demo_k);
}

Problem random_linear_problem(std::uint64_t seed, const Grid& grid) {
    if (grid.dim() != 2) throw std::invalid_argument("random linear problems are two-dimensional");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(-1.0, 1.0), pos(-1.5, 1.5), freq(0.5, 3.0);
    constexpr int m = 2;

    struct Bump {
        double a, c[2], w, om, ph;
    };
    auto draw = [&] {
        Bump b{amp(rng), {pos(rng), pos(rng)}, 0.6 + 0.4 * (amp(rng) + 1.0), freq(rng), pos(rng)};
        return b;
    };
    auto eval = [](const Bump& b, Span x, double t) {
        const double d0 = x[0] - b.c[0], d1 = x[1] - b.c[1];
        return b.a * std::exp(-(d0 * d0 + d1 * d1) / (b.w * b.w)) * std::cos(b.om * t + b.ph);
    };
    // g: constant drift + localized swirl; h: localized entries; k: Gaussian sources.
    const double drift[2] = {0.5 * amp(rng), 0.5 * amp(rng)};
    std::array<Bump, 2> gb{draw(), draw()};
    std::array<Bump, 4> hb{draw(), draw(), draw(), draw()};
    std::array<Bump, 2> kb{draw(), draw()};
    std::array<Bump, 2> fb{draw(), draw()};

    auto g = [=](Span x, double t, std::span<double> out) {
        for (int l = 0; l < 2; ++l) out[l] = drift[l] + eval(gb[l], x, t);
    };
    auto h = [=](Span x, double t, std::span<double> out) {
        for (int e = 0; e < 4; ++e) out[e] = eval(hb[e], x, t);
    };
    auto k = [=](Span x, double t, std::span<double> out) {
        for (int i = 0; i < m; ++i) out[i] = 0.5 * eval(kb[i], x, t);
    };
    Problem p;
    p.f0 = sample_field(
        [&](Span x, std::span<double> out) {
            for (int i = 0; i < m; ++i) {
                const double d0 = x[0] - fb[i].c[0], d1 = x[1] - fb[i].c[1];
                out[i] = fb[i].a * std::exp(-(d0 * d0 + d1 * d1) / (fb[i].w * fb[i].w));
            }
        },
        grid, m);
    p.coeffs = coefficients_from_functions(grid, m, g, h, k);
    return p;
}

Problem make_problem(const ExperimentConfig& cfg) {
    if (!cfg.preset.empty()) return find_preset(cfg.preset).make(cfg);
    const Grid g = cfg.make_grid();
    const int n = cfg.n;
    const int m = cfg.model == ModelKind::linear    ? static_cast<int>(cfg.amplitudes.size())
                  : cfg.model == ModelKind::burgers ? n
                                                    : (n == 2 ? 1 : 3);
    Problem p;
    if (cfg.initial_kind == "file") {
        p.f0 = read_field_binary(cfg.initial_path, cfg.periodic);
        if (!p.f0.grid().same_as(g))
            throw std::invalid_argument("initial field file does not match the configured grid");
    } else if (cfg.initial_kind == "taylor-green") {
        if (n != 2) throw std::invalid_argument("taylor-green initial data is two-dimensional");
        p.f0 = sample_scalar([](Span x) { return 2.0 * std::sin(x[0]) * std::sin(x[1]); }, g);
    } else if (cfg.initial_kind == "gaussian") {
        const auto amps = cfg.amplitudes;
        const double w = cfg.width;
        p.f0 = sample_field(
            [&](Span x, std::span<double> out) {
                const double e = std::exp(-r2(x, n) / (w * w));
                for (int c = 0; c < m; ++c)
                    out[c] = amps[static_cast<std::size_t>(c) % amps.size()] * e;
            },
            g, m);
    } else {
        throw std::invalid_argument("unknown initial kind '" + cfg.initial_kind + "'");
    }
    if (p.f0.components() != m)
        throw std::invalid_argument("initial data has " + std::to_string(p.f0.components()) +
                                    " components, model needs " + std::to_string(m));
    if (cfg.model == ModelKind::linear) {
        const auto drift = cfg.drift;
        const auto growth = cfg.growth;
        PointSampler gs, hs;
        if (drift[0] != 0.0 || drift[1] != 0.0 || drift[2] != 0.0)
            gs = [drift, n](Span, double, std::span<double> out) {
                for (int i = 0; i < n; ++i) out[i] = drift[i];
            };
        if (!growth.empty()) {
            if (growth.size() != static_cast<std::size_t>(m * m))
                throw std::invalid_argument("physics.h must hold m*m entries");
            hs = [growth](Span, double, std::span<double> out) {
                std::copy(growth.begin(), growth.end(), out.begin());
            };
        }
        p.coeffs = coefficients_from_functions(g, m, gs, hs, {});
    }
    return p;
}

} // namespace schwartz
