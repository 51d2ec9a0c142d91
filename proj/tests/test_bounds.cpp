#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "schwartz/bounds.hpp"
#include "schwartz/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace schwartz;
using Span = std::span<const double>;
using Out = std::span<double>;

namespace {

Field gauss(const Grid& g) {
    return sample_scalar([](Span x) { return std::exp(-x[0] * x[0]); }, g);
}

std::vector<double> uniform_nodes(double T, int N) { return make_decomposition(T, N).nodes; }

// Constant-in-time envelope with given sups per derivative order.
Envelope flat_envelope(int n, int m, int order, std::span<const double> times, std::vector<double> g,
                       std::vector<double> h) {
    Envelope e;
    e.n = n;
    e.m = m;
    e.order = order;
    e.times.assign(times.begin(), times.end());
    g.resize(order + 2, 0.0);
    h.resize(order + 2, 0.0);
    for (int j = 0; j <= order + 1; ++j) {
        e.g.emplace_back(times.size(), g[j]);
        e.h.emplace_back(times.size(), h[j]);
    }
    return e;
}

bool non_decreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] < v[i - 1]) return false;
    return true;
}

} // namespace

TEST_CASE("build_envelope") {
    const Grid g = make_grid(1, 8.0, 256, false);
    const auto t = uniform_nodes(1.0, 4);

    const auto one = build_envelope(coefficients_from_functions(g, 1, [](Span, double, Out o) { o[0] = 1.0; }, {}, {}),
                                    g, t, 2);
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(one.g[0][i] == 1.0);
        CHECK(std::abs(one.g[1][i]) < 1e-12);
        CHECK(std::abs(one.g[2][i]) < 1e-9);
    }

    const auto nil = build_envelope(
        coefficients_from_functions(g, 2, {}, [](Span, double, Out o) { o[0] = 0; o[1] = 1; o[2] = 0; o[3] = 0; }, {}),
        g, t, 1);
    CHECK(nil.h[0][2] == 1.0);
    CHECK(std::abs(nil.h[1][2]) < 1e-12);
    CHECK(nil.g[0][2] == 0.0);

    const auto th = build_envelope(
        coefficients_from_functions(g, 1, [](Span x, double, Out o) { o[0] = std::tanh(x[0]); }, {}, {}), g, t, 1);
    CHECK(th.g[1][0] == doctest::Approx(1.0).epsilon(1e-4));  // finite-difference envelope
    CHECK(th.g[0][0] == doctest::Approx(std::tanh(8.0)).epsilon(1e-12));
}

TEST_CASE("displacement_I") {
    const Grid g = make_grid(1, 8.0, 64, false);
    const auto t = uniform_nodes(2.0, 1000);
    const auto I1 = displacement_I(
        build_envelope(coefficients_from_functions(g, 1, [](Span, double, Out o) { o[0] = -1.0; }, {}, {}), g, t, 0));
    CHECK(I1.values.front() == 0.0);
    CHECK(I1.values.back() == doctest::Approx(2.0).epsilon(1e-12));
    const auto I0 = displacement_I(build_envelope(CoefficientSet{}, g, t, 0));
    for (double v : I0.values) CHECK(v == 0.0);
    const auto Is = displacement_I(
        build_envelope(coefficients_from_functions(g, 1, [](Span, double s, Out o) { o[0] = s; }, {}, {}), g, t, 0));
    CHECK(Is.values.back() == doctest::Approx(2.0).epsilon(1e-6));  // t²/2
    CHECK(non_decreasing(Is.values));
}

TEST_CASE("shifted_weighted_sup") {
    const Grid g = make_grid(1, 8.0, 4096, false);
    const Field f = gauss(g);
    CHECK(shifted_weighted_sup(f, {1}, 0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::e)).epsilon(1e-6));
    // max of (x+1)e^{-x²}: 2x² + 2x − 1 = 0
    const double xs = (std::sqrt(3.0) - 1.0) / 2.0;
    CHECK(shifted_weighted_sup(f, {1}, 1.0) == doctest::Approx((xs + 1.0) * std::exp(-xs * xs)).epsilon(1e-6));
    CHECK(shifted_weighted_sup(f, {0}, 3.0) == f.max_abs());

    const Grid g2 = make_grid(2, 6.0, 64, false);
    const Field s = sample_scalar([](Span x) { return (x[0] - 0.3 * x[1]) * std::exp(-x[0] * x[0] - x[1] * x[1]); }, g2);
    for (const auto& p : all_pairs(2, 2, 0))
        CHECK(shifted_weighted_sup(abs(s), p.alpha, 0.0) == weighted_seminorm(abs(s), p));
}

TEST_CASE("linear bounds: no coefficients give the heat envelope") {
    const Grid g = make_grid(1, 12.0, 512, false);
    const Field f0 = gauss(g);
    const auto t = uniform_nodes(1.0, 8);
    const Viscosity nu = Viscosity::isotropic(1, 0.5);
    const auto env = build_envelope(CoefficientSet{}, g, t, 1);
    const auto I = displacement_I(env);
    const auto heat = heat_data(f0, nullptr, nu, I, {{0}, {1}}, 1);
    const auto b0 = linear_bounds({0}, 1, env, I, heat);
    for (std::size_t i = 0; i < t.size(); ++i)
        CHECK(b0[0].values[i] == doctest::Approx(1.0 / std::sqrt(1.0 + 4.0 * 0.5 * t[i])).epsilon(1e-6));
    // consistency at t = 0: the initial seminorms themselves
    CHECK(b0[0].values[0] == f0.max_abs());
    CHECK(b0[1].values[0] == weighted_seminorm(f0, MultiIndexPair{{0}, {1}}));
    const auto b1 = linear_bounds({1}, 0, env, I, heat);
    CHECK(b1[0].values[0] == weighted_seminorm(f0, MultiIndexPair{{1}, {0}}));
}

TEST_CASE("linear bound: constant growth rate") {
    const Grid g = make_grid(1, 12.0, 512, false);
    const Field f0 = gauss(g);
    const auto t = uniform_nodes(1.0, 10);
    const double c = 0.8;
    const auto coeffs = coefficients_from_functions(g, 1, {}, [c](Span, double, Out o) { o[0] = c; }, {});
    const auto env = build_envelope(coeffs, g, t, 0);
    const auto I = displacement_I(env);
    const Viscosity nu = Viscosity::isotropic(1, 0.25);
    const auto heat = heat_data(f0, &coeffs, nu, I, {{0}}, 0);
    const auto b = linear_bounds({0}, 0, env, I, heat);
    for (std::size_t i = 0; i < t.size(); ++i)
        CHECK(b[0].values[i] ==
              doctest::Approx(std::exp(c * t[i]) / std::sqrt(1.0 + 4.0 * 0.25 * t[i])).epsilon(1e-6));
}

TEST_CASE("linear bound: first order grows with exp of the drift gradient integral") {
    const Grid g = make_grid(1, 12.0, 512, false);
    const Field f0 = gauss(g);
    const auto t = uniform_nodes(0.8, 16);
    const double C1 = 0.857;
    const auto env = flat_envelope(1, 1, 1, t, {0.0, C1}, {});
    const auto I = displacement_I(env);
    const auto heat = heat_data(f0, nullptr, Viscosity{}, I, {{0}}, 1);
    const auto b = linear_bounds({0}, 1, env, I, heat);
    for (std::size_t i = 0; i < t.size(); ++i)
        CHECK(b[1].values[i] / b[1].values[0] == doctest::Approx(std::exp(C1 * t[i])).epsilon(1e-12));
}

TEST_CASE("bound curves are monotone in time and in the envelope") {
    const Grid g = make_grid(1, 12.0, 256, false);
    const Field f0 = sample_scalar([](Span x) { return (1.0 + x[0]) * std::exp(-x[0] * x[0]); }, g);
    const auto t = uniform_nodes(1.0, 8);
    const Viscosity nu = Viscosity::isotropic(1, 0.1);
    std::vector<BoundCurve> base;
    const std::vector<double> gs{0.4, 0.6, 0.3, 0.2}, hs{0.5, 0.2, 0.1, 0.1};
    {
        const auto env = flat_envelope(1, 1, 2, t, gs, hs);
        const auto I = displacement_I(env);
        base = linear_bounds({1}, 2, env, I, heat_data(f0, nullptr, nu, I, {{1}}, 2));
    }
    for (const auto& c : base) CHECK(non_decreasing(c.values));
    for (std::size_t k = 0; k < gs.size(); ++k)
        for (int which = 0; which < 2; ++which) {
            auto g2 = gs, h2 = hs;
            (which ? h2 : g2)[k] *= 1.5;
            const auto env = flat_envelope(1, 1, 2, t, g2, h2);
            const auto I = displacement_I(env);
            const auto bumped = linear_bounds({1}, 2, env, I, heat_data(f0, nullptr, nu, I, {{1}}, 2));
            for (std::size_t o = 0; o < base.size(); ++o)
                for (std::size_t i = 0; i < t.size(); ++i) CHECK(bumped[o].values[i] >= base[o].values[i]);
        }
}

TEST_CASE("domination on a small linear problem") {
    const Grid g = make_grid(1, 12.0, 512, false);
    const Field f0 = sample_scalar([](Span x) { return std::exp(-(x[0] - 0.5) * (x[0] - 0.5)); }, g);
    const auto coeffs = coefficients_from_functions(
        g, 1, [](Span x, double, Out o) { o[0] = 0.5 * std::tanh(x[0]); },
        [](Span x, double t, Out o) { o[0] = 0.3 * std::exp(-x[0] * x[0]) * std::cos(t); },
        [](Span x, double t, Out o) { o[0] = 0.2 * t * std::exp(-x[0] * x[0]); });
    const Viscosity nu = Viscosity::isotropic(1, 0.1);
    std::vector<MultiIndexPair> pairs = all_pairs(1, 1, 2);
    const auto dec = make_decomposition(1.0, 128);
    const auto tr = solve_linear(f0, coeffs, nu, dec, pairs).seminorms.subsampled(16);
    const auto env = build_envelope(coeffs, g, tr.times, 2);
    const auto I = displacement_I(env);
    const auto heat = heat_data(f0, &coeffs, nu, I, {{0}, {1}}, 2);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto curves = linear_bounds(pairs[p].alpha, 2, env, I, heat);
        const auto& bound = curves[order(pairs[p].beta)].values;
        for (std::size_t i = 0; i < tr.nodes(); ++i) CHECK(tr.values[p][i] <= 1.01 * bound[i]);
    }
}

TEST_CASE("vorticity bound in 3D") {
    const Grid g = make_grid(3, 6.0, 16, false);
    const Field w0 = sample_field(
        [](Span x, Out o) {
            const double e = std::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
            o[0] = x[1] * e;
            o[1] = -x[0] * e;
            o[2] = 0.0;
        },
        g, 3);
    const auto t = uniform_nodes(0.5, 5);
    const auto zero = flat_envelope(3, 3, 1, t, {}, {});
    const auto I0 = displacement_I(zero);
    const auto heat = heat_data(w0, nullptr, Viscosity{}, I0, {{0, 0, 0}}, 1);
    for (std::size_t i = 0; i < t.size(); ++i)
        CHECK(vorticity_bound(0, {0, 0, 0}, zero, I0, heat, i, {}) == doctest::Approx(w0.max_abs()).epsilon(1e-14));

    const double c = 0.7;
    const auto grad = flat_envelope(3, 3, 1, t, {0.0, c, 0.0}, {});
    const auto I = displacement_I(grad);
    const auto curves = vorticity_bounds({0, 0, 0}, 0, grad, I, heat_data(w0, nullptr, Viscosity{}, I, {{0, 0, 0}}, 0));
    for (std::size_t i = 0; i < t.size(); ++i)
        CHECK(curves[0].values[i] == doctest::Approx(w0.max_abs() * std::exp(3.0 * c * t[i])).epsilon(1e-12));
}

TEST_CASE("burgers_existence_time") {
    const Grid g = make_grid(1, 8.0, 1024, false);
    CHECK(burgers_existence_time(gauss(g)) == doctest::Approx(std::sqrt(std::numbers::e / 2.0)).epsilon(1e-4));  // grid sup of u'
    CHECK(std::isinf(burgers_existence_time(Field(g, 1))));
    const Grid g2 = make_grid(2, 8.0, 128, false);
    // u = (sin-free Gaussian ridge scaled so max |∂_j u_i| = 2)
    const double s = 2.0 / std::sqrt(2.0 / std::numbers::e);
    const Field u = sample_field(
        [s](Span x, Out o) {
            o[0] = s * std::exp(-x[0] * x[0] - x[1] * x[1]);
            o[1] = 0.5 * std::exp(-x[0] * x[0] - x[1] * x[1]);
        },
        g2, 2);
    CHECK(burgers_existence_time(u) == doctest::Approx(0.25).epsilon(1e-3));
}

TEST_CASE("gronwall_c1") {
    CHECK(gronwall_c1(1.0, 1, 0.5) == doctest::Approx(2.0));
    CHECK(gronwall_c1(0.3, 2, 0.0) == 0.3);
    try {
        gronwall_c1(1.0, 1, 1.0);
        FAIL("expected a pole error");
    } catch (const PoleError& e) {
        CHECK(e.pole() == doctest::Approx(1.0));
    }
}

TEST_CASE("integrate_recursive_bound") {
    const auto nodes = uniform_nodes(2.0, 1000);
    auto at = [&](const BoundCurve& c, double t) {
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (std::abs(nodes[i] - t) < 1e-12) return c.values[i];
        return std::nan("");
    };
    const auto flat = integrate_recursive_bound(1, [](double) { return 1.0; }, [](double) { return 0.0; }, nodes);
    for (double v : flat.values) CHECK(v == 1.0);
    const auto e1 = integrate_recursive_bound(1, [](double) { return 1.0; }, [](double) { return 1.0; }, nodes);
    CHECK(at(e1, 1.0) == doctest::Approx(std::numbers::e).epsilon(1e-4));
    const auto e2 = integrate_recursive_bound(2, [](double) { return 2.0; }, [](double) { return 0.5; }, nodes);
    CHECK(at(e2, 2.0) == doctest::Approx(2.0 * std::numbers::e).epsilon(1e-4));
}

TEST_CASE("Gronwall closed form equals the exponential self-feedback recursion") {
    const double c10 = std::sqrt(2.0 / std::numbers::e);
    const int n = 1;
    const double pole = 1.0 / (n * c10);
    const auto nodes = uniform_nodes(0.9 * pole, 2000);
    const auto c = integrate_recursive_bound(1, [c10](double) { return c10; }, [n](double) { return double(n); },
                                             nodes, Feedback::exponential);
    for (std::size_t i = 0; i < nodes.size(); i += 100)
        CHECK(c.values[i] == doctest::Approx(gronwall_c1(c10, n, nodes[i])).epsilon(1e-3));
}

TEST_CASE("detect_blowup") {
    SeminormTrace tr(1, {MultiIndexPair{}, MultiIndexPair{{0}, {1}}});
    for (int i = 0; i <= 90; ++i) {
        const double t = i * 0.01;
        tr.append(t, {2.0, 1.0 / (1.0 - t)});
    }
    const auto est = detect_blowup(tr);
    CHECK(est.detected);
    CHECK(est.T_star == doctest::Approx(1.0).epsilon(0.02));
    CHECK(est.C == doctest::Approx(1.0).epsilon(0.02));
    CHECK(est.pair == MultiIndexPair{{0}, {1}});

    SeminormTrace flat(1, {MultiIndexPair{}});
    for (int i = 0; i <= 20; ++i) flat.append(0.05 * i, {1.0});
    const auto none = detect_blowup(flat);
    CHECK_FALSE(none.detected);
    CHECK(none.message.find("no blow-up detected") != std::string::npos);

    // Among growing series the one closest to C/(T*−t) is reported.
    SeminormTrace two(1, {MultiIndexPair{}, MultiIndexPair{{0}, {1}}});
    for (int i = 0; i <= 90; ++i) {
        const double t = i * 0.01;
        two.append(t, {std::exp(3.0 * t), 2.0 / (1.2 - t)});
    }
    const auto best = detect_blowup(two);
    CHECK(best.pair == MultiIndexPair{{0}, {1}});
    CHECK(best.T_star == doctest::Approx(1.2).epsilon(1e-6));
}

TEST_CASE("bounds CSV has the trace layout") {
    std::ostringstream os;
    const std::vector<double> t{0.0, 0.5};
    write_bounds_csv(os, 2, t, {MultiIndexPair{{1, 0}, {0, 1}}}, {{1.0, 2.0}});
    CHECK(os.str().rfind("t,a10_b01\n", 0) == 0);
}
