#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "schwartz/propagators.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

using namespace schwartz;
using Span = std::span<const double>;
using Out = std::span<double>;

namespace {

Grid line() { return make_grid(1, 8.0, 256, false); }

Field gauss(const Grid& g, double shift = 0.0) {
    return sample_scalar([shift](Span x) { return std::exp(-(x[0] + shift) * (x[0] + shift)); }, g);
}

CoefficientSet with_g(const Grid& g, PointSampler fn) { return coefficients_from_functions(g, 1, fn, {}, {}); }

bool bitwise_equal(const Field& a, const Field& b) {
    return std::equal(a.data().begin(), a.data().end(), b.data().begin(), b.data().end());
}

} // namespace

TEST_CASE("heat_step: Gaussian convolution") {
    const Grid g = line();
    const Field f = heat_step(gauss(g), Viscosity::isotropic(1, 1.0), 0.25);
    // variance ½ → ½ + 2νt = 1: (1/√2) e^{-x²/2}
    const Field exact = sample_scalar([](Span x) { return std::exp(-x[0] * x[0] / 2) / std::sqrt(2.0); }, g);
    CHECK(max_abs_difference(f, exact) < 1e-12);
    CHECK(f.max_abs() == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(bitwise_equal(heat_step(gauss(g), Viscosity::isotropic(1, 0.0), 0.3), gauss(g)));
    CHECK_THROWS(heat_step(gauss(g), Viscosity::isotropic(1, 1.0), -0.1));
}

TEST_CASE("heat_step semigroup, mean and maximum principle") {
    const Grid g = make_grid(2, 5.0, 64, false);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Field f(g, 1);
    for (double& v : f.data()) v = u(rng);  // rough data: the max principle must still hold
    Viscosity nu;
    nu.nu = {0.3, 0.1, 0.0};
    const Field a = heat_step(heat_step(f, nu, 0.2), nu, 0.35);
    const Field b = heat_step(f, nu, 0.55);
    CHECK(max_abs_difference(a, b) < 1e-12);

    double m0 = 0.0, m1 = 0.0;
    for (double v : f.data()) m0 += v;
    for (double v : b.data()) m1 += v;
    CHECK(std::abs(m0 - m1) < 1e-12 * g.size());
    for (double dt : {1e-3, 0.05, 1.0}) CHECK(heat_step(f, nu, dt).max_abs() <= f.max_abs() + 1e-12);
}

TEST_CASE("transport_step") {
    const Grid g = line();
    const Field f = gauss(g);
    const auto one = with_g(g, [](Span, double, Out o) { o[0] = 1.0; });
    CHECK(max_abs_difference(transport_step(f, one, 0.0, 0.5), gauss(g, 0.5)) < 1e-9);

    const auto none = with_g(g, [](Span, double, Out o) { o[0] = 0.0; });
    CHECK(max_abs_difference(transport_step(f, none, 0.0, 0.5), f) < 1e-14);

    // ∫₀¹ s ds = ½, exact under the trapezoid rule
    const auto lin = with_g(g, [](Span, double t, Out o) { o[0] = t; });
    CHECK(max_abs_difference(transport_step(f, lin, 0.0, 1.0), gauss(g, 0.5)) < 1e-9);
}

TEST_CASE("multiply_step") {
    const Grid g = line();
    const Field f = gauss(g);
    const auto two = coefficients_from_functions(g, 1, {}, [](Span, double, Out o) { o[0] = 2.0; }, {});
    const Field r = multiply_step(f, two, 0.0, 0.1);
    CHECK(r.max_abs() == doctest::Approx(std::exp(0.2)).epsilon(1e-13));
    CHECK(max_abs_difference(r, scaled(f, std::exp(0.2))) < 1e-13);

    const auto zero = coefficients_from_functions(g, 1, {}, [](Span, double, Out o) { o[0] = 0.0; }, {});
    CHECK(max_abs_difference(multiply_step(f, zero, 0.0, 0.7), f) == 0.0);

    // rotation generator: exp(π/2 · J) maps (a, b) to (−b, a)
    const Field v = sample_field(
        [](Span x, Out o) {
            o[0] = std::exp(-x[0] * x[0]);
            o[1] = x[0] * std::exp(-x[0] * x[0]);
        },
        g, 2);
    const auto rot = coefficients_from_functions(
        g, 2, {},
        [](Span, double, Out o) {
            o[0] = 0.0;
            o[1] = -1.0;
            o[2] = 1.0;
            o[3] = 0.0;
        },
        {});
    const Field w = multiply_step(v, rot, 0.0, std::numbers::pi / 2);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        err = std::max(err, std::abs(w.component(0)[i] + v.component(1)[i]));
        err = std::max(err, std::abs(w.component(1)[i] - v.component(0)[i]));
    }
    CHECK(err < 1e-10);
}

TEST_CASE("multiply_step is exact for commuting time-constant h") {
    const Grid g = line();
    const Field v = sample_field(
        [](Span x, Out o) {
            o[0] = std::exp(-x[0] * x[0]);
            o[1] = std::cos(x[0]) * std::exp(-x[0] * x[0]);
        },
        g, 2);
    // h(x) = a(x) I + b(x) N with N nilpotent: e^{h dt} = e^{a dt}(I + b dt N)
    const auto coeffs = coefficients_from_functions(
        g, 2, {},
        [](Span x, double, Out o) {
            o[0] = std::sin(x[0]);
            o[1] = 0.5 * x[0];
            o[2] = 0.0;
            o[3] = std::sin(x[0]);
        },
        {});
    const double dt = 0.4;
    const Field w = multiply_step(v, coeffs, 1.0, dt);
    const auto x = g.coords(0);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double e = std::exp(std::sin(x[i]) * dt), b = 0.5 * x[i] * dt;
        err = std::max(err, std::abs(w.component(0)[i] - e * (v.component(0)[i] + b * v.component(1)[i])));
        err = std::max(err, std::abs(w.component(1)[i] - e * v.component(1)[i]));
    }
    CHECK(err < 1e-12);
}

TEST_CASE("expm_small against eigen decomposition of a symmetric 3x3") {
    // A = Q diag(λ) Qᵀ with a Householder Q
    const double v[3] = {1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0)};
    const double lam[3] = {-1.5, 0.25, 2.0};
    double Q[9], A[9] = {}, E[9] = {}, out[9];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) Q[i * 3 + j] = (i == j ? 1.0 : 0.0) - 2.0 * v[i] * v[j];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) {
                A[i * 3 + j] += Q[i * 3 + k] * lam[k] * Q[j * 3 + k];
                E[i * 3 + j] += Q[i * 3 + k] * std::exp(lam[k]) * Q[j * 3 + k];
            }
    expm_small(3, A, out);
    for (int i = 0; i < 9; ++i) CHECK(out[i] == doctest::Approx(E[i]).epsilon(1e-12));
}

TEST_CASE("source_step") {
    const Grid g = line();
    const Field f = gauss(g, 1.0);
    const auto k = coefficients_from_functions(g, 1, {}, {}, [](Span x, double, Out o) { o[0] = std::exp(-x[0] * x[0]); });
    CHECK(max_abs_difference(source_step(f, k, 0.0, 0.3), combine(1.0, f, 0.3, gauss(g))) < 1e-15);

    const auto zero = coefficients_from_functions(g, 1, {}, {}, [](Span, double, Out o) { o[0] = 0.0; });
    CHECK(max_abs_difference(source_step(f, zero, 0.0, 0.3), f) == 0.0);

    // ∫₀¹ 2s ds e^{-x²} = e^{-x²}; linear in s, so the trapezoid is exact at any panel count
    const auto lin = coefficients_from_functions(
        g, 1, {}, {}, [](Span x, double t, Out o) { o[0] = 2.0 * t * std::exp(-x[0] * x[0]); });
    for (double q : {0.5, 1.0 / 64}) {
        StepOptions so;
        so.quad_dt = q;
        CHECK(max_abs_difference(source_step(f, lin, 0.0, 1.0, so), combine(1.0, f, 1.0, gauss(g))) < 1e-6);
    }
    // a quadratic integrand converges at second order
    const auto quad = coefficients_from_functions(
        g, 1, {}, {}, [](Span x, double t, Out o) { o[0] = 3.0 * t * t * std::exp(-x[0] * x[0]); });
    StepOptions two, many;
    two.quad_dt = 0.5;
    many.quad_dt = 1.0 / 64;
    const Field target = combine(1.0, f, 1.0, gauss(g));
    const double e2 = max_abs_difference(source_step(f, quad, 0.0, 1.0, two), target);
    const double e64 = max_abs_difference(source_step(f, quad, 0.0, 1.0, many), target);
    CHECK(e2 < 0.26);  // (b−a)³/(12·4)·6
    CHECK(e64 < 1e-3 * e2 * 1.01);
}

TEST_CASE("StepOptions panel count") {
    StepOptions so;
    CHECK(so.panels(0.1) == 4);
    so.quad_dt = 0.03;
    CHECK(so.panels(0.1) == 4);
    so.quad_dt = 1.0;
    CHECK(so.panels(0.1) == 2);
}

TEST_CASE("scaling_step seminorm law") {
    const Grid g = make_grid(1, 12.0, 1024, false);
    const Field f0 = sample_scalar([](Span x) { return (1.0 + 0.3 * std::sin(2 * x[0])) * std::exp(-x[0] * x[0]); }, g);
    const double a[1] = {1.0};
    CHECK(bitwise_equal(scaling_step(f0, std::array<double, 1>{0.0}, 0.5), f0));
    const double t = 0.4;
    const Field f = scaling_step(f0, a, t, InterpolationOptions{8, 10});
    for (auto [al, be] : {std::pair{1, 0}, std::pair{0, 1}, std::pair{2, 1}, std::pair{1, 2}}) {
        MultiIndexPair p;
        p.alpha[0] = al;
        p.beta[0] = be;
        const double expect = std::exp((be - al) * t) * weighted_seminorm_refined(f0, p);
        CHECK(weighted_seminorm_refined(f, p) == doctest::Approx(expect).epsilon(1e-6));
    }
    CHECK_THROWS(scaling_step(f0, std::array<double, 1>{-1.0}, 1.0));
}

TEST_CASE("every step with dt = 0 is the identity, bitwise") {
    const Grid g = make_grid(2, 6.0, 32, false);
    const Field f = sample_field(
        [](Span x, Out o) {
            o[0] = std::exp(-x[0] * x[0] - x[1] * x[1]);
            o[1] = x[1] * std::exp(-x[0] * x[0] - 2 * x[1] * x[1]);
        },
        g, 2);
    const auto c = coefficients_from_functions(
        g, 2, [](Span x, double, Out o) { o[0] = x[1]; o[1] = 1.0; },
        [](Span, double, Out o) { o[0] = 1; o[1] = 2; o[2] = 3; o[3] = 4; },
        [](Span x, double, Out o) { o[0] = x[0]; o[1] = 1.0; });
    CHECK(bitwise_equal(heat_step(f, Viscosity::isotropic(2, 0.5), 0.0), f));
    CHECK(bitwise_equal(transport_step(f, c, 0.2, 0.0), f));
    CHECK(bitwise_equal(multiply_step(f, c, 0.2, 0.0), f));
    CHECK(bitwise_equal(source_step(f, c, 0.2, 0.0), f));
}
