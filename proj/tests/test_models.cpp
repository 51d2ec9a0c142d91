#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "schwartz/models.hpp"

#include <cmath>
#include <numbers>

using namespace schwartz;
using Span = std::span<const double>;
using Out = std::span<double>;

namespace {

const double kPi = std::numbers::pi;

Grid torus2(int P = 32) { return make_grid(2, kPi, P, true); }

Field taylor_green_u(const Grid& g) {
    return sample_field(
        [](Span x, Out o) {
            o[0] = std::sin(x[0]) * std::cos(x[1]);
            o[1] = -std::cos(x[0]) * std::sin(x[1]);
        },
        g, 2);
}

Field taylor_green_omega(const Grid& g) {
    return sample_scalar([](Span x) { return 2.0 * std::sin(x[0]) * std::sin(x[1]); }, g);
}

Field gauss(const Grid& g) {
    return sample_scalar([](Span x) { return std::exp(-x[0] * x[0]); }, g);
}

double max_component(const Field& f, int c) {
    double m = 0.0;
    for (double v : f.component(c)) m = std::max(m, std::abs(v));
    return m;
}

std::vector<double> steps_gaps(const Field& u0, double T, const Field& exact, std::initializer_list<int> steps) {
    std::vector<double> gaps;
    for (int N : steps) {
        const auto dec = make_decomposition(T, N);
        gaps.push_back(max_abs_difference(solve_delayed(u0, burgers_builder(1), {}, dec.mesh(), T, dec, {}).final_state(), exact));
    }
    return gaps;
}

} // namespace

TEST_CASE("curl_div") {
    const Grid g2 = torus2();
    const auto tg = curl_div(taylor_green_u(g2));
    CHECK(max_abs_difference(tg.omega, taylor_green_omega(g2)) < 1e-12);
    CHECK(tg.div_max < 1e-12);

    const auto zero = curl_div(Field(g2, 2));
    CHECK(zero.omega.max_abs() == 0.0);
    CHECK(zero.div_max == 0.0);

    const Grid g3 = make_grid(3, kPi, 16, true);
    const Field u = sample_field([](Span x, Out o) { o[0] = 0; o[1] = 0; o[2] = std::sin(x[0]); }, g3, 3);
    const auto c = curl_div(u);
    REQUIRE(c.omega.components() == 3);
    const Field expect = sample_field([](Span x, Out o) { o[0] = 0; o[1] = -std::cos(x[0]); o[2] = 0; }, g3, 3);
    CHECK(max_abs_difference(c.omega, expect) < 1e-12);

    CHECK_THROWS(curl_div(Field(g2, 1)));
}

TEST_CASE("biot_savart") {
    const Grid g = torus2();
    CHECK(max_abs_difference(biot_savart(taylor_green_omega(g)), taylor_green_u(g)) < 1e-12);
    CHECK(biot_savart(Field(g, 1)).max_abs() == 0.0);

    // curl ∘ biot_savart is the identity on mean-free vorticity
    const Grid g3 = make_grid(3, kPi, 16, true);
    const Field w = sample_field(
        [](Span x, Out o) {
            o[0] = std::sin(x[1] + x[2]);
            o[1] = std::sin(x[2] + x[0]);
            o[2] = std::sin(x[0] + x[1]);
        },
        g3, 3);
    const Field u3 = biot_savart(w);
    CHECK(divergence_max(u3) < 1e-10);
    CHECK(max_abs_difference(curl_div(u3).omega, w) < 1e-12);
}

TEST_CASE("biot_savart: radial vortex gives tangential velocity") {
    // A shielded Gaussian: radial with zero circulation, so the box's periodic images do not
    // break the symmetry (a bare Gaussian leaves an O(1e-5) image strain at L = 8).
    const Grid g = make_grid(2, 8.0, 128, false);
    const Field w = sample_scalar(
        [](Span x) {
            const double r2 = x[0] * x[0] + x[1] * x[1];
            return (1.0 - r2) * std::exp(-r2);
        },
        g);
    std::vector<std::string> warnings;
    const Field u = biot_savart(w, &warnings);
    CHECK(divergence_max(u) < 1e-10);
    const Field wx = spectral_derivative(w, {1, 0}), wy = spectral_derivative(w, {0, 1});
    double adv = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        adv = std::max(adv, std::abs(u.component(0)[i] * wx.data()[i] + u.component(1)[i] * wy.data()[i]));
    CHECK(adv < 1e-8);
    CHECK(warnings.empty());

    // A bare Gaussian has positive mass: its mean is removed and reported.
    const Field bare = sample_scalar([](Span x) { return std::exp(-x[0] * x[0] - x[1] * x[1]); }, g);
    biot_savart(bare, &warnings);
    CHECK(warnings.size() == 1);
}

TEST_CASE("vorticity_coefficients") {
    const Grid g2 = torus2();
    const auto s2 = vorticity_snapshot(taylor_green_u(g2));
    REQUIRE(s2.g);
    CHECK(max_abs_difference(*s2.g, scaled(taylor_green_u(g2), -1.0)) == 0.0);
    CHECK((!s2.h || s2.h->max_abs() == 0.0));
    CHECK((!s2.k || s2.k->max_abs() == 0.0));

    const Grid g3 = make_grid(3, kPi, 16, true);
    const Field u = sample_field([](Span x, Out o) { o[0] = 0; o[1] = 0; o[2] = std::sin(x[0]); }, g3, 3);
    const auto s3 = vorticity_snapshot(u);
    REQUIRE(s3.h);
    REQUIRE(s3.h->components() == 9);
    const Field cosx = sample_scalar([](Span x) { return std::cos(x[0]); }, g3);
    for (int e = 0; e < 9; ++e) {
        if (e == 2 * 3 + 0) {
            double err = 0.0;
            for (std::size_t i = 0; i < g3.size(); ++i)
                err = std::max(err, std::abs(s3.h->component(e)[i] - cosx.data()[i]));
            CHECK(err < 1e-12);
        } else {
            CHECK(max_component(*s3.h, e) < 1e-12);
        }
    }

    const auto z = vorticity_snapshot(Field(g3, 3));
    CHECK(z.g->max_abs() == 0.0);
    CHECK(z.h->max_abs() == 0.0);

    const auto set = vorticity_coefficients(u);
    CHECK(set.n == 3);
    CHECK(set.m == 3);
    CHECK(max_abs_difference(set.g(0.0), scaled(u, -1.0)) == 0.0);
    CHECK(max_abs_difference(set.h(0.7), *s3.h) == 0.0);
}

TEST_CASE("Taylor–Green vorticity: steady without viscosity, e^{-2νt} with") {
    const Grid g = torus2();
    const Field w0 = taylor_green_omega(g);
    const auto dec = make_decomposition(1.0, 32);

    const auto inviscid = evolve_vorticity(w0, {}, 1.0, dec, {});
    CHECK(max_abs_difference(inviscid.trajectory.final_state(), w0) < 0.01 * w0.max_abs());

    const double nu = 0.1;
    // straight-line transport is first order even on a steady flow; 128 steps keep it below 1%
    const auto viscous = evolve_vorticity(w0, Viscosity::isotropic(2, nu), 1.0, make_decomposition(1.0, 128), {});
    CHECK(max_abs_difference(viscous.trajectory.final_state(), scaled(w0, std::exp(-2.0 * nu))) <
          0.01 * w0.max_abs());
    for (std::size_t i = 1; i < viscous.energy.size(); ++i)
        CHECK(viscous.energy[i] <= viscous.energy[i - 1] * (1.0 + 1e-3));
    CHECK(viscous.energy.back() == doctest::Approx(viscous.energy.front() * std::exp(-4.0 * nu)).epsilon(0.01));
    for (double d : viscous.div_u) CHECK(d < 1e-10);
}

TEST_CASE("Gaussian vortex keeps its peak") {
    const Grid g = make_grid(2, 8.0, 64, false);
    const Field w0 = sample_scalar([](Span x) { return std::exp(-x[0] * x[0] - x[1] * x[1]); }, g);
    const auto r = evolve_vorticity(w0, {}, 1.0, make_decomposition(1.0, 16), {});
    for (double s : r.omega_sup) CHECK(s == doctest::Approx(r.omega_sup.front()).epsilon(0.01));
    CHECK(r.bkm.back() == doctest::Approx(bkm_integral(r.times, r.omega_sup)));
}

TEST_CASE("monitors") {
    const Grid g = make_grid(2, kPi, 64, true);
    CHECK(energy(taylor_green_u(g)) == doctest::Approx(2.0 * kPi * kPi).epsilon(1e-12));
    CHECK(energy(Field(g, 2)) == 0.0);

    const std::vector<double> t{0.0, 0.25, 0.5, 1.0}, two(4, 2.0);
    CHECK(bkm_integral(t, two) == doctest::Approx(2.0));

    const Grid line = make_grid(1, 4.0, 256, false);
    const Field bump = sample_scalar(
        [](Span x) { return std::abs(x[0]) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - x[0] * x[0])) : 0.0; }, line);
    const double zero[1] = {0.0};
    CHECK(std::abs(support_radius(bump, zero) - 1.0) <= line.spacing(0));
    CHECK(support_radius(Field(line, 1), zero) == 0.0);
}

TEST_CASE("burgers_blowup") {
    const Grid g = make_grid(1, 8.0, 1024, false);
    const auto b = burgers_blowup(gauss(g));
    CHECK(b.T2 == doctest::Approx(std::sqrt(std::numbers::e / 2.0)).epsilon(1e-6));
    CHECK(b.T1 == doctest::Approx(-b.T2).epsilon(1e-6));
    CHECK(b.T1 < 0.0);
    CHECK(b.sup_derivative(0.0) == doctest::Approx(std::sqrt(2.0 / std::numbers::e)).epsilon(1e-6));
    const double m = std::sqrt(2.0 / std::numbers::e);
    CHECK(b.sup_derivative(0.5) == doctest::Approx(m / (1.0 - 0.5 * m)).epsilon(1e-6));
    CHECK(b.sup_derivative(0.5) == doctest::Approx(1.5019).epsilon(1e-4));
    CHECK_THROWS(burgers_blowup(Field(g, 1)));
}

TEST_CASE("burgers_oracle") {
    const Grid g = make_grid(1, 8.0, 1024, false);
    const Field u0 = gauss(g);
    CHECK(max_abs_difference(burgers_oracle(u0, 0.0), u0) < 1e-12);
    const Field u = burgers_oracle(u0, 0.5);
    CHECK(u.max_abs() == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(spectral_derivative(u, {1}).max_abs() == doctest::Approx(1.5019).epsilon(2e-3));
    CHECK_THROWS(burgers_oracle(u0, 1.2));
}

TEST_CASE("Burgers splitting converges to the oracle at first order") {
    const Grid g = make_grid(1, 12.0, 2048, false);
    const Field u0 = gauss(g);
    const double T = 0.5 * burgers_blowup(u0).T2;
    const auto gaps = steps_gaps(u0, T, burgers_oracle(u0, T), {32, 64, 128});
    for (std::size_t i = 1; i < gaps.size(); ++i) {
        const double order = std::log2(gaps[i - 1] / gaps[i]);
        CHECK(order == doctest::Approx(1.0).epsilon(0.25));
    }
}

TEST_CASE("cole_hopf") {
    const Grid g = make_grid(1, 12.0, 1024, false);
    const Field u0 = gauss(g);
    CHECK(max_abs_difference(cole_hopf(u0, 0.5, 0.0), u0) < 1e-8);
    CHECK(cole_hopf(u0, 5.0, 1.0).max_abs() < u0.max_abs());

    const double nu = 0.5, T = 1.0;
    const auto dec = make_decomposition(T, 256);
    const Field split =
        solve_delayed(u0, burgers_builder(1), Viscosity::isotropic(1, nu), dec.mesh(), T, dec, {}).final_state();
    const Field exact = cole_hopf(u0, nu, T);
    CHECK(max_abs_difference(split, exact) < 0.01 * exact.max_abs());
}
