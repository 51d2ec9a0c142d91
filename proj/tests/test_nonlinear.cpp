#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "schwartz/models.hpp"
#include "schwartz/nonlinear.hpp"

#include <cmath>

using namespace schwartz;
using Span = std::span<const double>;
using Out = std::span<double>;

namespace {

Field gauss(const Grid& g) {
    return sample_scalar([](Span x) { return std::exp(-x[0] * x[0]); }, g);
}

MultiIndexPair beta1(int b) {
    MultiIndexPair p;
    p.beta[0] = b;
    return p;
}

bool bitwise_equal(const Field& a, const Field& b) {
    return std::equal(a.data().begin(), a.data().end(), b.data().begin(), b.data().end());
}

CoefficientSet fixed_coeffs(const Grid& g) {
    return coefficients_from_functions(
        g, 1, [](Span x, double t, Out o) { o[0] = 0.3 * std::tanh(x[0]) + 0.1 * t; },
        [](Span x, double, Out o) { o[0] = -0.2 * std::exp(-x[0] * x[0]); },
        [](Span x, double t, Out o) { o[0] = 0.1 * t * std::exp(-x[0] * x[0]); });
}

} // namespace

TEST_CASE("lag snapping and schedule") {
    const auto dec = make_decomposition(1.0, 10);
    CHECK(lag_steps(0.1, dec) == 1);
    CHECK(lag_steps(0.3, dec) == 3);
    CHECK(lag_steps(0.01, dec) == 1);
    CHECK_THROWS(lag_steps(0.0, dec));
    CHECK(default_eps_schedule(8) == std::vector<int>{8, 16, 32, 64, 128, 256});
    CHECK(default_eps_schedule(4, 2) == std::vector<int>{4, 8});
}

TEST_CASE("state-independent builder reproduces solve_linear bit for bit, for every lag") {
    const Grid g = make_grid(1, 10.0, 128, false);
    const auto c = fixed_coeffs(g);
    const auto dec = make_decomposition(1.0, 16);
    const Viscosity nu = Viscosity::isotropic(1, 0.1);
    const Field lin = solve_linear(gauss(g), c, nu, dec, {beta1(1)}).final_state();
    const auto b = CoefficientBuilder::constant(c);
    for (double eps : {1.0 / 16, 0.25, 0.5}) {
        const auto tr = solve_delayed(gauss(g), b, nu, eps, 1.0, dec, {beta1(1)});
        CHECK(bitwise_equal(tr.final_state(), lin));
    }
}

TEST_CASE("Burgers: zero stays zero") {
    const Grid g = make_grid(1, 8.0, 128, false);
    const auto tr = solve_delayed(Field(g, 1), burgers_builder(1), {}, 0.1, 1.0, make_decomposition(1.0, 10), {beta1(0)});
    CHECK(tr.final_state().max_abs() == 0.0);
    CHECK_FALSE(tr.abort);
}

TEST_CASE("Burgers with lag one step matches characteristics at half the blow-up time") {
    const Grid g = make_grid(1, 12.0, 2048, false);
    const Field u0 = gauss(g);
    const double T = 0.5 * burgers_blowup(u0).T2;
    const auto dec = make_decomposition(T, 256);
    const auto tr = solve_delayed(u0, burgers_builder(1), {}, dec.mesh(), T, dec, {});
    const Field exact = burgers_oracle(u0, T);
    CHECK(max_abs_difference(tr.final_state(), exact) / exact.max_abs() < 0.01);
}

TEST_CASE("solve_nonlinear: linear problem converges at the first comparison") {
    const Grid g = make_grid(1, 10.0, 128, false);
    const auto b = CoefficientBuilder::constant(coefficients_from_functions(
        g, 1, [](Span, double, Out o) { o[0] = 0.5; }, {}, {}));
    const auto r = solve_nonlinear(gauss(g), b, Viscosity::isotropic(1, 0.2), 1.0, {beta1(0), beta1(1)}, 1e-10,
                                   default_eps_schedule(8, 4));
    CHECK(r.report.converged);
    CHECK(r.report.runs.size() == 2);
    REQUIRE(r.report.accepted_eps);
    CHECK(*r.report.accepted_eps == doctest::Approx(1.0 / 16));
    const auto j = to_json(r.report);
    CHECK(j["converged"] == true);
    CHECK(j["runs"].size() == 2);
    CHECK(j["monitors"][1] == "a0_b1");
}

TEST_CASE("solve_nonlinear: Burgers gradient law below the blow-up time") {
    const Grid g = make_grid(1, 12.0, 2048, false);
    const Field u0 = gauss(g);
    const auto law = burgers_blowup(u0);
    const double T = 0.5 * law.T2;
    const auto r = solve_nonlinear(u0, burgers_builder(1), {}, T, {beta1(0), beta1(1)}, 1e-2, default_eps_schedule(32, 6));
    CHECK(r.report.converged);
    CHECK_FALSE(r.report.blowup);
    const auto& tr = r.trajectory.seminorms;
    for (std::size_t i = 0; i < tr.nodes(); ++i)
        CHECK(tr.values[1][i] == doctest::Approx(law.sup_derivative(tr.times[i])).epsilon(0.02));
    // uniform bounds across ε: envelopes agree to the tolerance
    for (std::size_t k = 1; k < r.report.runs.size(); ++k)
        for (std::size_t p = 0; p < 2; ++p)
            CHECK(r.report.runs[k].envelope[p] ==
                  doctest::Approx(r.report.runs.back().envelope[p]).epsilon(0.1));
}

TEST_CASE("solve_nonlinear: Burgers past the blow-up time reports the singularity") {
    const Grid g = make_grid(1, 12.0, 1024, false);
    const Field u0 = gauss(g);
    const double T2 = burgers_blowup(u0).T2;
    const auto r = solve_nonlinear(u0, burgers_builder(1), {}, 1.2 * T2, {beta1(1)}, 1e-3, default_eps_schedule(64, 3));
    CHECK_FALSE(r.report.converged);
    // The state stays finite on the grid, so the report is the gradient surge: |u_x| reaches
    // 5× its initial value at 0.8·T2 by the characteristics law, and keeps climbing after T2.
    const auto& t = r.trajectory.seminorms.times;
    const auto& v = r.trajectory.seminorms.values[0];
    std::size_t i = 0;
    while (i < v.size() && v[i] < 5.0 * v.front()) ++i;
    REQUIRE(i < v.size());
    CHECK(t[i] / T2 == doctest::Approx(0.8).epsilon(0.05));
    CHECK(*std::max_element(v.begin(), v.end()) > 20.0 * v.front());
}

TEST_CASE("Burgers preserves the zero set outside the support") {
    const double R = 2.0;
    const Grid g = make_grid(1, 12.0, 2048, false);
    const Field u0 = sample_scalar(
        [R](Span x) {
            const double s = x[0] / R;
            return std::abs(s) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s * s)) : 0.0;
        },
        g);
    const double T = 0.5 * burgers_blowup(u0).T2;
    const auto dec = make_decomposition(T, 64);
    DelayedOptions d;
    d.splitting.snapshot_stride = 8;
    const auto tr = solve_delayed(u0, burgers_builder(1), {}, dec.mesh(), T, dec, {}, d);
    const auto x = g.coords(0);
    for (const auto& u : tr.snapshots) {
        double outside = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (std::abs(x[i]) >= R) outside = std::max(outside, std::abs(u.data()[i]));
        CHECK(outside <= 1e-10 * u.max_abs());
    }
}
