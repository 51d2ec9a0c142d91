#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "schwartz/errors.hpp"
#include "schwartz/field_io.hpp"
#include "schwartz/grid.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace schwartz;
using Span = std::span<const double>;

namespace {

const double kPi = std::numbers::pi;

Field gauss1d(const Grid& g) {
    return sample_scalar([](Span x) { return std::exp(-x[0] * x[0]); }, g);
}

MultiIndexPair pair1(int a, int b) {
    MultiIndexPair p;
    p.alpha[0] = a;
    p.beta[0] = b;
    return p;
}

} // namespace

TEST_CASE("make_grid spacing, coordinates and wavenumbers") {
    const Grid g = make_grid(1, 8.0, 256, false);
    CHECK(g.spacing(0) == doctest::Approx(0.0625).epsilon(1e-15));
    CHECK(g.coords(0)[0] == -8.0);
    CHECK(g.coords(0)[255] == doctest::Approx(8.0 - 0.0625));
    // ξ_j = π j / L, FFT ordering
    CHECK(g.wavenumbers(0)[1] == doctest::Approx(kPi / 8.0));
    CHECK(g.wavenumbers(0)[128] == doctest::Approx(-128 * kPi / 8.0));

    const Grid t = make_grid(2, kPi, 64, true);
    CHECK(t.periodic_native());
    for (int j = 0; j < 64; ++j) CHECK(t.wavenumbers(1)[j] == doctest::Approx(std::round(t.wavenumbers(1)[j])));
    CHECK(t.wavenumbers(0)[5] == doctest::Approx(5.0));
    CHECK(t.size() == 64u * 64u);
}

TEST_CASE("make_grid rejects bad sizes") {
    CHECK_THROWS_AS(make_grid(1, 8.0, 100, false), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(1, 8.0, 4, false), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(1, 0.0, 64, false), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(4, 8.0, 64, false), std::invalid_argument);
}

TEST_CASE("sample_field") {
    const Grid g = make_grid(1, 8.0, 1024, false);
    CHECK(gauss1d(g).max_abs() == doctest::Approx(1.0));
    const Field z = sample_scalar([](Span) { return 0.0; }, g, 2.5);
    CHECK(z.max_abs() == 0.0);
    CHECK(z.time() == 2.5);
    // x e^{-x²} peaks at 1/√2 with value (2e)^{-1/2}
    const Field f = sample_scalar([](Span x) { return x[0] * std::exp(-x[0] * x[0]); }, g);
    CHECK(f.max_abs() == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::e)).epsilon(1e-4));
    CHECK_THROWS(sample_scalar([](Span x) { return 1.0 / x[0]; }, make_grid(1, 8.0, 64, false)));
}

TEST_CASE("spectral_derivative oracles") {
    const Grid t = make_grid(1, kPi, 64, true);
    const Field s = sample_scalar([](Span x) { return std::sin(x[0]); }, t);
    const Field c = sample_scalar([](Span x) { return std::cos(x[0]); }, t);
    CHECK(max_abs_difference(spectral_derivative(s, {1}), c) < 1e-10);
    CHECK(max_abs_difference(spectral_derivative(s, {0}), s) < 1e-15);

    const Grid g = make_grid(1, 8.0, 256, false);
    const Field d = sample_scalar([](Span x) { return -2.0 * x[0] * std::exp(-x[0] * x[0]); }, g);
    CHECK(max_abs_difference(spectral_derivative(gauss1d(g), {1}), d) < 1e-8);

    CHECK_THROWS_AS(spectral_derivative(gauss1d(g), {5}), std::invalid_argument);
    CHECK_THROWS_AS(spectral_derivative(gauss1d(g), {0, 1}), std::invalid_argument);
}

TEST_CASE("spectral_derivative: twice β=1 equals β=2 on band-limited data") {
    const Grid g = make_grid(2, kPi, 32, true);
    const Field f = sample_scalar(
        [](Span x) { return std::sin(3 * x[0]) * std::cos(x[1]) + 0.5 * std::cos(5 * x[0] - 2 * x[1]); }, g);
    for (int axis = 0; axis < 2; ++axis) {
        MultiIndex one{}, two{};
        one[axis] = 1;
        two[axis] = 2;
        const Field twice = spectral_derivative(spectral_derivative(f, one), one);
        CHECK(max_abs_difference(twice, spectral_derivative(f, two)) < 1e-10);
    }
}

TEST_CASE("interpolate_shifted") {
    const Grid g = make_grid(1, 8.0, 256, false);
    const Field f = gauss1d(g);
    Field d(g, 1);
    std::fill(d.data().begin(), d.data().end(), 0.5);
    const Field shifted = interpolate_shifted(f, d);
    CHECK(shifted.component(0)[128] == doctest::Approx(std::exp(-0.25)).epsilon(1e-12));
    const Field exact = sample_scalar([](Span x) { return std::exp(-(x[0] + 0.5) * (x[0] + 0.5)); }, g);
    CHECK(max_abs_difference(shifted, exact) < 1e-9);

    Field zero(g, 1);
    CHECK(max_abs_difference(interpolate_shifted(f, zero), f) < 1e-14);

    const Grid t = make_grid(1, kPi, 64, true);
    Field q(t, 1);
    std::fill(q.data().begin(), q.data().end(), kPi / 2);
    const Field s = sample_scalar([](Span x) { return std::sin(x[0]); }, t);
    const Field c = sample_scalar([](Span x) { return std::cos(x[0]); }, t);
    CHECK(max_abs_difference(interpolate_shifted(s, q), c) < 1e-12);
}

TEST_CASE("interpolate_shifted: d then -d round trip") {
    const Grid g = make_grid(2, kPi, 32, true);
    const Field f = sample_scalar([](Span x) { return std::sin(2 * x[0] + x[1]) + std::cos(3 * x[1]); }, g);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 4; ++trial) {
        const double a = u(rng), b = u(rng);
        Field d(g, 2), md(g, 2);
        for (std::size_t i = 0; i < g.size(); ++i) {
            d.component(0)[i] = a;
            d.component(1)[i] = b;
            md.component(0)[i] = -a;
            md.component(1)[i] = -b;
        }
        CHECK(max_abs_difference(interpolate_shifted(interpolate_shifted(f, d), md), f) < 1e-10);
    }
}

TEST_CASE("weighted_seminorm oracles") {
    const Grid g = make_grid(1, 8.0, 256, false);
    const Field f = gauss1d(g);
    CHECK(weighted_seminorm_refined(f, pair1(1, 0)) ==
          doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::e)).epsilon(1e-8));
    CHECK(weighted_seminorm_refined(f, pair1(0, 1)) ==
          doctest::Approx(std::sqrt(2.0 / std::numbers::e)).epsilon(1e-8));
    // Grid value is a lower bound of the refined one.
    CHECK(weighted_seminorm(f, pair1(1, 0)) <= weighted_seminorm_refined(f, pair1(1, 0)));
    CHECK(weighted_seminorm(f, pair1(0, 0)) == f.max_abs());
}

TEST_CASE("weighted_seminorm is absolutely homogeneous and equals max|data| at order 0") {
    const Grid g = make_grid(2, 6.0, 64, false);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const Field f = sample_scalar(
        [](Span x) { return (1.0 + x[0] - 0.5 * x[1]) * std::exp(-x[0] * x[0] - 0.7 * x[1] * x[1]); }, g);
    for (const auto& p : all_pairs(2, 2, 2)) {
        const double base = weighted_seminorm(f, p);
        for (int k = 0; k < 3; ++k) {
            double c = u(rng);
            if (k == 0) c = -2.0;  // exact binary scaling
            const double v = weighted_seminorm(scaled(f, c), p);
            if (k == 0) CHECK(v == std::abs(c) * base);
            else CHECK(v == doctest::Approx(std::abs(c) * base).epsilon(1e-13));  // FFT rounding
        }
    }
    double m = 0.0;
    for (double v : f.data()) m = std::max(m, std::abs(v));
    CHECK(weighted_seminorm(f, MultiIndexPair{}) == m);
}

TEST_CASE("weighted seminorm needs decay") {
    const Grid g = make_grid(1, 2.0, 64, false);
    const Field wide = sample_scalar([](Span x) { return std::exp(-0.1 * x[0] * x[0]); }, g);
    CHECK_THROWS_AS(weighted_seminorm(wide, pair1(1, 0)), DomainTooSmall);
    CHECK_NOTHROW(weighted_seminorm(wide, pair1(0, 1)));
    const Grid t = make_grid(1, kPi, 64, true);
    CHECK_THROWS_AS(weighted_seminorm(sample_scalar([](Span x) { return std::sin(x[0]); }, t), pair1(1, 0)),
                    std::invalid_argument);
}

TEST_CASE("decay_guard") {
    const Grid g = make_grid(1, 8.0, 256, false);
    const auto r = decay_guard(gauss1d(g));
    CHECK(r.pass);
    CHECK(r.ratio < 1e-17);
    const auto one = decay_guard(sample_scalar([](Span) { return 1.0; }, g));
    CHECK_FALSE(one.pass);
    CHECK(one.ratio == 1.0);
    const auto zero = decay_guard(Field(g, 1));
    CHECK(zero.pass);
    CHECK(zero.ratio == 0.0);
}

TEST_CASE("multi-index helpers") {
    CHECK(multi_indices_of_order(2, 2).size() == 3);
    CHECK(multi_indices_of_order(3, 2).size() == 6);
    CHECK(all_pairs(2, 1, 1).size() == 9);
    MultiIndexPair p;
    p.alpha = {1, 0, 0};
    p.beta = {0, 1, 0};
    CHECK(p.label(2) == "a10_b01");
}

TEST_CASE("binary field round trip") {
    const Grid g = make_grid(2, std::array<double, 2>{4.0, 5.0}, std::array<int, 2>{16, 32}, false);
    const Field f = sample_field(
        [](Span x, std::span<double> out) {
            out[0] = std::exp(-x[0] * x[0]) * x[1];
            out[1] = std::cos(x[0] + x[1]);
        },
        g, 2, 0.75);
    std::stringstream ss;
    write_field_binary(f, ss);
    const Field r = read_field_binary(ss);
    CHECK(r.components() == 2);
    CHECK(r.time() == 0.75);
    CHECK(r.grid().points(1) == 32);
    CHECK(r.grid().half_width(1) == 5.0);
    CHECK(max_abs_difference(r, f) == 0.0);

    std::stringstream bad("xx");
    CHECK_THROWS(read_field_binary(bad));
}
