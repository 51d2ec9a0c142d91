#pragma once

// Elementary exactly-solvable evolutions: heat flow, frozen-x transport, matrix exponential,
// source accumulation and coordinate dilation.

#include "schwartz/grid.hpp"

#include <array>
#include <functional>
#include <span>

namespace schwartz {

struct Viscosity {
    std::array<double, kMaxDim> nu{};

    static Viscosity isotropic(int n, double v);
    bool zero() const noexcept { return nu[0] == 0.0 && nu[1] == 0.0 && nu[2] == 0.0; }
};

/// Whole-grid sample of a coefficient at time t.
using GridSampler = std::function<Field(double t)>;
/// Pointwise form of a coefficient; used for derivative envelopes when available.
using PointSampler = std::function<void(std::span<const double> x, double t, std::span<double> out)>;

/// g (n comps), h (m·m comps, row-major), k (m comps). Empty samplers mean identically zero.
struct CoefficientSet {
    int n = 1;
    int m = 1;
    GridSampler g, h, k;
    PointSampler g_point, h_point, k_point;

    bool has_g() const noexcept { return static_cast<bool>(g); }
    bool has_h() const noexcept { return static_cast<bool>(h); }
    bool has_k() const noexcept { return static_cast<bool>(k); }
};

/// Builds grid samplers from pointwise functions (any may be empty).
CoefficientSet coefficients_from_functions(const Grid& grid, int m, PointSampler g, PointSampler h,
                                           PointSampler k);

struct StepOptions {
    double quad_dt = 0.0;  ///< 0 → dt/4
    InterpolationOptions interp{};

    int panels(double dt) const;
};

/// Composite trapezoid of a sampler over [t0, t0+dt].
Field integrate_sampler(const GridSampler& s, double t0, double dt, int panels);

Field heat_step(const Field& field, const Viscosity& nu, double dt);
Field transport_step(const Field& field, const CoefficientSet& coeffs, double t0, double dt,
                     const StepOptions& opts = {});
Field multiply_step(const Field& field, const CoefficientSet& coeffs, double t0, double dt,
                    const StepOptions& opts = {});
Field source_step(const Field& field, const CoefficientSet& coeffs, double t0, double dt,
                  const StepOptions& opts = {});
/// f(x) ↦ f(x_1 e^{a_1 dt}, …); points mapped outside the box read zero.
Field scaling_step(const Field& field, std::span<const double> a, double dt,
                   const InterpolationOptions& interp = {});

/// exp(A) for a small dense row-major m×m matrix (m ≤ 3).
void expm_small(int m, const double* a, double* out);

} // namespace schwartz
