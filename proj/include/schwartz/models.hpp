#pragma once

// Concrete problems: Burgers (characteristics, Cole–Hopf, blow-up laws) and the vorticity form
// of Euler/Navier–Stokes in 2D/3D, plus the monitors used to check them.

#include "schwartz/nonlinear.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace schwartz {

// ---------------------------------------------------------------- vorticity

struct CurlResult {
    Field omega;        ///< 1 component in 2D, 3 in 3D
    double div_max = 0; ///< max |div u|
};

CurlResult curl_div(const Field& u);

/// max |div v| of an n-component field, spectrally.
double divergence_max(const Field& v);

/// Divergence-free velocity with curl u = ω. Zero-mean is enforced on ℝⁿ boxes; a nonzero
/// mean is removed and reported through `warnings` when given.
Field biot_savart(const Field& omega, std::vector<std::string>* warnings = nullptr);

/// Coefficient fields of the vorticity equation for one velocity: g = −u, h = ∇u (3D only,
/// entry (i,j) = ∂_j u_i), k = 0.
CoefficientSnapshot vorticity_snapshot(const Field& u);

/// The same, frozen in time, as a CoefficientSet.
CoefficientSet vorticity_coefficients(const Field& u);

/// Lagged builder: velocity from the lagged vorticity by Biot–Savart.
CoefficientBuilder vorticity_builder(int n);

struct VorticityOptions {
    DelayedOptions delayed{};
    std::array<double, kMaxDim> center{};  ///< for the support radius
    double support_threshold = 1e-10;      ///< relative to max |ω|
    int velocity_stride = 0;               ///< keep u every k-th node (0: none)
};

struct VorticityRun {
    Trajectory trajectory;
    std::vector<double> times;
    std::vector<double> energy;
    std::vector<double> omega_sup;
    std::vector<double> u_sup;
    std::vector<double> bkm;             ///< ∫_0^t ‖ω‖_∞
    std::vector<double> support;         ///< support radius of ω
    std::vector<double> div_u;           ///< max |div u|
    std::vector<double> div_omega;       ///< max |div ω| (3D), 0 in 2D
    std::vector<double> velocity_times;  ///< nodes at which u was kept
    std::vector<Field> velocities;
};

VorticityRun evolve_vorticity(const Field& omega0, const Viscosity& nu, double T,
                              const Decomposition& dec, const std::vector<MultiIndexPair>& monitors,
                              const VorticityOptions& opts = {});

// ---------------------------------------------------------------- monitors

/// ∫ |u|² dx by grid quadrature.
double energy(const Field& u);
/// Trapezoid integral of a sup-norm trace.
double bkm_integral(std::span<const double> times, std::span<const double> sup_trace);
/// Largest distance from center of a point where |field| > threshold · max |field|.
double support_radius(const Field& field, std::span<const double> center, double threshold = 1e-10);

// ---------------------------------------------------------------- Burgers

struct BlowupTimes {
    double T1 = 0.0;  ///< −1/max u0′ (< 0)
    double T2 = 0.0;  ///< −1/min u0′ (> 0)
    double min_slope = 0.0;
    double max_slope = 0.0;

    /// ‖∂_x u(·,t)‖_∞ from the characteristics law.
    double sup_derivative(double t) const;
};

BlowupTimes burgers_blowup(const Field& u0);

/// Exact inviscid solution by inverting ξ ↦ ξ + t·u0(ξ) on the trigonometric interpolant.
Field burgers_oracle(const Field& u0, double t);

/// Viscous 1D Burgers through the heat equation.
Field cole_hopf(const Field& u0, double nu, double t);

/// g = −u, h = 0, k = 0 (vector Burgers in n dimensions, m = n).
CoefficientBuilder burgers_builder(int n);

} // namespace schwartz
