#pragma once

// A-priori seminorm bounds for the linear system and the vorticity equation, Gronwall-type
// recursions, and blow-up time estimation from seminorm traces.

#include "schwartz/propagators.hpp"
#include "schwartz/splitting.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace schwartz {

/// Per-node sup-norms of the coefficients and their derivatives.
struct Envelope {
    int n = 1;
    int m = 1;
    int order = 0;  ///< highest |β| the envelope supports
    std::vector<double> times;
    /// g[j][node] = max over |γ| = j and components of sup_x |∂^γ g_l|, j = 0..order+1.
    std::vector<std::vector<double>> g;
    /// h[j][node] = max over |γ| = j and entries of sup_x |∂^γ h_ij|, j = 0..order+1.
    std::vector<std::vector<double>> h;
    std::vector<double> g_jacobian_spectral;  ///< sup_x ‖∇g(x)‖₂
    std::vector<double> h_spectral;           ///< sup_x ‖h(x)‖₂
};

enum class MatrixNorm { max_entry, spectral };

/// Samples coeffs at the nodes. Derivatives come from finite differences of the pointwise
/// samplers when present (coefficients need not decay or be periodic), else spectrally.
/// The spectral-norm columns are filled only when asked for.
Envelope build_envelope(const CoefficientSet& coeffs, const Grid& grid,
                        std::span<const double> times, int order,
                        MatrixNorm norm = MatrixNorm::max_entry);

/// Envelope of already-sampled coefficient fields (spectral derivatives). g holds n-component
/// fields, h m·m-component fields; either list may be empty (zero coefficient).
Envelope envelope_from_fields(std::span<const double> times, const std::vector<Field>& g,
                              const std::vector<Field>& h, int n, int m, int order,
                              MatrixNorm norm = MatrixNorm::max_entry);

struct IDisplacement {
    std::vector<double> times;
    std::vector<double> values;
};

IDisplacement displacement_I(const Envelope& env);

/// max over the grid of Π(|x_i| + I)^{α_i} · |field(x)|.
double shifted_weighted_sup(const Field& field, const MultiIndex& alpha, double I_value,
                            double decay_tol = kDefaultDecayTol);

/// Heat-smoothed weighted sups of f0 and k feeding the bound formulas.
struct HeatData {
    std::vector<double> times;
    std::vector<MultiIndex> alphas;
    int order = 0;
    /// f0_terms[a][j][i] = max_{|γ|=j} S(α_a, Θ_{t_i} * |∂^γ f0|, I(t_i)).
    std::vector<std::vector<std::vector<double>>> f0_terms;
    /// k_terms[a][j][i][q] = max_{|γ|=j} S(α_a, Θ_{t_i−t_q} * |∂^γ k(t_q)|, I(t_i) − I(t_q)).
    std::vector<std::vector<std::vector<std::vector<double>>>> k_terms;

    bool has_k() const noexcept { return !k_terms.empty(); }
    std::size_t alpha_index(const MultiIndex& alpha) const;
};

/// decay_tol applies to the weighted sups; +∞ disables the check (slowly decaying data).
HeatData heat_data(const Field& f0, const CoefficientSet* coeffs, const Viscosity& nu,
                   const IDisplacement& I, std::vector<MultiIndex> alphas, int order,
                   double decay_tol = kDefaultDecayTol);

struct BoundOptions {
    MatrixNorm norm = MatrixNorm::max_entry;
};

struct BoundCurve {
    int order = 0;
    MultiIndex alpha{};
    std::vector<double> times;
    std::vector<double> values;
    bool conservative = false;  ///< combinatorial constants chosen, not printed
};

/// One bound value at a node; lower must hold curves for orders 0..order−1.
double linear_bound(int order, const MultiIndex& alpha, const Envelope& env, const IDisplacement& I,
                    const HeatData& heat, std::size_t node, std::span<const BoundCurve> lower,
                    const BoundOptions& opts = {});

/// Curves for orders 0..max_order at every node.
std::vector<BoundCurve> linear_bounds(const MultiIndex& alpha, int max_order, const Envelope& env,
                                      const IDisplacement& I, const HeatData& heat,
                                      const BoundOptions& opts = {});

/// Vorticity specialisation: 3D uses g = u, h = ∇u with the printed constants; 2D falls back
/// to the linear bounds with m = 1, h = 0.
double vorticity_bound(int order, const MultiIndex& alpha, const Envelope& u_env,
                       const IDisplacement& I, const HeatData& omega0_heat, std::size_t node,
                       std::span<const BoundCurve> lower);
std::vector<BoundCurve> vorticity_bounds(const MultiIndex& alpha, int max_order,
                                         const Envelope& u_env, const IDisplacement& I,
                                         const HeatData& omega0_heat);

/// 1/(n · max_j ‖∂_j u0‖_∞); +∞ when u0 has no gradient.
double burgers_existence_time(const Field& u0);

/// C₁(0)/(1 − n·C₁(0)·t); throws PoleError past the pole.
double gronwall_c1(double c10, int n, double t);

enum class Feedback {
    linear,       ///< C = A + B ∫C
    exponential,  ///< C = A · exp(B ∫C)
};

BoundCurve integrate_recursive_bound(int order, const std::function<double(double)>& A,
                                     const std::function<double(double)>& B,
                                     std::span<const double> nodes,
                                     Feedback feedback = Feedback::linear);

struct BlowupEstimate {
    bool detected = false;
    double T_star = 0.0;
    double C = 0.0;
    double residual = 0.0;  ///< RMS relative misfit of C/(T*−t) on the window
    MultiIndexPair pair{};
    std::string message;
};

/// Fits C/(T*−t) to the tail of each monitored series (last 40% of nodes with growth);
/// reports the series that fits the reciprocal law best.
BlowupEstimate detect_blowup(const SeminormTrace& trace);

/// Bound curves in the same column layout as SeminormTrace::write_csv.
void write_bounds_csv(std::ostream& os, int n, std::span<const double> times,
                      const std::vector<MultiIndexPair>& pairs,
                      const std::vector<std::vector<double>>& values);

} // namespace schwartz
