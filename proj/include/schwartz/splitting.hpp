#pragma once

// Piecewise splitting solver for ∂_t f = νΔf + g·∇f + h f + k over a time decomposition.

#include "schwartz/grid.hpp"
#include "schwartz/propagators.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace schwartz {

struct Decomposition {
    std::vector<double> nodes;

    int steps() const noexcept { return static_cast<int>(nodes.size()) - 1; }
    double horizon() const noexcept { return nodes.back(); }
    /// ΔZ = max_i (t_i − t_{i−1}).
    double mesh() const noexcept;
};

Decomposition make_decomposition(double T, int N);
/// Arbitrary strictly increasing nodes starting at 0.
Decomposition decomposition_from_nodes(std::vector<double> nodes);

/// Time series of ‖x^α ∂^β f‖_∞ for a monitored set of pairs.
struct SeminormTrace {
    int n = 1;
    std::vector<MultiIndexPair> pairs;
    std::vector<double> times;
    std::vector<std::vector<double>> values;  ///< values[pair][node]

    SeminormTrace() = default;
    SeminormTrace(int dim, std::vector<MultiIndexPair> monitored);

    void append(double t, const std::vector<double>& row);
    std::size_t nodes() const noexcept { return times.size(); }
    /// Keep every stride-th node (and always the last).
    SeminormTrace subsampled(int stride) const;
    void write_csv(std::ostream& os) const;
};

struct AbortInfo {
    int node = 0;           ///< last node reached (state stored up to here)
    double time = 0.0;
    std::string reason;
};

struct Trajectory {
    std::vector<Field> snapshots;
    SeminormTrace seminorms;
    std::vector<DecayReport> diagnostics;  ///< one per node
    std::vector<std::string> warnings;
    std::optional<AbortInfo> abort;

    const Field& final_state() const { return snapshots.back(); }
};

using NodeObserver = std::function<void(int node, const Field& state)>;

struct SplittingOptions {
    StepOptions step{};
    bool strang = false;
    int snapshot_stride = 0;  ///< 0: initial and final only; k: every k-th node as well
    double decay_tol = kDefaultDecayTol;
    NodeObserver observer;    ///< called at every node, including t = 0
};

/// One step over [t0, t0+dt]: heat, then transport, then multiply, then source.
Field split_step(const Field& f, const CoefficientSet& coeffs, const Viscosity& nu, double t0,
                 double dt, const SplittingOptions& opts = {});

Trajectory solve_linear(const Field& f0, const CoefficientSet& coeffs, const Viscosity& nu,
                        const Decomposition& dec, const std::vector<MultiIndexPair>& monitors,
                        const SplittingOptions& opts = {});

struct ConvergenceReport {
    bool converged = false;
    double tol = 0.0;
    std::vector<int> steps;      ///< N of every run
    std::vector<double> gaps;    ///< gap between run k and k−1 (size = runs − 1)
    std::vector<double> orders;  ///< log2(gap_{k−1}/gap_k)
    int accepted_steps = 0;
};

struct RefinementResult {
    Trajectory trajectory;
    ConvergenceReport report;
};

RefinementResult refine_until(const Field& f0, const CoefficientSet& coeffs, const Viscosity& nu,
                              double T, const std::vector<MultiIndexPair>& monitors, double tol,
                              int N0, int max_doublings, const SplittingOptions& opts = {});

/// Max over pairs and common nodes of |a−b| / max(|b|, floor); nodes matched by time.
double trace_gap(const SeminormTrace& coarse, const SeminormTrace& fine, double floor = 1e-12);

/// Θ_T * f0 + ∫_0^T Θ_{T−s} * k(s) ds with composite trapezoid in s.
Field heat_source_exact(const Field& f0, const CoefficientSet& coeffs, const Viscosity& nu,
                        double T, int quad_panels);

} // namespace schwartz
