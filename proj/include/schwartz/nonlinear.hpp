#pragma once

// Time-delayed solves: coefficients built from the state at t − ε, then ε → 0.

#include "schwartz/splitting.hpp"

#include <json.hpp>

#include <functional>
#include <optional>
#include <vector>

namespace schwartz {

/// Coefficient fields derived from one (lagged) state; absent entries are zero.
struct CoefficientSnapshot {
    std::optional<Field> g, h, k;
};

struct CoefficientBuilder {
    int n = 1;
    int m = 1;
    std::function<CoefficientSnapshot(const Field& lagged_state)> rule;
    /// When set the state is ignored and these coefficients are used verbatim.
    std::optional<CoefficientSet> fixed;

    static CoefficientBuilder constant(CoefficientSet c);
};

struct DelayedOptions {
    SplittingOptions splitting{};
    double blowup_factor = 1e6;  ///< abort when a monitor exceeds this multiple of its initial value
};

/// Marches with lag ε (snapped to whole steps); history before t = 0 is f0.
Trajectory solve_delayed(const Field& f0, const CoefficientBuilder& builder, const Viscosity& nu,
                         double eps, double T, const Decomposition& dec,
                         const std::vector<MultiIndexPair>& monitors,
                         const DelayedOptions& opts = {});

/// Lag in whole steps for a uniform decomposition.
int lag_steps(double eps, const Decomposition& dec);

struct EpsRun {
    double eps = 0.0;
    int steps = 0;
    std::vector<double> envelope;  ///< per monitor, max over the run
    std::optional<AbortInfo> abort;
};

struct NonlinearReport {
    std::vector<MultiIndexPair> monitors;
    int n = 1;
    std::vector<EpsRun> runs;
    std::vector<double> gaps;  ///< between consecutive runs
    bool converged = false;
    std::optional<double> accepted_eps;
    double tol = 0.0;
    std::optional<AbortInfo> blowup;  ///< first abort in the schedule, if any
};

nlohmann::json to_json(const NonlinearReport& r);

struct NonlinearResult {
    Trajectory trajectory;  ///< of the last run performed
    NonlinearReport report;
};

/// ε_k = T/(N0·2^k), k = 0..levels−1, each run with lag one step.
std::vector<int> default_eps_schedule(int N0, int levels = 6);

NonlinearResult solve_nonlinear(const Field& f0, const CoefficientBuilder& builder,
                                const Viscosity& nu, double T,
                                const std::vector<MultiIndexPair>& monitors, double tol,
                                const std::vector<int>& step_schedule,
                                const DelayedOptions& opts = {});

} // namespace schwartz
