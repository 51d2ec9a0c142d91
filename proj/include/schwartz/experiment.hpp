#pragma once

// Experiment configuration, named presets and the configuration-driven runner.

#include "schwartz/bounds.hpp"
#include "schwartz/models.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace schwartz {

enum class ModelKind { linear, burgers, vorticity };

std::string to_string(ModelKind k);

struct ExperimentConfig {
    std::string name;
    std::string preset;  ///< empty for an explicit problem
    std::uint64_t seed = 0;

    // domain
    int n = 1;
    std::array<double, kMaxDim> L{8.0, 8.0, 8.0};
    std::array<int, kMaxDim> P{256, 1, 1};
    bool periodic = false;

    // time
    double T = 1.0;
    int N0 = 16;
    double tol = 1e-3;
    int max_doublings = 5;
    int bound_nodes = 41;  ///< nodes at which bounds (and exported traces) are evaluated
    bool strang = false;
    InterpolationOptions interp{};  ///< transport/scaling interpolation

    // physics
    std::array<double, kMaxDim> nu{};
    ModelKind model = ModelKind::linear;

    std::vector<MultiIndexPair> monitors;     ///< asserted: traces must stay below bounds
    std::vector<MultiIndexPair> report_only;  ///< traced and bounded but not asserted
    int max_order = kDefaultMaxOrder;
    double decay_tol = kDefaultDecayTol;  ///< for bound evaluation; "inf" disables the check

    // explicit problems
    std::string initial_kind = "gaussian";   ///< gaussian | taylor-green | file
    std::vector<double> amplitudes{1.0};     ///< per component
    double width = 1.0;
    std::string initial_path;
    std::array<double, kMaxDim> drift{};     ///< constant g (linear model)
    std::vector<double> growth;              ///< constant h, row-major m×m (linear model)

    // outputs
    std::string directory;
    std::vector<std::string> formats{"csv", "json", "svg"};
    bool log_scale = true;

    Viscosity viscosity() const;
    Grid make_grid() const;
};

/// Schema violation with a location: "field: message (line L)".
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// TOML (or JSON when the text starts with '{'); unknown presets and invalid fields throw.
ExperimentConfig parse_config(const std::string& text, const std::string& source_name = "config");
ExperimentConfig load_config(const std::string& path);

/// Concrete data for a run.
struct Problem {
    Field f0;
    std::optional<CoefficientSet> coeffs;  ///< linear model only
    std::array<double, kMaxDim> center{};  ///< support-radius center
};

struct PresetInfo {
    std::string name;
    std::string description;
    std::function<ExperimentConfig()> defaults;
    std::function<Problem(const ExperimentConfig&)> make;
};

const std::vector<PresetInfo>& presets();
const PresetInfo& find_preset(const std::string& name);
/// Preset problem, or the explicit problem described by the config.
Problem make_problem(const ExperimentConfig& cfg);

/// Smooth random linear problem on a 2D box (deterministic in the seed).
Problem random_linear_problem(std::uint64_t seed, const Grid& grid);

/// Pointwise coefficients of the linear demo system.
CoefficientSet linear_demo_coefficients(const Grid& grid);

// ---------------------------------------------------------------- running

struct BoundComparison {
    std::vector<double> times;
    std::vector<MultiIndexPair> pairs;
    std::vector<std::vector<double>> trace;   ///< [pair][node]
    std::vector<std::vector<double>> bound;   ///< [pair][node]
    std::vector<bool> asserted;               ///< per pair
    double worst_ratio = 0.0;                 ///< max trace/bound over asserted pairs
    bool dominated = true;                    ///< trace ≤ (1+slack)·bound on asserted pairs
};

struct ExperimentResult {
    int exit_code = 0;
    std::string directory;
    nlohmann::json summary;
    Trajectory trajectory;
    BoundComparison comparison;
    std::optional<VorticityRun> vorticity;
    double wall_seconds = 0.0;
};

/// Output root: SCHWARTZ_OUTPUT_ROOT if set, else the current directory.
std::string output_root();

/// Runs the experiment and writes artifacts under output_root()/cfg.directory.
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_artifacts = true);

/// Bound-node indices: every stride-th node of a trajectory with `steps` steps, plus the last.
std::vector<std::size_t> bound_node_indices(std::size_t nodes, int target);

} // namespace schwartz
