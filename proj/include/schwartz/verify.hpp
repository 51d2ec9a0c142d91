#pragma once

// Acceptance checks, grouped into suites. Failures are report entries, never exceptions.

#include <json.hpp>

#include <string>
#include <vector>

namespace schwartz {

struct Check {
    int criterion = 0;
    std::string name;
    bool pass = false;
    double value = 0.0;      ///< measured quantity
    double threshold = 0.0;  ///< the limit it is compared with
    std::string detail;
};

struct CriterionReport {
    int id = 0;
    std::string title;
    double seconds = 0.0;
    double time_limit = 0.0;
    std::vector<Check> checks;

    bool pass() const;
};

/// Criteria 1–9; each call runs the computations (no caching across calls except the shared
/// Burgers run used by criteria 4 and 8).
CriterionReport run_criterion(int id);
int criterion_count();

struct SuiteReport {
    std::string suite;
    std::vector<CriterionReport> criteria;

    bool pass() const;
    nlohmann::json to_json() const;
};

const std::vector<std::string>& suite_names();
/// Throws std::invalid_argument for an unknown suite.
SuiteReport run_suite(const std::string& name);

} // namespace schwartz
