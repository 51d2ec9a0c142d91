#pragma once

#include <stdexcept>
#include <string>

namespace schwartz {

/// Box too small for the requested weighted seminorm (field not decayed in the outer shell).
class DomainTooSmall : public std::runtime_error {
public:
    DomainTooSmall(const std::string& what, double ratio)
        : std::runtime_error(what), ratio_(ratio) {}
    double ratio() const noexcept { return ratio_; }

private:
    double ratio_;
};

/// Raised when a solve produces NaN/Inf; carries the offending step.
class NonFiniteError : public std::runtime_error {
public:
    NonFiniteError(const std::string& what, int step)
        : std::runtime_error(what), step_(step) {}
    int step() const noexcept { return step_; }

private:
    int step_;
};

/// Closed-form bound evaluated past its pole.
class PoleError : public std::domain_error {
public:
    PoleError(const std::string& what, double pole)
        : std::domain_error(what), pole_(pole) {}
    double pole() const noexcept { return pole_; }

private:
    double pole_;
};

} // namespace schwartz
