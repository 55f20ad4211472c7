#ifndef WCLAB_ERRORS_HPP
#define WCLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace wclab {

// Every failure mode of the library maps to one of these. They all derive
// from std::runtime_error so callers can catch coarsely or finely.

struct NotHermitian : std::runtime_error {
    explicit NotHermitian(const std::string& m) : std::runtime_error("NotHermitian: " + m) {}
};
struct NoConvergence : std::runtime_error {
    explicit NoConvergence(const std::string& m) : std::runtime_error("NoConvergence: " + m) {}
};
struct Singular : std::runtime_error {
    explicit Singular(const std::string& m) : std::runtime_error("Singular: " + m) {}
};
struct DimensionMismatch : std::runtime_error {
    explicit DimensionMismatch(const std::string& m) : std::runtime_error("DimensionMismatch: " + m) {}
};
struct QuadratureFailure : std::runtime_error {
    explicit QuadratureFailure(const std::string& m) : std::runtime_error("QuadratureFailure: " + m) {}
};
struct AssumptionViolated : std::runtime_error {
    std::string assumption;  // "A1", "A2" or "A3"
    AssumptionViolated(std::string which, const std::string& detail)
        : std::runtime_error("AssumptionViolated(" + which + "): " + detail),
          assumption(std::move(which)) {}
};
struct GridConflict : std::runtime_error {
    explicit GridConflict(const std::string& m) : std::runtime_error("GridConflict: " + m) {}
};
struct ExtrapolationUnstable : std::runtime_error {
    explicit ExtrapolationUnstable(const std::string& m) : std::runtime_error("ExtrapolationUnstable: " + m) {}
};
struct RecurrenceGuard : std::runtime_error {
    explicit RecurrenceGuard(const std::string& m) : std::runtime_error("RecurrenceGuard: " + m) {}
};
struct ConditionViolated : std::runtime_error {
    explicit ConditionViolated(const std::string& m) : std::runtime_error("ConditionViolated: " + m) {}
};
struct GridMismatch : std::runtime_error {
    explicit GridMismatch(const std::string& m) : std::runtime_error("GridMismatch: " + m) {}
};
struct GridIncompatible : std::runtime_error {
    explicit GridIncompatible(const std::string& m) : std::runtime_error("GridIncompatible: " + m) {}
};
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& m) : std::runtime_error("ConfigError: " + m) {}
};

}  // namespace wclab

#endif
