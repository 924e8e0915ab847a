#pragma once

#include <stdexcept>
#include <string>

namespace wald {

// Error taxonomy for the whole toolkit. Kinds map onto CLI exit codes:
// input/validation problems -> 2, solver/numerics -> 3, violated
// model properties -> 4.
enum class ErrorKind {
    NonPositiveParam,
    CapViolation,
    AssumptionViolation,
    MalformedInput,
    PreconditionViolated,
    InconsistentMenu,
    DomainError,
    GridTooSmall,
    NoConvergence,
    NonIntervalRegion,
    InadmissibleTariff,
    BisectionFailed,
    ConstructionFailed,
    TruncationExceeded,
    RecklessnessViolation,
    NotOutcomeEquivalent,
};

inline const char* error_kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::NonPositiveParam:      return "NonPositiveParam";
        case ErrorKind::CapViolation:          return "CapViolation";
        case ErrorKind::AssumptionViolation:   return "AssumptionViolation";
        case ErrorKind::MalformedInput:        return "MalformedInput";
        case ErrorKind::PreconditionViolated:  return "PreconditionViolated";
        case ErrorKind::InconsistentMenu:      return "InconsistentMenu";
        case ErrorKind::DomainError:           return "DomainError";
        case ErrorKind::GridTooSmall:          return "GridTooSmall";
        case ErrorKind::NoConvergence:         return "NoConvergence";
        case ErrorKind::NonIntervalRegion:     return "NonIntervalRegion";
        case ErrorKind::InadmissibleTariff:    return "InadmissibleTariff";
        case ErrorKind::BisectionFailed:       return "BisectionFailed";
        case ErrorKind::ConstructionFailed:    return "ConstructionFailed";
        case ErrorKind::TruncationExceeded:    return "TruncationExceeded";
        case ErrorKind::RecklessnessViolation: return "RecklessnessViolation";
        case ErrorKind::NotOutcomeEquivalent:  return "NotOutcomeEquivalent";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what),
          kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

} // namespace wald
