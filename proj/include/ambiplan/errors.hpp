#pragma once

#include <stdexcept>
#include <string>

namespace ambiplan {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A documented precondition was violated (dimension mismatch, bad index, ...).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// A covariance that must be invertible was not (singular innovation or predictive).
class NumericalDegeneracy : public Error {
public:
    using Error::Error;
};

/// Every hypothesis weight (or importance weight) vanished at once.
class TotalLikelihoodCollapse : public Error {
public:
    using Error::Error;
};

/// The planner finished its budget without completing a single simulation.
class PlannerStarvation : public Error {
public:
    using Error::Error;
};

/// Invalid user configuration. The message names the offending key.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// An exhaustive enumeration would exceed its outcome budget.
class OutcomeBudgetExceeded : public Error {
public:
    using Error::Error;
};

/// Unwritable output, unreadable input or a malformed summary.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace ambiplan
