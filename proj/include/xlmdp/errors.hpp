#pragma once

#include <stdexcept>
#include <string>

namespace xlmdp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A configuration value is missing, malformed or violates a type invariant.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A model component broke its contract (non-stochastic row, QoS out of
/// range, a service map that does not preserve dominance, ...).
class ModelContractError : public Error {
public:
    using Error::Error;
};

class InvalidPolicyError : public Error {
public:
    using Error::Error;
};

class InvalidDiscountError : public Error {
public:
    using Error::Error;
};

/// A policy file does not cover some state of the model it is applied to.
class PolicyCoverageError : public Error {
public:
    using Error::Error;
};

/// An iterative solver hit its sweep limit before meeting its tolerance.
class NotConvergedError : public Error {
public:
    using Error::Error;
};

class EmptyCandidateError : public Error {
public:
    using Error::Error;
};

/// A learning run produced a non-finite value.
class DivergedRunError : public Error {
public:
    DivergedRunError(long stage, const std::string& what)
        : Error("learning run diverged at stage " + std::to_string(stage) + ": " + what),
          stage_(stage) {}

    long stage() const noexcept { return stage_; }

private:
    long stage_;
};

inline void require_discount(double discount) {
    if (!(discount >= 0.0 && discount < 1.0)) {
        throw InvalidDiscountError("discount must lie in [0, 1), got " + std::to_string(discount));
    }
}

}  // namespace xlmdp
