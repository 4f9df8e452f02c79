#pragma once

#include <stdexcept>
#include <string>

namespace lbd {

/// Argument outside the mathematical domain of an operation (u outside [0,1],
/// belief at 0 or 1, invalid family parameters).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A precondition of a solver does not hold (e.g. gamma not strictly
/// decreasing, boundary not certified monotone).
class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Boundary ODE left the strip 0 < b < c(u) by more than the projection
/// tolerance, or the right-hand side was evaluated outside it.
class GuardError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Root bracketing failed in the discrete ladder recursion.
class BracketError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or incomplete run configuration / input file.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lbd
