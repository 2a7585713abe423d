#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace joinpoint {

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A linear system (breakpoint solve, weighted Gram matrix, GLM normal
// equations) is singular or numerically unusable (rcond below threshold).
class SingularSystem : public Error {
public:
    using Error::Error;
};

// A change-point location outside the open observation window.
class OutOfRange : public Error {
public:
    using Error::Error;
};

// A log-mean or log-density overflowed the usable floating range.
class NonFinite : public Error {
public:
    using Error::Error;
};

// A parameter that must be strictly positive was not.
class NonPositive : public Error {
public:
    using Error::Error;
};

// Bayes2 prior requested with jstar < 2 (the prior collapses there).
class DegeneratePrior : public Error {
public:
    using Error::Error;
};

// Invalid fit/sampler configuration (empty admissible region, bad sizes).
class InvalidConfig : public Error {
public:
    using Error::Error;
};

// Change-point vector violates the ordered minimum-gap region.
class OutsideOmega : public Error {
public:
    using Error::Error;
};

class EmptyDraws : public Error {
public:
    using Error::Error;
};

class UnknownParameter : public Error {
public:
    using Error::Error;
};

// Forecast requested but no population rule covers the forecast years.
class MissingForecastPopulation : public Error {
public:
    using Error::Error;
};

class InvalidScenario : public Error {
public:
    using Error::Error;
};

// Profile search has no admissible change-point candidates.
class EmptyGrid : public Error {
public:
    using Error::Error;
};

// Newton-Raphson failed to converge within the iteration budget.
class NoConvergence : public Error {
public:
    using Error::Error;
};

// Malformed input file; carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

}  // namespace joinpoint
