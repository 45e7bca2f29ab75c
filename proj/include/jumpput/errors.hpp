#pragma once

#include <stdexcept>
#include <string>

namespace jumpput {

/// Argument outside the domain of a function (non-positive price, bad index).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Jump law that is not a probability measure with finite mean on (0, inf).
class InvalidMeasure : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Model parameters that violate the standing assumptions.
class InvalidModel : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical construction failed (fundamental solutions, grids).
class ConstructionFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input to the free-boundary operator does not satisfy its preconditions.
class PreconditionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The smooth-fit equation has no (or no unique) root in the search range.
class NoBoundary : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Value iteration aborted; carries the index of the failing iterate.
class SolverError : public std::runtime_error {
public:
    SolverError(std::size_t iterate, const std::string& what)
        : std::runtime_error("iterate " + std::to_string(iterate) + ": " + what), iterate_(iterate) {}
    std::size_t iterate() const noexcept { return iterate_; }

private:
    std::size_t iterate_;
};

}  // namespace jumpput
