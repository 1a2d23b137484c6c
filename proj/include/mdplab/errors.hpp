#pragma once

#include <stdexcept>
#include <string>

namespace mdplab {

/// Raised when vector/matrix shapes disagree with the MDP they are used with.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised for invariant violations in user-supplied data or configuration
/// (non-stochastic rows, discount outside (0,1), step sizes out of range...).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an operation is called outside of its contract, e.g. a
/// rank-one comparison between windows that are not consecutive.
class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Internal numerical failure (singular solve where none is expected).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace mdplab
