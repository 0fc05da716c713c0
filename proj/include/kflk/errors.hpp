#pragma once

#include <stdexcept>
#include <string>

namespace kflk {

// A configuration value violates a documented precondition.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A computation left its validity envelope: non-convergence, invariant
// violation, corrupted state.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace kflk
