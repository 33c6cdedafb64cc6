#pragma once

#include <stdexcept>
#include <string>

namespace ntk {

struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Integrator or quadrature failure. Callers map this to exit code 3.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StiffnessError : NumericalError {
    using NumericalError::NumericalError;
};

struct AliasingError : NumericalError {
    using NumericalError::NumericalError;
};

// Raised when a series method is asked for a correlation outside its radius.
struct MethodDomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace ntk
