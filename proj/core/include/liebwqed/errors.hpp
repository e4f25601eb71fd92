#pragma once

#include <stdexcept>
#include <string>

namespace wqed {

// Bad input: malformed spec, config or arguments. Maps to CLI exit code 1.
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// A numerical routine could not deliver its contract. Maps to CLI exit code 2.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Evaluation too close to a pole of tan/cot (BZ edge, k = +-k0, BZ corner).
class DivergenceError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

} // namespace wqed
