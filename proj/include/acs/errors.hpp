#pragma once

#include <stdexcept>
#include <string>

namespace acs {

/// Malformed user input (files, configs). Carries enough context to locate it.
class InputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition of a diagnostic or command is not met.
class PreconditionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An optimizer or objective produced a non-finite value.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// The requested command or study does not exist.
class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace acs
