#pragma once

#include <stdexcept>
#include <string>

namespace fkent {

// Exception hierarchy. The CLI maps each kind onto a process exit code.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration: bad probability vectors, unknown keys, unsorted
// schedules. Exit status 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller violated an operation precondition (eps <= 0, length mismatch, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

// A path or orbit was asked for more steps than it stores.
class RangeError : public Error {
 public:
  using Error::Error;
};

// An operation is not defined for the given system family.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// A runtime invariant assertion failed. Exit status 3.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

// A sample/candidate/memory budget cap was exceeded. Exit status 4.
class ResourceError : public Error {
 public:
  using Error::Error;
};

int exit_code_for(const std::exception& e) noexcept;

}  // namespace fkent
