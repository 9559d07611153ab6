#pragma once

#include <stdexcept>
#include <string>

namespace grk {

// Base class for every error thrown by the library.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Empty input where at least one element is required.
class empty_input_error : public error {
 public:
  using error::error;
};

// Mismatched vector/matrix dimensions or arities.
class dimension_error : public error {
 public:
  using error::error;
};

// Parameter outside its mathematical domain (tau <= 0, k = 0, ...).
class domain_error : public error {
 public:
  using error::error;
};

// Enumeration request larger than the supported outcome-space guard.
class capacity_error : public error {
 public:
  using error::error;
};

// A(p) denominator vanished at the requested simplex point.
class degenerate_point_error : public error {
 public:
  using error::error;
};

// Non-finite estimate produced during a measurement run.
class poisoned_run_error : public error {
 public:
  using error::error;
};

// Optimization produced non-finite parameters.
class divergence_error : public error {
 public:
  using error::error;
};

// Graph/mode combination that cannot be executed.
class configuration_error : public error {
 public:
  using error::error;
};

// Invalid user-facing configuration (CLI/config file).
class usage_error : public error {
 public:
  using error::error;
};

}  // namespace grk
