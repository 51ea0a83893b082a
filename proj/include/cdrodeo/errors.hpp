#pragma once

#include <stdexcept>
#include <string>

namespace cdrodeo {

/// Raised when user-supplied data or configuration violates a precondition.
struct input_error : std::runtime_error {
  explicit input_error(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when an internal numeric routine fails (quadrature non-convergence,
/// non-finite statistics from a corrupt cache, ...).
struct numeric_error : std::runtime_error {
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cdrodeo
