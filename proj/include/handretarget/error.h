#pragma once

#include <stdexcept>
#include <string>

namespace hr {

enum class ErrorKind {
  InvalidInput,
  NonManifold,
  Schema,
  Geometry,
  NotFound,
  Solver,
};

// Library-wide exception. `where` carries a field path, face index or other
// locator so callers (CLI, service) can emit machine-readable errors.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string where = {})
      : std::runtime_error(message), kind_(kind), where_(std::move(where)) {}

  ErrorKind kind() const noexcept {
    return kind_;
  }
  const std::string& where() const noexcept {
    return where_;
  }

 private:
  ErrorKind kind_;
  std::string where_;
};

inline const char* toString(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput:
      return "invalid_input";
    case ErrorKind::NonManifold:
      return "non_manifold";
    case ErrorKind::Schema:
      return "schema";
    case ErrorKind::Geometry:
      return "geometry";
    case ErrorKind::NotFound:
      return "not_found";
    case ErrorKind::Solver:
      return "solver";
  }
  return "unknown";
}

} // namespace hr
