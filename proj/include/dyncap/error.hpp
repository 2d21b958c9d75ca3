#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace dyncap {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A constitutive relation was evaluated outside its domain of definition.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Invalid mesh, field or matrix dimensions, or a non-physical coefficient
/// reaching the assembly routines.
class AssemblyError : public Error {
public:
  using Error::Error;
};

/// Linear solve failed. `pivot()` is set when the factorization identified
/// the offending column.
class SolverError : public Error {
public:
  explicit SolverError(const std::string& what, std::optional<std::size_t> pivot = std::nullopt)
      : Error(what), pivot_(pivot) {}

  std::optional<std::size_t> pivot() const { return pivot_; }

private:
  std::optional<std::size_t> pivot_;
};

/// Malformed or out-of-range configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// File output failures, always carrying the offending path.
class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace dyncap
