#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tsvf {

// Error taxonomy shared by all modules. The CLI maps each family onto its
// exit-code contract (usage 2, data 3, numeric 4).

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside an operation's precondition.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Object fails a structural check (non-unitary evolution, mismatched grids).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Ill-conditioned ratio: singular post-selection, near-orthogonal states,
/// vanishing post-selected norm.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

/// Kinematically impossible event (neutron arriving before it could).
class UnphysicalEventError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Input data that is well-formed but unusable for the requested analysis.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Fit rejected (no usable centroids, non-recoil-like curvature).
class FitError : public DataError {
 public:
  using DataError::DataError;
};

/// Malformed file contents. Carries the 1-based line number.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace tsvf
