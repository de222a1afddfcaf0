#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lcgf {

/// Process exit codes used by the CLI. Every library error maps to one of them.
enum class ExitCode : int {
  kOk = 0,
  kInput = 1,
  kNumerical = 2,
  kInsufficientData = 3,
};

class Error : public std::runtime_error {
 public:
  Error(const std::string& what, ExitCode code)
      : std::runtime_error(what), code_(code) {}
  ExitCode exit_code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Malformed arguments, violated preconditions, unknown names.
class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(what, ExitCode::kInput) {}
};

/// Refusal to allocate beyond a configured cap.
class CapacityError : public Error {
 public:
  explicit CapacityError(const std::string& what) : Error(what, ExitCode::kInput) {}
};

/// Operation called on an object that lacks the data it needs.
class StateError : public Error {
 public:
  explicit StateError(const std::string& what) : Error(what, ExitCode::kInput) {}
};

/// Argument outside the mathematical domain of a formula.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(what, ExitCode::kNumerical) {}
};

class NotPDError : public Error {
 public:
  NotPDError(std::size_t pivot_index, double pivot_value)
      : Error("matrix is not positive definite: pivot " + std::to_string(pivot_index) +
                  " = " + std::to_string(pivot_value),
              ExitCode::kNumerical),
        pivot_index_(pivot_index),
        pivot_value_(pivot_value) {}
  std::size_t pivot_index() const noexcept { return pivot_index_; }
  double pivot_value() const noexcept { return pivot_value_; }

 private:
  std::size_t pivot_index_;
  double pivot_value_;
};

/// The variance-matching step of the approximation field produced a^2 < 0.
class NegativeCorrectionVariance : public Error {
 public:
  NegativeCorrectionVariance(std::size_t class_index, double value)
      : Error("negative correction variance a^2 = " + std::to_string(value) +
                  " for residue class " + std::to_string(class_index),
              ExitCode::kNumerical),
        class_index_(class_index),
        value_(value) {}
  std::size_t class_index() const noexcept { return class_index_; }
  double value() const noexcept { return value_; }

 private:
  std::size_t class_index_;
  double value_;
};

class InsufficientDataError : public Error {
 public:
  explicit InsufficientDataError(const std::string& what)
      : Error(what, ExitCode::kInsufficientData) {}
};

}  // namespace lcgf
