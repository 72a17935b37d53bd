#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lpmbrw {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A structurally invalid model (bad parameters, probabilities that do not
/// sum to one, possible extinction) or one failing a required assumption.
class InvalidModelError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the declared finiteness domain of a cumulant function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A tilt / criticality combination outside the hypotheses of the limit
/// theorems (e.g. theta above the critical tilt).
class RegimeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class BudgetExceededError : public Error {
 public:
  BudgetExceededError(const std::string& what, std::uint64_t replicate)
      : Error(what), replicate_(replicate) {}

  /// Replicate index that overflowed the particle budget.
  std::uint64_t replicate() const noexcept { return replicate_; }

 private:
  std::uint64_t replicate_;
};

/// Raised when an operation receives no usable samples.
class EmptySampleError : public Error {
 public:
  using Error::Error;
};

}  // namespace lpmbrw
