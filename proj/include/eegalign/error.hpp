#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace eegalign {

// Bad input values, shapes or preconditions. The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem and container failures. The CLI maps these to exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TensorErrorKind { BadMagic, BadVersion, UnknownDtype, BadHeader, Truncated };

class TensorFormatError : public IoError {
 public:
  TensorFormatError(TensorErrorKind kind, const std::string& what)
      : IoError(what), kind_(kind) {}
  TensorErrorKind kind() const noexcept { return kind_; }

 private:
  TensorErrorKind kind_;
};

// FastICA did not reach tolerance within the iteration budget.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::size_t iterations)
      : std::runtime_error(what), iterations_(iterations) {}
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  std::size_t iterations_;
};

}  // namespace eegalign
