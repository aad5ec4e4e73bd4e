#pragma once

#include <stdexcept>
#include <string>

namespace vfxopt {

/// Coarse classification shared by every error the library raises. The CLI
/// maps each category to its own exit code.
enum class ErrorCategory {
  usage,
  io,
  format,
  numerical,
  validation,
  backend,
  internal,
};

const char *to_string(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorCategory category, const std::string &message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

private:
  ErrorCategory category_;
};

/// Raised when a tensor would hold a NaN or infinity.
class NonFiniteError : public Error {
public:
  explicit NonFiniteError(const std::string &message)
      : Error(ErrorCategory::numerical, message) {}
};

} // namespace vfxopt
