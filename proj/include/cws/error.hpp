#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cws {

enum class ErrorCategory {
  Usage,
  Config,
  Io,
  Parse,
  Precondition,
  Training,
  Mismatch,
};

inline std::string_view category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Usage: return "usage";
    case ErrorCategory::Config: return "config";
    case ErrorCategory::Io: return "io";
    case ErrorCategory::Parse: return "parse";
    case ErrorCategory::Precondition: return "precondition";
    case ErrorCategory::Training: return "training";
    case ErrorCategory::Mismatch: return "mismatch";
  }
  return "unknown";
}

// Process exit code for a failure of the given category (success is 0).
inline int exit_code(ErrorCategory c) { return 2 + static_cast<int>(c); }

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace cws
