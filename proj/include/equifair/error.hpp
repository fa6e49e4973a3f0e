#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace equifair {

// Every failure surfaced by the library carries one of these categories. The
// CLI maps each to a distinct exit code and prints the kebab-case name.
enum class ErrorCategory {
  usage,
  missing_file,
  format,
  empty_input,
  invalid_argument,
  degenerate,
  unknown_group,
  io,
};

std::string_view category_name(ErrorCategory c) noexcept;
int exit_code(ErrorCategory c) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& message) {
  throw Error(category, message);
}

inline void require(bool condition, ErrorCategory category, const std::string& message) {
  if (!condition) throw Error(category, message);
}

}  // namespace equifair
