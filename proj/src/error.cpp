#include "equifair/error.hpp"

namespace equifair {

std::string_view category_name(ErrorCategory c) noexcept {
  switch (c) {
    case ErrorCategory::usage: return "usage";
    case ErrorCategory::missing_file: return "missing-file";
    case ErrorCategory::format: return "format";
    case ErrorCategory::empty_input: return "empty-input";
    case ErrorCategory::invalid_argument: return "invalid-argument";
    case ErrorCategory::degenerate: return "degenerate";
    case ErrorCategory::unknown_group: return "unknown-group";
    case ErrorCategory::io: return "io";
  }
  return "internal";
}

int exit_code(ErrorCategory c) noexcept {
  switch (c) {
    case ErrorCategory::usage: return 2;
    case ErrorCategory::missing_file: return 3;
    case ErrorCategory::format: return 4;
    case ErrorCategory::empty_input: return 5;
    case ErrorCategory::invalid_argument: return 6;
    case ErrorCategory::degenerate: return 7;
    case ErrorCategory::unknown_group: return 8;
    case ErrorCategory::io: return 9;
  }
  return 70;
}

}  // namespace equifair
