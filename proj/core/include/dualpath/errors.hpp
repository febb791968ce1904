#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dualpath {

enum class ErrorKind {
  kDimension,
  kEmptyInput,
  kUnsupportedScheme,
  kUnknownClass,
  kDegenerateSnr,
  kTrainingFault,
  kInvalidArgument,
  kIo,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a machine-readable kind so the
// CLI can report it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, const char* message) {
  if (!condition) fail(kind, message);
}

}  // namespace dualpath
