#include "dualpath/errors.hpp"

namespace dualpath {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension: return "dimension";
    case ErrorKind::kEmptyInput: return "empty_input";
    case ErrorKind::kUnsupportedScheme: return "unsupported_scheme";
    case ErrorKind::kUnknownClass: return "unknown_class";
    case ErrorKind::kDegenerateSnr: return "degenerate_snr";
    case ErrorKind::kTrainingFault: return "training_fault";
    case ErrorKind::kInvalidArgument: return "invalid_argument";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace dualpath
