#pragma once

#include <stdexcept>
#include <string>

namespace scenehint {

enum class ErrorCode {
  InvalidInput,
  Parse,
  FormatVersion,
  Validation,
  CorruptFile,
  NotFound,
  Io,
};

const char* toString(ErrorCode code);

/// Single exception type for the library; the code tells callers (CLI exit
/// codes, HTTP status mapping) what went wrong.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace scenehint
