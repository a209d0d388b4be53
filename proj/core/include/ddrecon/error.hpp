#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ddrecon {

enum class ErrorCode {
  invalid_argument,
  shape_mismatch,
  infeasible,
  missing_gradient,
  non_finite,
  io,
  bad_magic,
  truncated,
  version_mismatch,
  config,
  empty_split,
};

/// Stable machine-readable name, e.g. "shape_mismatch".
std::string_view code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

  /// Single line: `error[<code>]: <message>`.
  std::string one_line() const;

private:
  ErrorCode code_;
};

} // namespace ddrecon
