#include "ddrecon/error.hpp"

#include "ddrecon/random.hpp"

#include <cmath>
#include <numbers>

namespace ddrecon {

std::string_view code_name(ErrorCode code) {
  switch (code) {
  case ErrorCode::invalid_argument: return "invalid_argument";
  case ErrorCode::shape_mismatch: return "shape_mismatch";
  case ErrorCode::infeasible: return "infeasible";
  case ErrorCode::missing_gradient: return "missing_gradient";
  case ErrorCode::non_finite: return "non_finite";
  case ErrorCode::io: return "io";
  case ErrorCode::bad_magic: return "bad_magic";
  case ErrorCode::truncated: return "truncated";
  case ErrorCode::version_mismatch: return "version_mismatch";
  case ErrorCode::config: return "config";
  case ErrorCode::empty_split: return "empty_split";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message) : std::runtime_error(message), code_(code) {}

std::string Error::one_line() const {
  std::string msg = what();
  for (auto& c : msg) {
    if (c == '\n' || c == '\r') {
      c = ' ';
    }
  }
  return "error[" + std::string(code_name(code_)) + "]: " + msg;
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) {
    u1 = uniform();
  }
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace ddrecon
