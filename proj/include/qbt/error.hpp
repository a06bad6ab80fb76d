// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace qbt {

enum class ErrorCode : int {
  invalid_argument = 1,
  invalid_spec,
  domain_error,
  ambiguous_frame,
  corner_hit,
  grazing,
  resolution,
  unsupported_domain,
  precondition,
  numerical,
  io,
  checksum,
  config,
  wrong_bc,
  internal,
};

const char *error_code_name(ErrorCode code) noexcept;

/// All library failures are reported through this exception; the C API maps
/// `code()` onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &what) {
  throw Error(code, what);
}

}  // namespace qbt
