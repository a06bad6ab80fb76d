// SPDX-License-Identifier: Apache-2.0
#include <cstring>
#include <string>

#include "qbt/error.hpp"
#include "qbt/types.hpp"

namespace qbt {

const char *error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::invalid_spec: return "invalid-spec";
    case ErrorCode::domain_error: return "domain-error";
    case ErrorCode::ambiguous_frame: return "ambiguous-frame";
    case ErrorCode::corner_hit: return "corner-hit";
    case ErrorCode::grazing: return "grazing";
    case ErrorCode::resolution: return "resolution";
    case ErrorCode::unsupported_domain: return "unsupported-domain";
    case ErrorCode::precondition: return "precondition";
    case ErrorCode::numerical: return "numerical";
    case ErrorCode::io: return "io";
    case ErrorCode::checksum: return "checksum";
    case ErrorCode::config: return "config";
    case ErrorCode::wrong_bc: return "wrong-bc";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

const char *to_string(BoundaryCondition bc) noexcept {
  return bc == BoundaryCondition::dirichlet ? "dirichlet" : "neumann";
}

BoundaryCondition parse_bc(const char *text) {
  if (text && (std::strcmp(text, "dirichlet") == 0 || std::strcmp(text, "D") == 0))
    return BoundaryCondition::dirichlet;
  if (text && (std::strcmp(text, "neumann") == 0 || std::strcmp(text, "N") == 0))
    return BoundaryCondition::neumann;
  fail(ErrorCode::config, std::string("unknown boundary condition: ") + (text ? text : "(null)"));
}

}  // namespace qbt
