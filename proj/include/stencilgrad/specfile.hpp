#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "stencilgrad/nest.hpp"

namespace stencilgrad {

struct SpecParseResult {
  std::optional<Problem> problem;  // engaged iff report.ok()
  ValidationReport report;
};

/// Parses and validates a JSON stencil description. Diagnostics carry the
/// offending field path (and a line number for JSON syntax errors).
SpecParseResult parse_spec(std::string_view json_text);

std::string serialize_spec(const Problem& p);

}  // namespace stencilgrad
