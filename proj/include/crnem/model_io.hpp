#pragma once

#include <string>
#include <string_view>

#include "crnem/schemes.hpp"

namespace crnem::schemes {

/// Model JSON: n, m, A, S, c, x0, theta0, and optionally species_x,
/// species_theta, y and rates {"theta": [...], "x": [...]}.
/// Throws ParseError for malformed JSON, ValidationError for bad content.
ModelSpec parse_model(std::string_view text);
ModelSpec load_model(const std::string& path);
std::string model_to_json(const ModelSpec& spec, int indent = 2);

}  // namespace crnem::schemes
