#pragma once

#include <string>

#include "rareevent/core.hpp"

namespace rareevent {

/// Problem definition from JSON text:
///   {"name": "...", "marginals": [{"normal": {"mean": 0, "sd": 1}}, ...],
///    "threshold": -4, "direction": "below" | "above", "limit_state": "<expression in x1..xd>"}
/// Throws ConfigError on any malformed or missing field.
Problem parse_problem_json(const std::string& text);

/// Reads the file and parses it; the raw text goes to `source` when given.
Problem load_problem_file(const std::string& path, std::string* source = nullptr);

}  // namespace rareevent
