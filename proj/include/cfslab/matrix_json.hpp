#pragma once

// Matrix literal: { "dim": k, "entries": [[ [re,im], ... ], ...] }, row-major.

#include <json.hpp>

#include "cfslab/linop.hpp"

namespace cfslab {

// Throws ConfigError on ragged rows, a dim mismatch, or non-numeric entries.
Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const Matrix& m);

// Parses a file's text, wrapping parse errors as ConfigError with line/column.
nlohmann::json parse_json_text(const std::string& text, const std::string& origin);
nlohmann::json load_json_file(const std::string& path);

}  // namespace cfslab
