#pragma once

// JSON output with deterministic key order and 17-significant-digit floats.

#include <string>

#include <json.hpp>

#include "lyapcert/vec.hpp"

namespace lyapcert {

using Json = nlohmann::ordered_json;

// Non-finite values become null.
Json json_number(double value);
Json json_point(const Vec& p, int dimension);

// Indented dump where every floating-point value is printed with %.17g.
std::string dump_json(const Json& value);

}  // namespace lyapcert
