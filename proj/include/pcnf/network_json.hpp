#pragma once

#include <string>

#include "json.hpp"

#include "pcnf/network.hpp"

namespace pcnf {

// Parse the network file format documented in docs/file-formats.md. Throws
// InputError on malformed JSON (with the parser's byte offset), unknown keys
// and wrongly typed fields. Semantic invariants are left to validate_network.
[[nodiscard]] Network parse_network(const nlohmann::json& doc);
[[nodiscard]] Network parse_network_text(const std::string& text);
[[nodiscard]] Network load_network(const std::string& path);

[[nodiscard]] nlohmann::json network_to_json(const Network& net);
[[nodiscard]] nlohmann::json cost_to_json(const CostFunction& c);
[[nodiscard]] CostFunction parse_cost(const nlohmann::json& j);

}  // namespace pcnf
