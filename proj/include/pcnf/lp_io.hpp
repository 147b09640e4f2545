#pragma once

#include <string>
#include <string_view>

#include "pcnf/lp.hpp"

namespace pcnf {

enum class LpFormat { Mps, LpText };

[[nodiscard]] LpFormat parse_lp_format(const std::string& name);

// Deterministic text forms: rows and columns sorted by name, numbers in
// shortest round-trip notation, nonnegativity implied (no BOUNDS section).
// Throws InputError on duplicate or malformed names.
[[nodiscard]] std::string to_mps(const LinearProgram& lp);
[[nodiscard]] std::string to_lp_text(const LinearProgram& lp);

// Equality rows only. Throws InputError with the offending line.
[[nodiscard]] LinearProgram parse_mps(std::string_view text);
[[nodiscard]] LinearProgram parse_lp_text(std::string_view text);

void write_lp_file(const LinearProgram& lp, LpFormat format, const std::string& path);
// Format chosen by extension: ".mps" or ".lp".
[[nodiscard]] LinearProgram read_lp_file(const std::string& path);

}  // namespace pcnf
