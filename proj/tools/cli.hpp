#pragma once

#include <string>
#include <vector>

namespace aniso::cli {

// Exit codes: 0 all asserted properties pass, 1 numerical or property
// failure (diagnostics written), 2 malformed input.
int run(const std::vector<std::string>& args);

// 64-bit FNV-1a, lowercase hex.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace aniso::cli
