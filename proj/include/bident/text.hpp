#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace bident::text {

bool is_valid_utf8(std::string_view bytes);

// Strips ASCII whitespace from both ends.
std::string_view trim(std::string_view s);

// Lowercases ASCII letters and splits on ASCII whitespace. Non-ASCII bytes
// pass through unchanged. Never yields empty tokens.
std::vector<std::string> lowercase_tokens(std::string_view s);

}  // namespace bident::text
