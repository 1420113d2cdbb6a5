#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ics::text {

// Lowercases ASCII letters and splits on whitespace and ASCII punctuation.
// Bytes >= 0x80 are kept, so UTF-8 words survive intact. Deterministic and
// idempotent on its own space-joined output.
std::vector<std::string> tokenize(std::string_view text);

std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace ics::text
