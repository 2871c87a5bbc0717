#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tkg {

/// Splits on word boundaries and lowercases. Letters and digits (ASCII and
/// non-ASCII letters) form words; everything else separates them. No stemming,
/// no stopword removal.
std::vector<std::string> tokenize(std::string_view text);

/// Lowercases ASCII plus the Latin-1, Latin Extended-A, Greek and Cyrillic
/// blocks; other code points pass through unchanged.
std::string to_lower_utf8(std::string_view text);

std::string trim(std::string_view text);

std::vector<std::string> split_whitespace(std::string_view text);

std::size_t whitespace_token_count(std::string_view text);

}  // namespace tkg
