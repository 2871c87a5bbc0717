#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "tkg/types.hpp"

namespace tkg {

/// JSON Lines, one object per message:
///   {"actor": "Alice", "content": "...", "timestamp": "2024-03-01T09:00:00Z"}
/// "role" is accepted in place of "actor"; "kind" (message|text|json)
/// defaults to message. Blank lines are skipped. Throws InvalidArgument
/// naming the offending line.
std::vector<Episode> parse_transcript(std::istream& in, const std::string& group = "default");
std::vector<Episode> read_transcript(const std::filesystem::path& path, const std::string& group = "default");

void write_transcript(std::ostream& out, const std::vector<Episode>& episodes);

}  // namespace tkg
