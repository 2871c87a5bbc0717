#include "tkg/transcript.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "tkg/error.hpp"
#include "tkg/text.hpp"

namespace tkg {

std::vector<Episode> parse_transcript(std::istream& in, const std::string& group) {
  std::vector<Episode> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fail = [&](const std::string& why) {
      throw Error(ErrorCode::InvalidArgument, "transcript line " + std::to_string(lineno) + ": " + why);
    };
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(e.what());
    }
    if (!j.is_object()) fail("expected a JSON object");
    Episode ep;
    ep.group = group;
    if (j.contains("kind")) {
      if (!j["kind"].is_string()) fail("'kind' must be a string");
      auto kind = parse_episode_kind(j["kind"].get<std::string>());
      if (!kind) fail("unknown kind '" + j["kind"].get<std::string>() + "'");
      ep.kind = *kind;
    }
    for (const char* key : {"actor", "role"}) {
      if (j.contains(key) && !j[key].is_null()) {
        if (!j[key].is_string()) fail(std::string("'") + key + "' must be a string");
        ep.actor = j[key].get<std::string>();
        break;
      }
    }
    if (!j.contains("content") || !j["content"].is_string()) fail("missing string 'content'");
    ep.content = j["content"].get<std::string>();
    if (!j.contains("timestamp") || !j["timestamp"].is_string()) fail("missing string 'timestamp'");
    auto t = parse_iso8601(j["timestamp"].get<std::string>());
    if (!t) fail("timestamp is not ISO 8601");
    ep.t_ref = *t;
    if (ep.kind == EpisodeKind::Message && !ep.actor) fail("message without actor or role");
    out.push_back(std::move(ep));
  }
  return out;
}

std::vector<Episode> read_transcript(const std::filesystem::path& path, const std::string& group) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return parse_transcript(in, group);
}

void write_transcript(std::ostream& out, const std::vector<Episode>& episodes) {
  for (const auto& ep : episodes) {
    nlohmann::json j;
    if (ep.actor) j["actor"] = *ep.actor;
    j["content"] = ep.content;
    j["timestamp"] = format_iso8601(ep.t_ref);
    if (ep.kind != EpisodeKind::Message) j["kind"] = std::string(to_string(ep.kind));
    out << j.dump() << '\n';
  }
}

}  // namespace tkg
