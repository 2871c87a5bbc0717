#include "tkg/mock_extractor.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <set>
#include <unordered_set>

#include "tkg/text.hpp"

namespace tkg {

std::string render_episode(const Episode& ep) {
  if (ep.kind == EpisodeKind::Message && ep.actor && !ep.actor->empty()) return *ep.actor + ": " + ep.content;
  return ep.content;
}

namespace {

const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> words = {
      "a", "about", "actually", "after", "also", "an", "and", "anyway", "are", "as", "at", "before", "but", "by",
      "can", "could", "did", "do", "does", "for", "from", "had", "has", "have", "he", "hello", "her", "here",
      "hey", "hi", "his", "how", "i", "i'd", "i'll", "i'm", "i've", "if", "in", "is", "it", "it's", "its", "just",
      "last", "let", "let's", "maybe", "me", "my", "next", "no", "not", "now", "of", "oh", "ok", "okay", "on",
      "or", "our", "please", "recently", "she", "should", "since", "so", "sure", "thanks", "that", "the", "their",
      "then", "there", "these", "they", "this", "those", "to", "today", "tomorrow", "until", "was", "we", "well",
      "were", "what", "when", "where", "who", "why", "will", "with", "would", "yes", "yesterday", "you", "your",
      "january", "february", "march", "april", "may", "june", "july", "august", "september", "october",
      "november", "december", "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday",
      "currently", "still", "finally", "speaking", "by the way", "guess", "interesting", "nice", "cool", "great",
      "wow", "really", "good", "funny", "honestly", "btw"};
  return words;
}

const std::array<std::string_view, 12> kMonths = {"january", "february", "march",     "april",   "may",      "june",
                                                  "july",    "august",   "september", "october", "november", "december"};

std::string lower(std::string_view s) { return to_lower_utf8(s); }

bool is_initial(std::string_view core) {
  return core.size() == 2 && std::isupper(static_cast<unsigned char>(core[0])) && core[1] == '.';
}

/// One whitespace-separated word of a sentence.
struct Word {
  std::string core;   // without surrounding punctuation (initials keep their dot)
  bool breaks = false;  // followed by punctuation that ends a name run
};

bool is_capitalized(const Word& w) {
  if (w.core.empty()) return false;
  const auto c = static_cast<unsigned char>(w.core[0]);
  if (c < 0x80) return std::isupper(c) != 0;
  // Non-ASCII: capitalized when lowercasing changes the leading character.
  return lower(w.core).substr(0, 4) != w.core.substr(0, 4);
}

std::vector<Word> split_words(std::string_view sentence) {
  std::vector<Word> out;
  for (const auto& raw : split_whitespace(sentence)) {
    std::size_t b = 0, e = raw.size();
    auto punct = [](char c) {
      return c == ',' || c == '.' || c == ';' || c == ':' || c == '!' || c == '?' || c == '"' || c == '(' ||
             c == ')' || c == '[' || c == ']';
    };
    while (b < e && punct(raw[b])) ++b;
    while (e > b && punct(raw[e - 1])) --e;
    Word w;
    w.core = raw.substr(b, e - b);
    if (e < raw.size()) {
      const std::string_view tail(raw.data() + e, raw.size() - e);
      if (tail == "." && w.core.size() == 1 && std::isupper(static_cast<unsigned char>(w.core[0]))) {
        w.core += '.';
      } else {
        w.breaks = true;
      }
    }
    if (!w.core.empty()) out.push_back(std::move(w));
  }
  return out;
}

/// Sentence split on . ! ? followed by whitespace, except after initials and
/// a few abbreviations.
std::vector<std::string> split_sentences(std::string_view text) {
  static const std::set<std::string> abbrev = {"mr", "mrs", "ms", "dr", "st", "jr", "sr", "prof"};
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    if (i + 1 < text.size() && !std::isspace(static_cast<unsigned char>(text[i + 1]))) continue;
    if (c == '.') {
      std::size_t j = i;
      while (j > start && std::isalpha(static_cast<unsigned char>(text[j - 1]))) --j;
      const auto word = lower(text.substr(j, i - j));
      if ((i - j == 1 && std::isupper(static_cast<unsigned char>(text[j]))) || abbrev.count(word)) continue;
    }
    auto s = trim(text.substr(start, i + 1 - start));
    if (!s.empty()) out.push_back(std::move(s));
    start = i + 1;
  }
  auto s = trim(text.substr(start));
  if (!s.empty()) out.push_back(std::move(s));
  return out;
}

std::string join(const std::vector<Word>& words, std::size_t b, std::size_t e) {
  std::string out;
  for (std::size_t i = b; i < e; ++i) {
    if (!out.empty()) out += ' ';
    out += words[i].core;
  }
  return out;
}

/// Capitalized runs as [begin, end) word ranges, leading stopwords removed.
std::vector<std::pair<std::size_t, std::size_t>> name_runs(const std::vector<Word>& words) {
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  std::size_t i = 0;
  while (i < words.size()) {
    if (!is_capitalized(words[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < words.size() && is_capitalized(words[j])) {
      ++j;
      if (words[j - 1].breaks) break;
    }
    std::size_t b = i;
    while (b < j && stopwords().count(lower(words[b].core))) ++b;
    // A trailing initial ("Turing A.") is not a name on its own.
    if (b < j && !(j - b == 1 && is_initial(words[b].core))) runs.emplace_back(b, j);
    i = j;
  }
  return runs;
}

std::vector<std::string> entity_names(const std::vector<Word>& words) {
  std::vector<std::string> out;
  for (auto [b, e] : name_runs(words)) out.push_back(join(words, b, e));
  return out;
}

bool contains_ci(const std::vector<std::string>& haystack, const std::string& name) {
  const auto l = lower(name);
  return std::any_of(haystack.begin(), haystack.end(), [&](const std::string& h) { return lower(h) == l; });
}

// -- fact grammar -------------------------------------------------------------

struct VerbPattern {
  std::vector<std::string_view> words;
  std::string_view predicate;
  bool past;
};

const std::vector<VerbPattern>& verb_patterns() {
  static const std::vector<VerbPattern> table = [] {
    std::vector<VerbPattern> t = {
        {{"started", "a", "new", "job", "at"}, "WORKS_FOR", false},
        {{"started", "working", "at"}, "WORKS_FOR", false},
        {{"started", "working", "for"}, "WORKS_FOR", false},
        {{"got", "a", "job", "at"}, "WORKS_FOR", false},
        {{"am", "working", "at"}, "WORKS_FOR", false},
        {{"is", "working", "at"}, "WORKS_FOR", false},
        {{"work", "at"}, "WORKS_FOR", false},
        {{"works", "at"}, "WORKS_FOR", false},
        {{"work", "for"}, "WORKS_FOR", false},
        {{"works", "for"}, "WORKS_FOR", false},
        {{"joined"}, "WORKS_FOR", false},
        {{"worked", "at"}, "WORKS_FOR", true},
        {{"worked", "for"}, "WORKS_FOR", true},
        {{"used", "to", "work", "at"}, "WORKS_FOR", true},
        {{"used", "to", "work", "for"}, "WORKS_FOR", true},
        {{"have", "lived", "in"}, "LIVES_IN", false},
        {{"has", "lived", "in"}, "LIVES_IN", false},
        {{"am", "living", "in"}, "LIVES_IN", false},
        {{"is", "living", "in"}, "LIVES_IN", false},
        {{"live", "in"}, "LIVES_IN", false},
        {{"lives", "in"}, "LIVES_IN", false},
        {{"moved", "to"}, "LIVES_IN", false},
        {{"moved", "back", "to"}, "LIVES_IN", false},
        {{"relocated", "to"}, "LIVES_IN", false},
        {{"lived", "in"}, "LIVES_IN", true},
        {{"used", "to", "live", "in"}, "LIVES_IN", true},
        {{"am", "friends", "with"}, "IS_FRIENDS_WITH", false},
        {{"is", "friends", "with"}, "IS_FRIENDS_WITH", false},
        {{"was", "friends", "with"}, "IS_FRIENDS_WITH", true},
        {{"am", "married", "to"}, "MARRIED_TO", false},
        {{"is", "married", "to"}, "MARRIED_TO", false},
        {{"got", "married", "to"}, "MARRIED_TO", false},
        {{"married"}, "MARRIED_TO", false},
        {{"was", "married", "to"}, "MARRIED_TO", true},
        {{"study", "at"}, "STUDIES_AT", false},
        {{"studies", "at"}, "STUDIES_AT", false},
        {{"am", "studying", "at"}, "STUDIES_AT", false},
        {{"is", "studying", "at"}, "STUDIES_AT", false},
        {{"studied", "at"}, "STUDIES_AT", true},
        {{"visited"}, "VISITED", true},
        {{"went", "to"}, "VISITED", true},
        {{"traveled", "to"}, "VISITED", true},
        {{"travelled", "to"}, "VISITED", true},
        {{"was", "born", "in"}, "BORN_IN", true},
        {{"were", "born", "in"}, "BORN_IN", true},
        {{"own"}, "OWNS", false},
        {{"owns"}, "OWNS", false},
        {{"bought"}, "OWNS", false},
        {{"owned"}, "OWNS", true},
        {{"love"}, "LOVES", false},
        {{"loves"}, "LOVES", false},
        {{"loved"}, "LOVES", true},
        {{"like"}, "LIKES", false},
        {{"likes"}, "LIKES", false},
        {{"liked"}, "LIKES", true},
        {{"know"}, "KNOWS", false},
        {{"knows"}, "KNOWS", false},
        {{"met"}, "KNOWS", false},
        {{"knew"}, "KNOWS", true},
    };
    // Longest pattern first so "used to work at" wins over shorter prefixes.
    std::stable_sort(t.begin(), t.end(),
                     [](const VerbPattern& a, const VerbPattern& b) { return a.words.size() > b.words.size(); });
    return t;
  }();
  return table;
}

std::string_view past_phrase(std::string_view predicate) {
  static const std::map<std::string_view, std::string_view> table = {
      {"WORKS_FOR", "worked at"},      {"LIVES_IN", "lived in"},        {"LIKES", "liked"},
      {"LOVES", "loved"},              {"IS_FRIENDS_WITH", "was friends with"},
      {"MARRIED_TO", "was married to"}, {"STUDIES_AT", "studied at"},   {"VISITED", "visited"},
      {"BORN_IN", "was born in"},      {"OWNS", "owned"},               {"KNOWS", "knew"}};
  auto it = table.find(predicate);
  return it == table.end() ? predicate : it->second;
}

const std::set<std::string>& adverbs() {
  static const std::set<std::string> words = {"also", "now", "still", "recently", "just", "currently", "actually",
                                              "finally", "really", "already"};
  return words;
}

const std::set<std::string>& temporal_triggers() {
  static const std::set<std::string> words = {"since", "in", "on", "from", "until", "till", "yesterday", "last",
                                              "during", "back"};
  return words;
}

// -- dates --------------------------------------------------------------------

std::optional<int> number_word(const std::string& w) {
  static const std::map<std::string, int> words = {
      {"a", 1},   {"an", 1},   {"one", 1},   {"two", 2},    {"three", 3},  {"four", 4},  {"five", 5},
      {"six", 6}, {"seven", 7}, {"eight", 8}, {"nine", 9},   {"ten", 10},   {"eleven", 11}, {"twelve", 12},
      {"few", 3}, {"couple", 2}};
  if (auto it = words.find(w); it != words.end()) return it->second;
  if (!w.empty() && w.size() <= 4 && std::all_of(w.begin(), w.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    return std::stoi(w);
  return std::nullopt;
}

std::optional<unsigned> month_of(const std::string& w) {
  for (std::size_t i = 0; i < kMonths.size(); ++i) {
    if (w == kMonths[i] || (w.size() == 3 && kMonths[i].substr(0, 3) == w)) return static_cast<unsigned>(i + 1);
  }
  return std::nullopt;
}

std::optional<int> year_of(const std::string& w) {
  if (w.size() != 4 || !std::all_of(w.begin(), w.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    return std::nullopt;
  const int y = std::stoi(w);
  if (y < 1000 || y > 2999) return std::nullopt;
  return y;
}

std::optional<unsigned> day_of(const std::string& w) {
  std::string d = w;
  for (auto suffix : {"st", "nd", "rd", "th"})
    if (d.size() > 2 && d.ends_with(suffix)) d.resize(d.size() - 2);
  if (d.empty() || d.size() > 2 || !std::all_of(d.begin(), d.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    return std::nullopt;
  const auto v = static_cast<unsigned>(std::stoi(d));
  if (v < 1 || v > 31) return std::nullopt;
  return v;
}

/// Parses a date expression starting at words[i]; returns the instant and the
/// number of words consumed.
std::optional<std::pair<Timestamp, std::size_t>> parse_date(const std::vector<std::string>& w, std::size_t i,
                                                            Timestamp reference) {
  if (i >= w.size()) return std::nullopt;
  if (w[i].size() >= 10 && std::isdigit(static_cast<unsigned char>(w[i][0])) && w[i].find('-') != std::string::npos) {
    if (auto t = parse_iso8601(w[i])) return std::make_pair(*t, std::size_t{1});
  }
  if (auto m = month_of(w[i])) {
    if (i + 1 < w.size()) {
      if (auto d = day_of(w[i + 1])) {
        int year = to_civil(reference).year;
        std::size_t used = 2;
        if (i + 2 < w.size())
          if (auto y = year_of(w[i + 2])) {
            year = *y;
            used = 3;
          }
        return std::make_pair(Timestamp::from_civil(year, *m, *d), used);
      }
      if (auto y = year_of(w[i + 1])) return std::make_pair(Timestamp::from_civil(*y, *m, 1), std::size_t{2});
    }
    return std::nullopt;
  }
  if (auto d = day_of(w[i]); d && i + 2 < w.size()) {
    if (auto m = month_of(w[i + 1]))
      if (auto y = year_of(w[i + 2])) return std::make_pair(Timestamp::from_civil(*y, *m, *d), std::size_t{3});
  }
  if (auto y = year_of(w[i])) return std::make_pair(Timestamp::from_civil(*y, 1, 1), std::size_t{1});
  return std::nullopt;
}

/// "N units ago", "yesterday", "last week|month|year" at words[i].
std::optional<std::pair<Timestamp, std::size_t>> parse_relative(const std::vector<std::string>& w, std::size_t i,
                                                                Timestamp reference) {
  if (w[i] == "yesterday") return std::make_pair(add_days(reference, -1), std::size_t{1});
  if (w[i] == "last" && i + 1 < w.size()) {
    if (w[i + 1] == "week") return std::make_pair(add_days(reference, -7), std::size_t{2});
    if (w[i + 1] == "month") return std::make_pair(add_months(reference, -1), std::size_t{2});
    if (w[i + 1] == "year") return std::make_pair(add_years(reference, -1), std::size_t{2});
    return std::nullopt;
  }
  auto n = number_word(w[i]);
  if (!n) return std::nullopt;
  std::size_t j = i + 1;
  if (j < w.size() && (w[j] == "few" || w[j] == "couple")) {
    n = number_word(w[j]);
    ++j;
  }
  if (j < w.size() && w[j] == "of") ++j;
  if (j + 1 >= w.size() || w[j + 1] != "ago") return std::nullopt;
  std::string unit = w[j];
  if (unit.ends_with("s")) unit.pop_back();
  Timestamp t;
  if (unit == "day") t = add_days(reference, -*n);
  else if (unit == "week") t = add_days(reference, -7 * static_cast<std::int64_t>(*n));
  else if (unit == "month") t = add_months(reference, -*n);
  else if (unit == "year") t = add_years(reference, -*n);
  else return std::nullopt;
  return std::make_pair(t, j + 2 - i);
}

std::vector<std::string> lowered_words(std::string_view text) {
  std::vector<std::string> out;
  for (auto& w : split_words(text)) out.push_back(lower(w.core));
  return out;
}

/// True when `words` starting at `i` contain a recognizable time expression.
bool has_time_expression(const std::vector<std::string>& w, Timestamp ref) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (parse_relative(w, i, ref)) return true;
    if (temporal_triggers().count(w[i]) && parse_date(w, i + 1, ref)) return true;
  }
  return false;
}

bool mentions_past(const std::vector<std::string>& w) {
  static const std::set<std::string> past = {"worked", "lived",  "liked", "loved", "was",  "were",
                                             "studied", "visited", "owned", "knew",  "used", "had"};
  return std::any_of(w.begin(), w.end(), [](const std::string& x) { return past.count(x) != 0; });
}

std::string canonical_text(std::string_view s) { return lower(trim(s)); }

}  // namespace

// -- Extractor operations -----------------------------------------------------

std::string_view DeterministicMockExtractor::canonical_phrase(std::string_view predicate) {
  static const std::map<std::string_view, std::string_view> table = {
      {"WORKS_FOR", "works at"},      {"LIVES_IN", "lives in"},        {"LIKES", "likes"},
      {"LOVES", "loves"},             {"IS_FRIENDS_WITH", "is friends with"},
      {"MARRIED_TO", "is married to"}, {"STUDIES_AT", "studies at"},   {"VISITED", "visited"},
      {"BORN_IN", "was born in"},     {"OWNS", "owns"},                {"KNOWS", "knows"}};
  auto it = table.find(predicate);
  return it == table.end() ? predicate : it->second;
}

bool DeterministicMockExtractor::is_single_valued(std::string_view predicate) {
  return predicate == "WORKS_FOR" || predicate == "LIVES_IN" || predicate == "MARRIED_TO" || predicate == "BORN_IN";
}

std::vector<ExtractedEntity> DeterministicMockExtractor::extract_entities(
    const EpisodeContext& ctx, std::span<const ExtractedEntity> already_extracted) {
  std::vector<ExtractedEntity> all;
  std::vector<std::string> seen;
  const auto sentences = split_sentences(ctx.current.content);
  if (ctx.current.actor && !trim(*ctx.current.actor).empty()) {
    const auto speaker = trim(*ctx.current.actor);
    all.push_back({speaker, sentences.empty() ? std::string() : sentences.front()});
    seen.push_back(speaker);
  }
  for (const auto& sentence : sentences) {
    for (auto& name : entity_names(split_words(sentence))) {
      if (contains_ci(seen, name)) continue;
      seen.push_back(name);
      all.push_back({name, sentence});
    }
  }
  if (already_extracted.empty()) return all;
  std::vector<std::string> known;
  for (const auto& e : already_extracted) known.push_back(e.name);
  std::vector<ExtractedEntity> missed;
  for (auto& e : all)
    if (!contains_ci(known, e.name)) missed.push_back(std::move(e));
  return missed;
}

namespace {

std::vector<std::string> name_tokens(std::string_view name) {
  std::vector<std::string> out;
  for (auto& w : split_whitespace(name)) {
    auto l = lower(w);
    while (!l.empty() && l.back() == '.') l.pop_back();
    if (!l.empty()) out.push_back(std::move(l));
  }
  return out;
}

/// Every token of `shorter` equals a distinct token of `longer` or is the
/// initial of one, in order.
bool token_subset(const std::vector<std::string>& shorter, const std::vector<std::string>& longer) {
  if (shorter.empty() || shorter.size() > longer.size()) return false;
  std::size_t j = 0;
  for (const auto& t : shorter) {
    bool found = false;
    while (j < longer.size()) {
      const auto& l = longer[j++];
      if (t == l || (t.size() == 1 && l.front() == t.front())) {
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  // An initial alone must not stand in for a whole name.
  return std::any_of(shorter.begin(), shorter.end(), [](const std::string& t) { return t.size() > 1; });
}

}  // namespace

EntityResolution DeterministicMockExtractor::resolve_entity(const EpisodeContext&,
                                                            std::span<const EntityCandidate> existing,
                                                            const ExtractedEntity& candidate) {
  const auto wanted = lower(trim(candidate.name));
  for (const auto& e : existing) {
    if (lower(trim(e.name)) == wanted) return {true, e.id, e.name};
  }
  if (options_.token_subset_matching) {
    const auto cand = name_tokens(candidate.name);
    for (const auto& e : existing) {
      const auto other = name_tokens(e.name);
      const bool cand_shorter = cand.size() < other.size() ||
                                (cand.size() == other.size() && candidate.name.size() <= e.name.size());
      const bool match = cand_shorter ? token_subset(cand, other) : token_subset(other, cand);
      if (match) return {true, e.id, candidate.name.size() > e.name.size() ? candidate.name : e.name};
    }
  }
  return {};
}

std::vector<ExtractedFact> DeterministicMockExtractor::extract_facts(const EpisodeContext& ctx,
                                                                     std::span<const ExtractedEntity> entities) {
  std::vector<std::string> known;
  for (const auto& e : entities) known.push_back(e.name);
  auto canonical_name = [&](const std::string& name) -> std::optional<std::string> {
    const auto l = lower(name);
    for (const auto& k : known)
      if (lower(k) == l) return k;
    return std::nullopt;
  };
  const std::optional<std::string> speaker =
      ctx.current.actor ? canonical_name(trim(*ctx.current.actor)) : std::nullopt;

  std::vector<ExtractedFact> facts;
  for (const auto& sentence : split_sentences(ctx.current.content)) {
    auto words = split_words(sentence);
    std::string lead_time;
    // "In 2020, I moved to Boston": a leading time phrase up to the first comma.
    for (std::size_t i = 0; i + 1 < words.size() && i < 6; ++i) {
      if (!words[i].breaks) continue;
      std::vector<std::string> head;
      for (std::size_t k = 0; k <= i; ++k) head.push_back(lower(words[k].core));
      if (has_time_expression(head, Timestamp{})) {
        lead_time = join(words, 0, i + 1);
        words.erase(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(i + 1));
      }
      break;
    }
    if (words.empty()) continue;

    // Subject: "I", one proper noun, or a coordinated list of proper nouns.
    std::vector<std::string> subjects;
    std::size_t pos = 0;
    if (words[0].core == "I" && speaker) {
      subjects.push_back(*speaker);
      pos = 1;
    } else {
      while (pos < words.size()) {
        if (!is_capitalized(words[pos])) break;
        std::size_t j = pos;
        while (j < words.size() && is_capitalized(words[j])) {
          ++j;
          if (words[j - 1].breaks) break;
        }
        auto name = canonical_name(join(words, pos, j));
        if (!name) break;
        subjects.push_back(*name);
        pos = j;
        if (pos < words.size() && lower(words[pos].core) == "and" && !words[pos - 1].breaks) {
          ++pos;
        } else if (pos < words.size() && lower(words[pos].core) == "and") {
          ++pos;
        } else if (!words[pos - 1].breaks) {
          break;
        }
      }
    }
    if (subjects.empty()) continue;

    std::vector<std::string> rest;
    for (std::size_t i = pos; i < words.size(); ++i) rest.push_back(lower(words[i].core));

    // Group statements over all subjects.
    if (subjects.size() >= 2) {
      std::string predicate;
      if (rest.size() >= 2 && rest[0] == "are" && rest[1] == "friends") predicate = "IS_FRIENDS_WITH";
      else if (rest.size() >= 2 && rest[0] == "are" && rest[1] == "married" && subjects.size() == 2)
        predicate = "MARRIED_TO";
      else if (rest.size() >= 3 && rest[0] == "know" && rest[1] == "each" && rest[2] == "other") predicate = "KNOWS";
      if (!predicate.empty()) {
        std::string fact = trim(sentence);
        while (!fact.empty() && (fact.back() == '.' || fact.back() == '!')) fact.pop_back();
        for (std::size_t a = 0; a < subjects.size(); ++a)
          for (std::size_t b = a + 1; b < subjects.size(); ++b)
            if (lower(subjects[a]) != lower(subjects[b])) facts.push_back({subjects[a], subjects[b], predicate, fact});
        continue;
      }
    }

    std::size_t r = 0;
    while (r < rest.size() && adverbs().count(rest[r])) ++r;
    const VerbPattern* verb = nullptr;
    for (const auto& p : verb_patterns()) {
      if (r + p.words.size() > rest.size()) continue;
      if (std::equal(p.words.begin(), p.words.end(), rest.begin() + static_cast<std::ptrdiff_t>(r))) {
        verb = &p;
        break;
      }
    }
    if (!verb) continue;
    std::size_t o = pos + r + verb->words.size();
    while (o < words.size() && (lower(words[o].core) == "the" || lower(words[o].core) == "a")) ++o;
    if (o >= words.size() || !is_capitalized(words[o])) continue;
    std::size_t oe = o;
    while (oe < words.size() && is_capitalized(words[oe])) {
      ++oe;
      if (words[oe - 1].breaks) break;
    }
    auto object = canonical_name(join(words, o, oe));
    if (!object) continue;

    std::string time = lead_time;
    if (time.empty()) {
      std::vector<std::string> tail;
      for (std::size_t i = oe; i < words.size(); ++i) tail.push_back(lower(words[i].core));
      for (std::size_t i = 0; i < tail.size(); ++i) {
        std::vector<std::string> from(tail.begin() + static_cast<std::ptrdiff_t>(i), tail.end());
        if ((temporal_triggers().count(tail[i]) || number_word(tail[i]) || tail[i] == "yesterday") &&
            has_time_expression(from, Timestamp{})) {
          time = join(words, oe + i, words.size());
          break;
        }
      }
    }
    const auto phrase = verb->past ? past_phrase(verb->predicate) : canonical_phrase(verb->predicate);
    for (const auto& subject : subjects) {
      if (lower(subject) == lower(*object)) continue;
      std::string fact = subject + " " + std::string(phrase) + " " + *object;
      if (!time.empty()) fact += " " + time;
      facts.push_back({subject, *object, std::string(verb->predicate), std::move(fact)});
    }
  }
  return facts;
}

FactResolution DeterministicMockExtractor::resolve_fact(std::span<const EdgeView> existing,
                                                        const EdgeView& proposed) {
  const auto wanted = canonical_text(proposed.fact);
  for (const auto& e : existing)
    if (e.predicate == proposed.predicate && canonical_text(e.fact) == wanted) return {true, e.id};
  return {};
}

TemporalBounds DeterministicMockExtractor::extract_temporal(const EpisodeContext&, Timestamp reference,
                                                            const std::string& fact) {
  const auto w = lowered_words(fact);
  std::optional<Timestamp> valid, invalid;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == "from") {
      if (auto d = parse_date(w, i + 1, reference)) {
        const auto j = i + 1 + d->second;
        if (j < w.size() && (w[j] == "until" || w[j] == "till" || w[j] == "to" || w[j] == "through")) {
          if (auto e = parse_date(w, j + 1, reference)) {
            valid = d->first;
            invalid = e->first;
            break;
          }
        }
        if (!valid) valid = d->first;
        continue;
      }
    }
    if ((w[i] == "until" || w[i] == "till") && !invalid) {
      if (auto d = parse_date(w, i + 1, reference)) invalid = d->first;
      continue;
    }
    if ((w[i] == "since" || w[i] == "in" || w[i] == "on" || w[i] == "during") && !valid) {
      if (auto d = parse_date(w, i + 1, reference)) valid = d->first;
      continue;
    }
    if (!valid) {
      if (auto d = parse_relative(w, i, reference)) valid = d->first;
    }
  }
  if (!valid && !mentions_past(w)) valid = reference;
  TemporalBounds out;
  if (valid) out.valid_at = format_iso8601(*valid);
  if (invalid) out.invalid_at = format_iso8601(*invalid);
  return out;
}

std::vector<EdgeId> DeterministicMockExtractor::detect_contradictions(const EdgeView& proposed,
                                                                      std::span<const EdgeView> related) {
  std::vector<EdgeId> out;
  const auto fact = canonical_text(proposed.fact);
  for (const auto& r : related) {
    if (r.id == proposed.id || r.predicate != proposed.predicate) continue;
    const bool same_pair = (r.source == proposed.source && r.target == proposed.target) ||
                           (r.source == proposed.target && r.target == proposed.source);
    if (same_pair) {
      if (canonical_text(r.fact) != fact) out.push_back(r.id);
    } else if (is_single_valued(proposed.predicate) && r.source == proposed.source && r.target != proposed.target) {
      out.push_back(r.id);
    }
  }
  return out;
}

std::string DeterministicMockExtractor::summarize(std::span<const std::string> texts) {
  std::vector<std::string> kept;
  std::set<std::string> seen;
  for (const auto& t : texts) {
    for (auto& s : split_sentences(t)) {
      if (kept.size() >= options_.summary_sentence_limit) break;
      if (seen.insert(lower(s)).second) kept.push_back(std::move(s));
    }
  }
  std::string out;
  for (const auto& s : kept) {
    if (!out.empty()) out += ' ';
    out += s;
  }
  return out;
}

std::string DeterministicMockExtractor::community_name(const std::string& summary) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;  // term -> (count, first position)
  std::size_t position = 0;
  for (const auto& t : tokenize(summary)) {
    ++position;
    if (t.size() < 3 || stopwords().count(t)) continue;
    if (std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) continue;
    auto [it, inserted] = counts.try_emplace(t, 0, position);
    ++it->second.first;
  }
  std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> terms(counts.begin(), counts.end());
  std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
    if (a.second.first != b.second.first) return a.second.first > b.second.first;
    return a.second.second < b.second.second;
  });
  std::string out;
  for (std::size_t i = 0; i < terms.size() && i < options_.community_name_terms; ++i) {
    if (!out.empty()) out += ' ';
    out += terms[i].first;
  }
  return out.empty() ? "community" : out;
}

}  // namespace tkg
