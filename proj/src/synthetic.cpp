#include "tkg/synthetic.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <set>

#include "tkg/context.hpp"

namespace tkg::synthetic {

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  std::size_t below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(gen_() % n); }
  bool chance(double p) { return static_cast<double>(gen_() >> 11) * 0x1.0p-53 < p; }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }
  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

const std::vector<std::string> kFirst = {"Nora", "Omar", "Ingrid", "Tomas", "Leila", "Mateo", "Priya", "Jonas",
                                         "Amara", "Felix", "Yuki", "Sven", "Clara", "Dmitri", "Hana", "Rafael"};
const std::vector<std::string> kLast = {"Lindqvist", "Haddad", "Okafor", "Brennan", "Castellano", "Novak",
                                        "Ramanathan", "Weber", "Sato", "Moreau", "Kowalski", "Adeyemi"};
const std::vector<std::string> kCompanies = {
    "Globex Industries", "Initech Labs",   "Umbrella Logistics", "Vandelay Imports", "Stark Dynamics",
    "Wayne Biotech",     "Hooli Cloud",    "Pied Piper Systems", "Soylent Foods",    "Tyrell Robotics",
    "Cyberdyne Analytics", "Oscorp Energy", "Wonka Confections", "Gringotts Capital", "Acme Corp"};
const std::vector<std::string> kCities = {"Lisbon",  "Kyoto",   "Nairobi", "Montreal", "Oslo",     "Porto",
                                          "Seville", "Tallinn", "Hobart",  "Cusco",    "Valparaiso", "Bergen",
                                          "Zagreb",  "Osaka",   "Dakar",   "Lyon"};
const std::vector<std::string> kSchools = {"Hillcrest University", "Northgate College", "Riverside Institute",
                                           "Lakeshore Academy",    "Westbrook University", "Summit Polytechnic"};
const std::vector<std::string> kWeekWords = {"one", "two", "three", "four", "five", "six"};
const std::array<const char*, 12> kMonthNames = {"January", "February", "March",     "April",   "May",      "June",
                                                 "July",    "August",   "September", "October", "November", "December"};

const std::vector<std::string> kFiller = {
    "That sounds lovely.",
    "How was the rest of your week?",
    "I had a long day, honestly.",
    "We should grab coffee soon.",
    "The weather has been strange lately.",
    "Did you finish that book you were reading?",
    "I am trying to cook more at home.",
    "That reminds me of a funny story.",
    "What are your plans for the weekend?",
    "I think I need a vacation.",
    "My sister keeps sending me podcast recommendations.",
    "It has been a busy month for everyone.",
    "Let me know if you need anything.",
    "The new cafe downstairs is surprisingly good.",
    "I finally fixed my bike.",
    "Sure, that works for me.",
    "Good point, I had not thought of that.",
    "Traffic was terrible this morning.",
};

std::string time_phrase_year(int year) { return "since " + std::to_string(year); }

}  // namespace

Conversation generate_conversation(const ConversationSpec& spec) {
  Rng rng(spec.seed);
  Conversation out;
  const std::array<std::string, 2> speakers = {"Maya", "Theo"};

  // Distinct full names for the people talked about.
  std::vector<std::string> people;
  {
    std::set<std::string> used;
    while (people.size() < spec.people) {
      auto name = rng.pick(kFirst) + " " + rng.pick(kLast);
      if (used.insert(name).second) people.push_back(name);
    }
  }
  std::vector<std::string> subjects = people;
  subjects.push_back(speakers[0]);
  subjects.push_back(speakers[1]);

  struct Slot {
    std::string subject;
    std::string predicate;
  };
  const std::vector<std::string> predicates = {"WORKS_FOR", "LIVES_IN", "STUDIES_AT", "VISITED", "BORN_IN"};
  std::vector<Slot> slots;
  for (const auto& s : subjects)
    for (const auto& p : predicates) slots.push_back({s, p});
  for (std::size_t i = slots.size(); i > 1; --i) std::swap(slots[i - 1], slots[rng.below(i)]);
  const std::size_t planted = std::min(spec.planted_facts, slots.size());
  slots.resize(planted);

  // Planted facts go to evenly spaced message positions.
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < planted; ++i) positions.push_back((i * spec.messages) / std::max<std::size_t>(planted, 1) + 3);
  const std::size_t per_session = (spec.messages + spec.sessions - 1) / std::max<std::size_t>(spec.sessions, 1);

  std::size_t next_fact = 0;
  for (std::size_t m = 0; m < spec.messages; ++m) {
    const std::size_t session = m / per_session;
    const Timestamp t_ref{add_days(spec.start, static_cast<std::int64_t>(session) * 7).ms +
                          static_cast<std::int64_t>(m % per_session) * 90'000};
    Episode ep;
    ep.kind = EpisodeKind::Message;
    ep.t_ref = t_ref;
    ep.group = "synthetic";

    if (next_fact < planted && positions[next_fact] <= m) {
      const auto& slot = slots[next_fact];
      const bool speaker_fact = slot.subject == speakers[0] || slot.subject == speakers[1];
      ep.actor = speaker_fact ? slot.subject : speakers[m % 2];
      const std::string subj = speaker_fact ? "I" : slot.subject;
      std::string object, verb, canonical, query;
      const bool first_person = speaker_fact;
      std::size_t variant = next_fact % 4;
      if (slot.predicate == "WORKS_FOR") {
        object = kCompanies[next_fact % kCompanies.size()];
        verb = first_person ? (variant == 2 ? "started a new job at" : "work at")
                            : (variant == 2 ? "started working at" : "works at");
        canonical = "works at";
        query = "Where does " + slot.subject + " work?";
      } else if (slot.predicate == "LIVES_IN") {
        object = kCities[next_fact % kCities.size()];
        verb = first_person ? (variant == 2 ? "moved to" : "live in") : (variant == 2 ? "moved to" : "lives in");
        canonical = "lives in";
        query = "Where does " + slot.subject + " live?";
      } else if (slot.predicate == "STUDIES_AT") {
        object = kSchools[next_fact % kSchools.size()];
        verb = first_person ? "study at" : "studies at";
        canonical = "studies at";
        query = "Where does " + slot.subject + " study?";
      } else if (slot.predicate == "VISITED") {
        object = kCities[(next_fact + 7) % kCities.size()];
        verb = variant == 1 ? "went to" : "visited";
        canonical = "visited";
        query = "Which places has " + slot.subject + " visited?";
        if (variant == 1 || variant == 3) variant = 0;
      } else {
        object = kCities[(next_fact + 3) % kCities.size()];
        verb = "was born in";
        canonical = "was born in";
        query = "Where was " + slot.subject + " born?";
        variant = variant == 2 ? 3 : (variant == 1 ? 1 : 0);
      }

      // Time phrase and the bounds the rule-based extractor derives from it.
      std::string time;
      std::optional<Timestamp> valid;
      const bool past = slot.predicate == "VISITED" || slot.predicate == "BORN_IN";
      if (slot.predicate == "BORN_IN") {
        if (variant == 1) {
          const int year = 1970 + static_cast<int>(rng.below(30));
          time = "in " + std::to_string(year);
          valid = Timestamp::from_civil(year, 1, 1);
        } else if (variant == 3) {
          const int year = 1970 + static_cast<int>(rng.below(30));
          const unsigned month = 1 + static_cast<unsigned>(rng.below(12));
          const unsigned day = 1 + static_cast<unsigned>(rng.below(28));
          time = std::string("on ") + kMonthNames[month - 1] + " " + std::to_string(day) + ", " + std::to_string(year);
          valid = Timestamp::from_civil(year, month, day);
        }
      } else if (variant == 1) {
        const int year = 2010 + static_cast<int>(rng.below(13));
        time = time_phrase_year(year);
        valid = Timestamp::from_civil(year, 1, 1);
      } else if (variant == 2) {
        const std::size_t n = 1 + rng.below(kWeekWords.size());
        time = kWeekWords[n - 1] + (n == 1 ? " week ago" : " weeks ago");
        valid = add_days(t_ref, -7 * static_cast<std::int64_t>(n));
      } else if (variant == 3) {
        const int year = 2015 + static_cast<int>(rng.below(8));
        const unsigned month = 1 + static_cast<unsigned>(rng.below(12));
        time = std::string("in ") + kMonthNames[month - 1] + " " + std::to_string(year);
        valid = Timestamp::from_civil(year, month, 1);
      } else if (!past) {
        valid = t_ref;
      }

      std::string sentence = subj + " " + verb + " " + object + (time.empty() ? "" : " " + time) + ".";
      if (rng.chance(0.5)) sentence = rng.pick(kFiller) + " " + sentence;
      ep.content = sentence;

      PlantedFact f;
      f.message_index = m;
      f.subject = slot.subject;
      f.predicate = slot.predicate;
      f.object = object;
      f.query = query;
      SemanticEdge edge;
      // Fact text keeps the words of the time phrase but not its punctuation.
      std::string bare_time;
      for (char c : time)
        if (c != ',') bare_time += c;
      edge.fact = slot.subject + " " + canonical + " " + object + (bare_time.empty() ? "" : " " + bare_time);
      edge.t_valid = valid;
      f.expected_line = format_fact_line(edge);
      out.facts.push_back(std::move(f));
      ++next_fact;
    } else {
      ep.actor = speakers[m % 2];
      const auto roll = rng.below(10);
      if (roll < 6) {
        ep.content = rng.pick(kFiller);
      } else if (roll < 8) {
        ep.content = "Did you talk to " + rng.pick(people) + " recently?";
      } else if (roll < 9) {
        const auto& a = rng.pick(people);
        auto b = rng.pick(people);
        if (b == a) b = people[(std::find(people.begin(), people.end(), a) - people.begin() + 1) % people.size()];
        ep.content = a + " knows " + b + ".";
      } else {
        ep.content = "I think " + rng.pick(people) + " would enjoy that.";
      }
    }
    out.messages.push_back(std::move(ep));
  }
  return out;
}

std::vector<Episode> generate_episode_stream(const EpisodeStreamSpec& spec) {
  Rng rng(spec.seed);
  std::vector<std::string> speakers;
  for (std::size_t i = 0; i < spec.speakers; ++i) speakers.push_back(kFirst[i % kFirst.size()]);
  std::vector<std::string> people;
  for (std::size_t i = 0; i < 8; ++i) people.push_back(kFirst[(i + 5) % kFirst.size()] + " " + kLast[i % kLast.size()]);

  auto month_year = [&](int year) {
    return std::string(kMonthNames[rng.below(12)]) + " " + std::to_string(year);
  };
  auto time_phrase = [&]() -> std::string {
    const int y = 2005 + static_cast<int>(rng.below(20));
    switch (rng.below(9)) {
      case 0: return "";
      case 1: return "since " + std::to_string(y);
      case 2: return std::to_string(1 + rng.below(9)) + " days ago";
      case 3: return kWeekWords[rng.below(kWeekWords.size())] + " years ago";
      case 4: {
        // Closed range; reversed about a third of the time.
        const int y2 = 2005 + static_cast<int>(rng.below(20));
        return "from " + month_year(y) + " until " + month_year(y2);
      }
      case 5: return "until " + std::to_string(y);
      case 6: return "in " + month_year(y);
      case 7: {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, 1 + static_cast<int>(rng.below(12)),
                      1 + static_cast<int>(rng.below(28)));
        return std::string("on ") + buf;
      }
      default: return "yesterday";
    }
  };

  std::vector<Episode> out;
  Timestamp t = spec.start;
  for (std::size_t i = 0; i < spec.episodes; ++i) {
    t = Timestamp{t.ms + static_cast<std::int64_t>(60'000 + rng.below(3) * 86'400'000)};
    Episode ep;
    ep.kind = EpisodeKind::Message;
    ep.actor = rng.pick(speakers);
    ep.t_ref = t;
    ep.group = "stream";
    const bool self = rng.chance(0.5);
    const std::string subj = self ? "I" : rng.pick(people);
    const auto time = time_phrase();
    const auto suffix = time.empty() ? std::string(".") : " " + time + ".";
    switch (rng.below(8)) {
      case 0:
      case 1:
        ep.content = subj + (self ? " live in " : " lives in ") + rng.pick(kCities) + suffix;
        break;
      case 2:
        ep.content = subj + " moved to " + rng.pick(kCities) + suffix;
        break;
      case 3:
      case 4:
        ep.content = subj + (self ? " work at " : " works at ") + rng.pick(kCompanies) + suffix;
        break;
      case 5:
        ep.content = subj + (self ? " used to work at " : " worked at ") + rng.pick(kCompanies) + suffix;
        break;
      case 6: {
        auto a = rng.pick(people), b = rng.pick(people), c = rng.pick(people);
        if (a != b && b != c && a != c)
          ep.content = a + ", " + b + " and " + c + " are friends.";
        else
          ep.content = rng.pick(kFiller);
        break;
      }
      default:
        ep.content = rng.pick(kFiller);
    }
    out.push_back(std::move(ep));
  }
  return out;
}

namespace {

std::string syllable_name(Rng& rng, std::size_t index) {
  static const std::vector<std::string> syll = {"ka", "lo", "ve", "ri", "sa", "to", "mi", "na", "zu", "el",
                                                "ar", "on", "be", "di", "fe", "go", "ha", "ju", "ky", "pe"};
  auto word = [&](std::size_t n) {
    std::string w;
    for (std::size_t i = 0; i < n; ++i) w += rng.pick(syll);
    w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
    return w;
  };
  // The index suffix keeps names unique at any scale.
  return word(2) + " " + word(3) + std::to_string(index);
}

}  // namespace

void build_graph(Graph& graph, Embedder& embedder, const GraphSpec& spec) {
  Rng rng(spec.seed);
  const std::vector<std::pair<std::string, std::string>> predicates = {
      {"WORKS_WITH", "works with"}, {"KNOWS", "knows"},      {"MENTORS", "mentors"},
      {"REPORTS_TO", "reports to"}, {"LIVES_NEAR", "lives near"}, {"INVESTED_IN", "invested in"},
      {"PLAYS_CHESS_WITH", "plays chess with"}, {"MARRIED_TO", "is married to"}};
  const std::vector<std::string> roles = {"engineer", "designer", "teacher", "nurse", "chef", "writer",
                                          "analyst", "pilot", "farmer", "architect", "musician", "lawyer"};

  std::vector<std::string> names, summaries;
  names.reserve(spec.entities);
  for (std::size_t i = 0; i < spec.entities; ++i) {
    names.push_back(syllable_name(rng, i));
    summaries.push_back(names.back() + " is a " + rng.pick(roles) + " from " + rng.pick(kCities) + ".");
  }
  auto name_vecs = embedder.embed_batch(names);

  struct PlannedEdge {
    std::size_t a, b, p;
    std::string fact;
    std::optional<Timestamp> valid, invalid;
  };
  std::vector<PlannedEdge> planned;
  planned.reserve(spec.edges);
  const std::size_t clusters = std::max<std::size_t>(1, spec.entities / std::max<std::size_t>(spec.cluster_size, 1));
  while (planned.size() < spec.edges && spec.entities >= 2) {
    std::size_t a = rng.below(spec.entities), b;
    if (rng.chance(spec.intra_cluster_fraction)) {
      const std::size_t c = std::min(a / spec.cluster_size, clusters - 1);
      const std::size_t lo = c * spec.cluster_size;
      const std::size_t hi = c + 1 == clusters ? spec.entities : lo + spec.cluster_size;
      b = lo + rng.below(hi - lo);
    } else {
      b = rng.below(spec.entities);
    }
    if (a == b) continue;
    PlannedEdge e{a, b, rng.below(predicates.size()), {}, {}, {}};
    const int year = 2000 + static_cast<int>(rng.below(24));
    e.fact = names[a] + " " + predicates[e.p].second + " " + names[b] + " since " + std::to_string(year);
    e.valid = Timestamp::from_civil(year, 1 + static_cast<unsigned>(rng.below(12)), 1);
    if (rng.chance(0.1)) e.invalid = add_years(*e.valid, 1 + static_cast<std::int64_t>(rng.below(5)));
    planned.push_back(std::move(e));
  }
  std::vector<std::string> facts;
  facts.reserve(planned.size());
  for (const auto& e : planned) facts.push_back(e.fact);
  auto fact_vecs = embedder.embed_batch(facts);

  graph.write([&](Transaction& tx) {
    std::vector<NodeId> ids;
    ids.reserve(spec.entities);
    for (std::size_t i = 0; i < spec.entities; ++i) {
      EntityNode n;
      n.name = names[i];
      n.summary = summaries[i];
      n.name_embedding = std::move(name_vecs[i]);
      ids.push_back(tx.upsert_entity(std::move(n)));
    }
    std::vector<EpisodeId> episodes;
    const Timestamp start = Timestamp::from_civil(2024, 1, 1);
    for (std::size_t i = 0; i < spec.episodes; ++i) {
      const auto a = rng.below(spec.entities), b = rng.below(spec.entities);
      Episode ep;
      ep.kind = EpisodeKind::Message;
      ep.actor = names[a];
      ep.content = "I caught up with " + names[b] + " today.";
      ep.t_ref = Timestamp{start.ms + static_cast<std::int64_t>(i) * 600'000};
      ep.group = "synthetic";
      const auto id = tx.add_episode(std::move(ep));
      tx.link_episode(id, ids[a]);
      tx.link_episode(id, ids[b]);
      episodes.push_back(id);
    }
    for (std::size_t i = 0; i < planned.size(); ++i) {
      auto& p = planned[i];
      SemanticEdge e;
      e.source = ids[p.a];
      e.target = ids[p.b];
      e.predicate = predicates[p.p].first;
      e.fact = std::move(p.fact);
      e.fact_embedding = std::move(fact_vecs[i]);
      e.t_created = tx.now();
      e.t_valid = p.valid;
      e.t_invalid = p.invalid;
      if (p.invalid) e.t_expired = e.t_created;
      if (!episodes.empty()) e.episodes = {episodes[rng.below(episodes.size())]};
      tx.upsert_edge(std::move(e));
    }
  });
}

std::vector<std::string> generate_queries(const GraphState& g, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<const EntityNode*> entities;
  for (const auto& [_, n] : g.entities()) entities.push_back(n.get());
  std::vector<std::string> out;
  if (entities.empty()) return out;
  const std::vector<std::string> templates = {"Who does {} work with?", "What do we know about {}?",
                                              "Who mentors {}?", "Where does {} live?", "Who knows {}?"};
  for (std::size_t i = 0; i < count; ++i) {
    auto q = rng.pick(templates);
    q.replace(q.find("{}"), 2, entities[rng.below(entities.size())]->name);
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace tkg::synthetic
