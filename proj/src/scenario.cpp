#include <fstream>
#include <random>

#include "rhea/eval.hpp"

namespace rhea {

namespace {

struct Topic {
  std::string_view name;
  std::vector<std::string_view> words;
};

const std::vector<Topic>& topics() {
  static const std::vector<Topic> t = {
      {"cooking",
       {"saffron", "risotto", "braising", "sourdough", "caramelize", "shallots", "stockpot", "emulsion", "brine",
        "skillet", "marinade", "umami", "simmer", "roux", "basil", "paprika", "dumplings", "ferment", "zest",
        "kneading", "broth", "garlic", "oven", "glaze"}},
      {"astronomy",
       {"nebula", "quasar", "parallax", "redshift", "supernova", "telescope", "exoplanet", "galaxy", "orbit",
        "pulsar", "eclipse", "comet", "magnitude", "spectrum", "asteroid", "perihelion", "constellation", "dwarf",
        "cosmic", "lunar", "solstice", "meteor", "aurora", "zenith"}},
      {"gardening",
       {"compost", "perennial", "mulch", "seedling", "pruning", "trellis", "loam", "tomatoes", "aphids", "irrigation",
        "germinate", "hydrangea", "raised", "beds", "fertilizer", "rootstock", "greenhouse", "cuttings", "soil",
        "bulbs", "weeding", "orchard", "shade", "harvest"}},
      {"finance",
       {"dividend", "portfolio", "equity", "bond", "yield", "inflation", "liquidity", "hedge", "amortize",
        "mortgage", "brokerage", "volatility", "index", "fund", "capital", "gains", "ledger", "budget", "interest",
        "savings", "pension", "annuity", "leverage", "valuation"}},
      {"travel",
       {"itinerary", "passport", "hostel", "layover", "backpack", "ferry", "visa", "souvenir", "railpass", "luggage",
        "terminal", "hiking", "coastline", "museum", "lodging", "currency", "customs", "jetlag", "village", "harbor",
        "mountain", "canyon", "cruise", "sightseeing"}},
      {"music",
       {"chord", "melody", "tempo", "harmony", "octave", "sonata", "rhythm", "guitar", "violin", "symphony",
        "cadence", "scales", "improvise", "timbre", "baritone", "metronome", "jazz", "orchestra", "minor", "major",
        "arpeggio", "piano", "conductor", "lyrics"}},
      {"history",
       {"empire", "dynasty", "treaty", "revolution", "medieval", "archive", "pharaoh", "senate", "feudal",
        "renaissance", "colonial", "siege", "monarchy", "artifact", "parliament", "crusade", "manuscript", "republic",
        "chronicle", "legion", "industrial", "bronze", "castle", "tribute"}},
      {"fitness",
       {"squat", "deadlift", "cardio", "stretching", "protein", "endurance", "sprint", "kettlebell", "plank",
        "hydration", "recovery", "treadmill", "yoga", "biceps", "mobility", "interval", "marathon", "calories",
        "posture", "lunges", "rowing", "stamina", "cycling", "pilates"}},
      {"programming",
       {"compiler", "recursion", "pointer", "mutex", "iterator", "lambda", "debugger", "refactor", "closure",
        "template", "bytecode", "heap", "stack", "linker", "thread", "kernel", "syntax", "module", "garbage",
        "allocator", "benchmark", "variable", "parser", "socket"}},
      {"chess",
       {"gambit", "castling", "endgame", "bishop", "knight", "rook", "pawn", "checkmate", "opening", "sicilian",
        "zugzwang", "fianchetto", "tempo", "sacrifice", "stalemate", "queen", "blunder", "tactics", "fork", "pin",
        "grandmaster", "rating", "blitz", "promotion"}},
  };
  return t;
}

const std::vector<std::string_view>& leads() {
  static const std::vector<std::string_view> l = {
      "Can you explain the", "Tell me more about", "What do you think of", "Could you compare the",
      "I am curious about", "Please describe the", "How would you approach", "Walk me through the",
  };
  return l;
}

const std::vector<std::string_view>& fillers() {
  static const std::vector<std::string_view> f = {"and", "the", "of", "in", "for", "how", "why", "some", "my",
                                                  "our", "this", "that", "about", "to", "a", "its"};
  return f;
}

struct InstructionTemplate {
  std::string_view text;
  DirectiveKind kind;
  std::string_view token;
};

// Even slots hit the default keyword rules; odd slots do not.
const std::vector<InstructionTemplate>& instructions() {
  static const std::vector<InstructionTemplate> i = {
      {"All future responses must start with 'O'.", DirectiveKind::StartsWith, "O"},
      {"Going forward, begin each answer with 'Zed'.", DirectiveKind::StartsWith, "Zed"},
      {"From now on, end every response with 'Done'.", DirectiveKind::EndsWith, "Done"},
      {"Henceforth please end your messages with 'Over'.", DirectiveKind::EndsWith, "Over"},
      {"Every response must start with 'Sure'.", DirectiveKind::StartsWith, "Sure"},
      {"For the rest of our chat, start your output with 'Note'.", DirectiveKind::StartsWith, "Note"},
      {"All replies must end with 'Cheers'.", DirectiveKind::EndsWith, "Cheers"},
      {"Whenever you write back, end the text with 'Fin'.", DirectiveKind::EndsWith, "Fin"},
      {"In all subsequent replies, begin with 'Hello'.", DirectiveKind::StartsWith, "Hello"},
      {"Until I say otherwise, begin replies with 'Ahoy'.", DirectiveKind::StartsWith, "Ahoy"},
  };
  return i;
}

std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

std::string topical_turn(std::mt19937_64& rng, const Topic& topic, std::size_t tokens) {
  std::vector<std::string> out;
  for (auto w : whitespace_tokens(leads()[pick(rng, leads().size())])) out.emplace_back(w);
  while (out.size() < tokens) {
    if (rng() % 10 < 7) {
      out.emplace_back(topic.words[pick(rng, topic.words.size())]);
    } else {
      out.emplace_back(fillers()[pick(rng, fillers().size())]);
    }
  }
  out.resize(tokens);
  std::string text;
  for (const auto& w : out) {
    if (!text.empty()) text.push_back(' ');
    text += w;
  }
  return text + "?";
}

std::string_view kind_name(DirectiveKind k) { return k == DirectiveKind::StartsWith ? "starts_with" : "ends_with"; }

}  // namespace

void validate_scenario(const SyntheticScenario& s) {
  if (s.turns.empty()) throw Error(ErrorCode::InvalidInput, "scenario has no turns");
  if (s.instruction_turn < 1 || s.instruction_turn > s.turns.size()) {
    throw Error(ErrorCode::InvalidInput, "instruction_turn out of range");
  }
  if (s.predicate.token.empty() || whitespace_tokens(s.predicate.token).size() != 1) {
    throw Error(ErrorCode::InvalidInput, "predicate token must be a single word");
  }
  if (s.instruction.empty() || s.turns[s.instruction_turn - 1].find(s.instruction) == std::string::npos) {
    throw Error(ErrorCode::InvalidInput, "instruction text must appear in the instruction turn");
  }
  for (const auto& t : s.turns) {
    if (normalize_instruction(t).empty()) throw Error(ErrorCode::InvalidInput, "scenario turn is empty");
  }
}

void to_json(json& j, const SyntheticScenario& s) {
  j = json{{"name", s.name},
           {"seed", s.seed},
           {"instruction_turn", s.instruction_turn},
           {"instruction", s.instruction},
           {"predicate", {{"kind", kind_name(s.predicate.kind)}, {"token", s.predicate.token}}},
           {"turns", s.turns}};
}

SyntheticScenario scenario_from_json(const json& j) {
  SyntheticScenario s;
  try {
    s.name = j.value("name", std::string("scenario"));
    s.seed = j.value("seed", std::uint64_t{0});
    s.instruction_turn = j.value("instruction_turn", std::size_t{1});
    s.instruction = j.at("instruction").get<std::string>();
    const auto kind = j.at("predicate").at("kind").get<std::string>();
    if (kind == "starts_with") {
      s.predicate.kind = DirectiveKind::StartsWith;
    } else if (kind == "ends_with") {
      s.predicate.kind = DirectiveKind::EndsWith;
    } else {
      throw Error(ErrorCode::InvalidInput, "predicate kind must be starts_with or ends_with");
    }
    s.predicate.token = j.at("predicate").at("token").get<std::string>();
    s.turns = j.at("turns").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("bad scenario: ") + e.what());
  }
  validate_scenario(s);
  return s;
}

SyntheticScenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot read scenario " + path);
  try {
    return scenario_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidInput, "scenario " + path + ": " + e.what());
  }
}

SyntheticScenario builtin_scenario(std::uint64_t seed, const ScenarioParams& params) {
  if (params.turns < 2 || params.distractor_tokens < 8) {
    throw Error(ErrorCode::InvalidInput, "scenario needs at least 2 turns of 8 tokens");
  }
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 17);
  const auto& tmpl = instructions()[seed % instructions().size()];

  // Four topics per scenario, visited in blocks of 2..5 turns.
  std::vector<std::size_t> pool(topics().size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  for (std::size_t i = pool.size() - 1; i > 0; --i) std::swap(pool[i], pool[pick(rng, i + 1)]);
  pool.resize(4);

  SyntheticScenario s;
  s.name = "builtin-" + std::to_string(seed);
  s.seed = seed;
  s.instruction_turn = 1;
  s.instruction = std::string(tmpl.text);
  s.predicate = {tmpl.kind, std::string(tmpl.token)};

  std::size_t topic = 0;
  std::size_t left = 0;
  for (std::size_t t = 0; t < params.turns; ++t) {
    if (left == 0) {
      topic = pool[pick(rng, pool.size())];
      left = 2 + pick(rng, 4);
    }
    --left;
    s.turns.push_back(t == 0 ? s.instruction : topical_turn(rng, topics()[topic], params.distractor_tokens));
  }
  return s;
}

std::vector<SyntheticScenario> shipped_scenarios() {
  std::vector<SyntheticScenario> out;
  for (std::uint64_t seed = 0; seed < 10; ++seed) out.push_back(builtin_scenario(seed));
  return out;
}

}  // namespace rhea
