#include "rhea/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "rhea/gateway.hpp"

namespace rhea {

namespace {

std::vector<std::string> topical_words(std::string_view query) {
  std::vector<std::string> words;
  for (auto tok : whitespace_tokens(query)) {
    std::string w;
    for (char c : tok) {
      if (std::isalnum(static_cast<unsigned char>(c))) w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (!w.empty()) words.push_back(std::move(w));
  }
  if (words.empty()) words.emplace_back("ok");
  return words;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

// ------------------------------------------------------------ scripted LLM

std::vector<std::string> ScriptedLlm::visible_tokens(const BackendPayload& payload) const {
  const auto budget = params_.attention_budget;
  std::map<std::uint64_t, std::size_t> latent_rows;
  for (const auto& l : payload.latents) latent_rows[l.turn_index] += l.latent.n();

  // "\n" separates segments so a directive cannot straddle two messages;
  // separators are free.
  std::vector<std::string> out;
  std::size_t used = 0;
  auto separate = [&] {
    if (!out.empty() && out.back() != "\n") out.emplace_back("\n");
  };
  auto add_text = [&](std::string_view text) {
    separate();
    for (auto tok : whitespace_tokens(text)) {
      if (used == budget) return;
      out.emplace_back(tok);
      ++used;
    }
  };
  auto add_latent = [&](std::size_t rows) {
    separate();
    for (std::size_t r = 0; r < rows && used < budget; ++r, ++used) out.emplace_back("<latent>");
  };

  add_text(payload.system);
  if (!payload.messages.empty()) add_text(payload.messages.back().content);
  for (std::size_t i = payload.messages.empty() ? 0 : payload.messages.size() - 1; i-- > 0;) {
    const auto& m = payload.messages[i];
    if (m.role == "user" && m.turn_index) {
      if (auto it = latent_rows.find(*m.turn_index); it != latent_rows.end()) add_latent(it->second);
    }
    add_text(m.content);
  }
  if (!out.empty() && out.back() == "\n") out.pop_back();
  return out;
}

std::string ScriptedLlm::reply(const BackendPayload& payload) {
  std::string window;
  for (const auto& t : visible_tokens(payload)) {
    if (t == "\n") {
      window.push_back('\n');
    } else {
      if (!window.empty() && window.back() != '\n') window.push_back(' ');
      window += t;
    }
  }
  const auto directives = parse_directives(window);

  const std::string query = payload.messages.empty() ? std::string() : payload.messages.back().content;
  const auto words = topical_words(query);
  const auto body_len = params_.reply_tokens > directives.size() ? params_.reply_tokens - directives.size() : 1;
  std::vector<std::string> body;
  body.reserve(body_len);
  for (std::size_t i = 0; i < body_len; ++i) body.push_back(words[i % words.size()]);
  return apply_directives(std::move(body), directives);
}

// ---------------------------------------------------------------- metrics

double iar(const std::vector<std::string>& replies, const Predicate& predicate) {
  if (replies.empty()) throw Error(ErrorCode::EmptyRun, "no replies to score");
  const auto ok = std::count_if(replies.begin(), replies.end(), [&](const auto& r) { return predicate.check(r); });
  return static_cast<double>(ok) / static_cast<double>(replies.size());
}

int jga(std::string_view final_answer, std::string_view gold) { return trim(final_answer) == trim(gold) ? 1 : 0; }

std::vector<std::size_t> bm25_retrieve(std::string_view query, const EpisodicMemoryStore& em, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidInput, "k must be at least 1");
  const std::size_t n = em.size();
  if (n == 0) return {};
  constexpr double k1 = 1.2;
  constexpr double b = 0.75;

  std::vector<std::map<std::string, std::size_t>> tf(n);
  std::vector<std::size_t> len(n, 0);
  std::map<std::string, std::size_t> df;
  for (std::size_t i = 0; i < n; ++i) {
    const auto doc = to_lower(em[i].turn.user_text + " " + em[i].turn.model_text);
    for (auto tok : whitespace_tokens(doc)) {
      ++tf[i][std::string(tok)];
      ++len[i];
    }
    for (const auto& [term, count] : tf[i]) ++df[term];
  }
  const double avgdl = static_cast<double>(std::accumulate(len.begin(), len.end(), std::size_t{0})) / n;

  std::vector<double> score(n, 0.0);
  const auto lowered = to_lower(query);
  for (auto tok : whitespace_tokens(lowered)) {
    const std::string term(tok);
    const auto d = df.find(term);
    if (d == df.end()) continue;
    const double idf = std::log((n - d->second + 0.5) / (d->second + 0.5) + 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto f = tf[i].find(term);
      if (f == tf[i].end()) continue;
      const double x = static_cast<double>(f->second);
      const double norm = avgdl > 0 ? len[i] / avgdl : 0.0;
      score[i] += idf * x * (k1 + 1) / (x + k1 * (1 - b + b * norm));
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) { return score[a] > score[c]; });
  order.resize(std::min(k, n));
  std::sort(order.begin(), order.end());
  return order;
}

// ------------------------------------------------------------- strategies

Strategy parse_strategy(std::string_view text) {
  const auto lower = to_lower(text);
  std::string_view name = lower;
  std::optional<std::size_t> k;
  if (const auto colon = name.find(':'); colon != std::string_view::npos) {
    const std::string num(name.substr(colon + 1));
    if (num.empty() || !std::all_of(num.begin(), num.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      throw Error(ErrorCode::InvalidInput, "bad strategy parameter: " + std::string(text));
    }
    k = std::stoul(num);
    if (*k == 0) throw Error(ErrorCode::InvalidInput, "strategy k must be at least 1");
    name = name.substr(0, colon);
  }
  Strategy s;
  if (name == "vanilla") {
    s.kind = StrategyKind::Vanilla;
  } else if (name == "recent-k" || name == "recentk") {
    s.kind = StrategyKind::RecentK;
  } else if (name == "bm25") {
    s.kind = StrategyKind::Bm25;
  } else if (name == "rhea-full" || name == "full") {
    s.kind = StrategyKind::RheaFull;
  } else if (name == "rhea-no-im" || name == "no-im") {
    s.kind = StrategyKind::RheaNoIM;
  } else if (name == "rhea-preserve" || name == "preserve") {
    s.kind = StrategyKind::RheaPreserve;
  } else if (name == "rhea-abandon" || name == "abandon") {
    s.kind = StrategyKind::RheaAbandon;
  } else {
    throw Error(ErrorCode::InvalidInput, "unknown strategy: " + std::string(text));
  }
  if (k) {
    if (s.kind != StrategyKind::RecentK && s.kind != StrategyKind::Bm25) {
      throw Error(ErrorCode::InvalidInput, "only recent-k and bm25 take a parameter");
    }
    s.k = *k;
  }
  return s;
}

std::string to_string(const Strategy& s) {
  switch (s.kind) {
    case StrategyKind::Vanilla:
      return "vanilla";
    case StrategyKind::RecentK:
      return "recent-k:" + std::to_string(s.k);
    case StrategyKind::Bm25:
      return "bm25:" + std::to_string(s.k);
    case StrategyKind::RheaFull:
      return "rhea-full";
    case StrategyKind::RheaNoIM:
      return "rhea-no-im";
    case StrategyKind::RheaPreserve:
      return "rhea-preserve";
    case StrategyKind::RheaAbandon:
      return "rhea-abandon";
  }
  return "unknown";
}

RecognizerSim parse_recognizer_sim(std::string_view text) {
  const auto t = to_lower(text);
  if (t == "oracle") return RecognizerSim::Oracle;
  if (t == "rules" || t == "real-rules") return RecognizerSim::RealRules;
  if (t == "hybrid") return RecognizerSim::Hybrid;
  if (t == "forced-fn" || t == "fn") return RecognizerSim::ForcedFN;
  if (t == "forced-fp" || t == "fp") return RecognizerSim::ForcedFP;
  throw Error(ErrorCode::InvalidInput, "unknown recognizer mode: " + std::string(text));
}

std::string_view to_string(RecognizerSim sim) {
  switch (sim) {
    case RecognizerSim::Oracle:
      return "oracle";
    case RecognizerSim::RealRules:
      return "rules";
    case RecognizerSim::Hybrid:
      return "hybrid";
    case RecognizerSim::ForcedFN:
      return "forced-fn";
    case RecognizerSim::ForcedFP:
      return "forced-fp";
  }
  return "unknown";
}

json to_json(const BenchmarkResult& r) {
  return json{{"iar_curve", r.iar_curve}, {"final_iar", r.final_iar}, {"im_size", r.im_size}, {"replies", r.replies}};
}

double final_iar(const std::vector<int>& curve, std::size_t instruction_turn, double final_window) {
  if (curve.size() <= instruction_turn) throw Error(ErrorCode::EmptyRun, "no turns after the instruction turn");
  const std::size_t after = curve.size() - instruction_turn;
  const auto window = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(final_window * static_cast<double>(curve.size()))), 1, after);
  const auto sum = std::accumulate(curve.end() - static_cast<std::ptrdiff_t>(window), curve.end(), 0);
  return static_cast<double>(sum) / static_cast<double>(window);
}

namespace {

struct RecognizerFixture {
  OracleLabels labels;
  KeywordClassifier classifier;
  RecognizerSetup setup;
  RecognizerMode mode = RecognizerMode::Oracle;
};

void configure(RecognizerFixture& f, RecognizerSim sim, const SyntheticScenario& scenario) {
  f.setup = RecognizerSetup{};
  switch (sim) {
    case RecognizerSim::Oracle:
    case RecognizerSim::ForcedFP:
      f.labels.add(scenario.turns[scenario.instruction_turn - 1]);
      if (sim == RecognizerSim::ForcedFP) {
        // The first ordinary turn after the instruction is misread as one.
        const auto fp = scenario.instruction_turn < scenario.turns.size() ? scenario.instruction_turn : 0;
        if (fp != scenario.instruction_turn - 1) f.labels.add(scenario.turns[fp]);
      }
      [[fallthrough]];
    case RecognizerSim::ForcedFN:
      f.setup.rules.clear();
      f.setup.oracle = &f.labels;
      f.mode = RecognizerMode::Oracle;
      break;
    case RecognizerSim::RealRules:
      f.mode = RecognizerMode::RulesOnly;
      break;
    case RecognizerSim::Hybrid:
      f.setup.classifier = &f.classifier;
      f.mode = RecognizerMode::Hybrid;
      break;
  }
}

HybridContext raw_context(const InstructionalMemoryStore& im, const EpisodicMemoryStore& em,
                          const std::vector<std::size_t>& indices, std::string_view query, bool keep_replies) {
  HybridContext ctx;
  ctx.segments.emplace_back(InstructionBlock{im.texts()});
  for (auto i : indices) {
    const auto& rec = em[i];
    ctx.segments.emplace_back(
        RawTurn{rec.turn.index, rec.turn.user_text, keep_replies ? rec.turn.model_text : std::string(), std::nullopt});
  }
  ctx.segments.emplace_back(Query{std::string(query)});
  return ctx;
}

}  // namespace

BenchmarkResult run_benchmark(const SyntheticScenario& scenario, const Strategy& strategy, const EngineConfig& base,
                              const BenchmarkOptions& options) {
  validate_scenario(scenario);
  EngineConfig cfg = base;
  RecognizerFixture fixture;
  const auto sim = strategy.kind == StrategyKind::RheaNoIM ? RecognizerSim::ForcedFN : options.recognizer;
  configure(fixture, sim, scenario);
  cfg.recognizer_mode = fixture.mode;
  require_valid(cfg);

  ScriptedLlm llm(options.llm);
  MockCompressor compressor(cfg.budget_n, options.mock_dim, options.mock_seed);
  BenchmarkResult result;

  const bool engine = strategy.kind == StrategyKind::RheaFull || strategy.kind == StrategyKind::RheaNoIM;
  const bool uses_im = strategy.kind == StrategyKind::RheaPreserve || strategy.kind == StrategyKind::RheaAbandon;

  Session session = Session::create(scenario.name, cfg);
  EngineDeps deps;
  deps.llm = &llm;
  deps.compressor = &compressor;
  deps.recognizer = fixture.setup;
  deps.clock = [] { return std::int64_t{0}; };

  for (const auto& user_text : scenario.turns) {
    std::string reply;
    if (engine) {
      reply = step(session, user_text, deps).reply;
    } else {
      const auto turn_index = session.turn_counter + 1;
      const auto verdict = recognize(user_text, cfg, fixture.setup);
      if (uses_im) session.im = im_update(session.im, verdict, user_text, turn_index);

      std::vector<std::size_t> indices;
      const auto n = session.em.size();
      switch (strategy.kind) {
        case StrategyKind::RecentK:
          // The window counts the current turn as one of its k turns.
          for (std::size_t i = n + 1 > strategy.k ? n + 1 - strategy.k : 0; i < n; ++i) indices.push_back(i);
          break;
        case StrategyKind::Bm25:
          indices = bm25_retrieve(user_text, session.em, strategy.k);
          break;
        default:
          for (std::size_t i = 0; i < n; ++i) indices.push_back(i);
          break;
      }
      const bool keep_replies = strategy.kind != StrategyKind::RheaAbandon;
      auto ctx = enforce_budget(raw_context(session.im, session.em, indices, user_text, keep_replies), cfg);
      reply = llm.reply(render(ctx, cfg.render_mode));
      session.em = em_append(session.em, Turn{turn_index, user_text, reply, 0}, compressor.compress(reply),
                             verdict.is_global_instruction, cfg);
      session.turn_counter = turn_index;
    }
    result.iar_curve.push_back(scenario.predicate.check(reply) ? 1 : 0);
    result.replies.push_back(std::move(reply));
  }
  result.im_size = session.im.size();
  result.final_iar = final_iar(result.iar_curve, scenario.instruction_turn, options.final_window);
  return result;
}

double simulate_recognizer_errors(RecognizerSim mode, const SyntheticScenario& scenario, const EngineConfig& cfg,
                                  BenchmarkOptions options) {
  options.recognizer = mode;
  return run_benchmark(scenario, {StrategyKind::RheaFull, 5}, cfg, options).final_iar;
}

ThresholdGrid parse_grid(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) throw Error(ErrorCode::InvalidGrid, "grid spec must look like LOWS:HIGHS");
  auto parse_list = [](std::string_view list) {
    std::vector<double> out;
    std::stringstream in{std::string(list)};
    std::string item;
    while (std::getline(in, item, ',')) {
      try {
        std::size_t used = 0;
        out.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidGrid, "bad threshold value: " + item);
      }
    }
    return out;
  };
  return {parse_list(spec.substr(0, colon)), parse_list(spec.substr(colon + 1))};
}

SweepResult threshold_sweep(const ThresholdGrid& grid, const std::vector<SyntheticScenario>& scenarios,
                            const EngineConfig& cfg, const BenchmarkOptions& options) {
  if (grid.tau_lows.empty() || grid.tau_highs.empty()) throw Error(ErrorCode::InvalidGrid, "grid is empty");
  if (scenarios.empty()) throw Error(ErrorCode::EmptyRun, "no scenarios to sweep");
  for (double lo : grid.tau_lows) {
    for (double hi : grid.tau_highs) {
      if (!(lo <= hi) || lo < 0.0 || hi > 1.0) {
        throw Error(ErrorCode::InvalidGrid, "grid pair (" + std::to_string(lo) + ", " + std::to_string(hi) +
                                                ") violates 0 <= tau_low <= tau_high <= 1");
      }
    }
  }
  SweepResult out{grid, {}};
  for (double lo : grid.tau_lows) {
    std::vector<double> row;
    for (double hi : grid.tau_highs) {
      EngineConfig c = cfg;
      c.tau_low = lo;
      c.tau_high = hi;
      double sum = 0.0;
      for (const auto& s : scenarios) sum += run_benchmark(s, {StrategyKind::RheaFull, 5}, c, options).final_iar;
      row.push_back(sum / static_cast<double>(scenarios.size()));
    }
    out.cells.push_back(std::move(row));
  }
  return out;
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
  out << "tau_low\\tau_high";
  for (double hi : sweep.grid.tau_highs) out << ',' << hi;
  out << '\n';
  for (std::size_t i = 0; i < sweep.grid.tau_lows.size(); ++i) {
    out << sweep.grid.tau_lows[i];
    for (double v : sweep.cells[i]) out << ',' << v;
    out << '\n';
  }
}

double variance(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return acc / static_cast<double>(values.size());
}

}  // namespace rhea
