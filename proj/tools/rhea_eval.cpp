// Offline benchmark runner.
//   rhea-eval run --strategy rhea-full --scenario builtin --seed 0 --out results.json
//   rhea-eval sweep --grid 0.3,0.4,0.5,0.6,0.7:0.7,0.75,0.8,0.85,0.9 --out grid.csv
//   rhea-eval recognizer
//   rhea-eval scenario --seed 0 --out decay60.json

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rhea/eval.hpp"
#include "rhea/recognizer.hpp"

namespace {

std::vector<rhea::SyntheticScenario> scenarios_for(const std::string& scenario, std::optional<std::uint64_t> seed) {
  if (scenario == "builtin") {
    if (seed) return {rhea::builtin_scenario(*seed)};
    return rhea::shipped_scenarios();
  }
  return {rhea::load_scenario(scenario)};
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw rhea::Error(rhea::ErrorCode::InvalidInput, "cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rhea-eval: instruction adherence benchmarks"};
  app.require_subcommand(1);

  rhea::EngineConfig cfg;
  rhea::BenchmarkOptions options;
  std::string recognizer = "oracle";
  std::string scenario = "builtin";
  std::optional<std::uint64_t> seed;
  std::string out;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--scenario", scenario, "scenario JSON file or 'builtin'");
    sub->add_option("--seed", seed, "builtin scenario seed (default: all ten shipped seeds)");
    sub->add_option("--recognizer", recognizer, "oracle, rules, hybrid, forced-fn, forced-fp");
    sub->add_option("--tau-low", cfg.tau_low);
    sub->add_option("--tau-high", cfg.tau_high);
    sub->add_option("--budget-n", cfg.budget_n);
    sub->add_option("--attention-budget", options.llm.attention_budget, "scripted backend prefix budget P");
    sub->add_option("--reply-tokens", options.llm.reply_tokens, "scripted reply length");
    sub->add_option("--mock-dim", options.mock_dim);
    sub->add_option("--final-window", options.final_window, "tail share averaged into final_iar");
    sub->add_option("--out", out, "output file (default stdout)");
  };

  std::string strategy = "rhea-full";
  auto* run = app.add_subcommand("run", "replay scenarios through one strategy");
  common(run);
  run->add_option("--strategy", strategy, "vanilla, recent-k[:K], bm25[:K], rhea-full, rhea-no-im, rhea-preserve, rhea-abandon");

  std::string grid = "0.3,0.4,0.5,0.6,0.7:0.7,0.75,0.8,0.85,0.9";
  auto* sweep = app.add_subcommand("sweep", "grid over (tau_low, tau_high)");
  common(sweep);
  sweep->add_option("--grid", grid, "LOWS:HIGHS, comma-separated");

  std::uint64_t val_seed = 7;
  auto* rec = app.add_subcommand("recognizer", "score the recognizer on the built-in validation set");
  rec->add_option("--seed", val_seed);
  rec->add_option("--out", out);

  std::uint64_t dump_seed = 0;
  auto* dump = app.add_subcommand("scenario", "write a builtin scenario as JSON");
  dump->add_option("--seed", dump_seed);
  dump->add_option("--out", out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*dump) {
      write_text(out, rhea::json(rhea::builtin_scenario(dump_seed)).dump(2) + "\n");
      return 0;
    }
    if (*rec) {
      rhea::KeywordClassifier classifier;
      rhea::RecognizerSetup setup;
      setup.classifier = &classifier;
      const auto data = rhea::build_validation_set(val_seed);
      rhea::json j = rhea::json::object();
      for (auto mode : {rhea::RecognizerMode::RulesOnly, rhea::RecognizerMode::Hybrid}) {
        rhea::EngineConfig c;
        c.recognizer_mode = mode;
        const auto m = rhea::evaluate_recognizer(data, c, setup);
        j[std::string(rhea::to_string(mode))] = {{"accuracy", m.accuracy}, {"precision", m.precision},
                                                 {"recall", m.recall}, {"tp", m.tp}, {"fp", m.fp},
                                                 {"tn", m.tn}, {"fn", m.fn}};
      }
      write_text(out, j.dump(2) + "\n");
      return 0;
    }

    options.recognizer = rhea::parse_recognizer_sim(recognizer);
    rhea::require_valid(cfg);
    const auto set = scenarios_for(scenario, seed);

    if (*run) {
      const auto s = rhea::parse_strategy(strategy);
      rhea::json results = rhea::json::array();
      double total = 0.0;
      for (const auto& sc : set) {
        const auto r = rhea::run_benchmark(sc, s, cfg, options);
        total += r.final_iar;
        auto j = rhea::to_json(r);
        j["scenario"] = sc.name;
        results.push_back(std::move(j));
      }
      rhea::json doc{{"strategy", rhea::to_string(s)},
                     {"recognizer", rhea::to_string(options.recognizer)},
                     {"config", cfg},
                     {"mean_final_iar", total / static_cast<double>(set.size())},
                     {"runs", std::move(results)}};
      write_text(out, doc.dump(2) + "\n");
      return 0;
    }

    const auto result = rhea::threshold_sweep(rhea::parse_grid(grid), set, cfg, options);
    std::ostringstream csv;
    rhea::write_sweep_csv(csv, result);
    write_text(out, csv.str());
  } catch (const std::exception& e) {
    std::cerr << "rhea-eval: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
