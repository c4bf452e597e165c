// Chat front end: interactive REPL by default, HTTP service with --serve.

#include <CLI11.hpp>
#include <csignal>
#include <iostream>

#include "rhea/config.hpp"
#include "rhea/server.hpp"

namespace {

rhea::ChatServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rhea: conversational memory engine"};
  std::string config_file;
  std::optional<double> tau_low;
  std::optional<double> tau_high;
  std::optional<std::size_t> budget_n;
  std::optional<std::string> render_mode;
  std::optional<std::string> recognizer;
  std::optional<int> port;
  std::optional<std::string> snapshot_dir;
  bool trace = false;
  bool serve = false;
  bool print_config = false;

  app.add_option("--config", config_file, "JSON config file");
  app.add_option("--tau-low", tau_low, "lower retrieval threshold");
  app.add_option("--tau-high", tau_high, "upper retrieval threshold");
  app.add_option("--budget-n", budget_n, "latent rows per compressed reply");
  app.add_option("--render-mode", render_mode, "hybrid or text")->check(CLI::IsMember({"hybrid", "text"}));
  app.add_option("--recognizer", recognizer, "rules or hybrid")->check(CLI::IsMember({"rules", "hybrid"}));
  app.add_option("--snapshot-dir", snapshot_dir, "directory for per-session snapshots (service mode)");
  app.add_flag("--trace", trace, "print a tier trace after each reply");
  app.add_flag("--serve", serve, "run the HTTP service instead of the REPL");
  app.add_option("--port", port, "service port");
  app.add_flag("--print-config", print_config, "print the effective configuration and exit");
  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = rhea::load_config(config_file);
    if (tau_low) cfg.engine.tau_low = *tau_low;
    if (tau_high) cfg.engine.tau_high = *tau_high;
    if (budget_n) cfg.engine.budget_n = *budget_n;
    if (render_mode) cfg.engine.render_mode = rhea::parse_render_mode(*render_mode);
    if (recognizer) cfg.engine.recognizer_mode = rhea::parse_recognizer_mode(*recognizer);
    if (port) cfg.port = *port;
    if (snapshot_dir) cfg.snapshot_dir = *snapshot_dir;
    if (trace) cfg.trace = true;
    rhea::require_valid(cfg.engine);

    if (print_config) {
      std::cout << rhea::to_json(cfg).dump(2) << '\n';
      return 0;
    }

    auto backends = rhea::make_backends(cfg);
    if (serve) {
      std::optional<std::string> dir;
      if (!cfg.snapshot_dir.empty()) dir = cfg.snapshot_dir;
      rhea::SessionManager sessions(cfg.engine, backends.deps(), dir, cfg.busy);
      rhea::ChatServer server(sessions);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on " << cfg.host << ":" << cfg.port << '\n';
      server.listen(cfg.host, cfg.port);
      g_server = nullptr;
      return 0;
    }
    rhea::repl(std::cin, std::cout, cfg.engine, backends.deps(), {cfg.trace, "repl"});
  } catch (const std::exception& e) {
    std::cerr << "rhea: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
