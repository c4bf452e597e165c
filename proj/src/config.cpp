#include "rhea/config.hpp"

#include <cstdlib>
#include <fstream>

namespace rhea {

namespace {

double parse_double(const std::string& name, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidInput, name + ": not a number: " + value);
  }
}

std::uint64_t parse_unsigned(const std::string& name, const std::string& value) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(value, &used);
    if (used != value.size() || value.front() == '-') throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidInput, name + ": not a non-negative integer: " + value);
  }
}

BusyPolicy parse_busy(std::string_view text) {
  if (text == "wait") return BusyPolicy::Wait;
  if (text == "reject") return BusyPolicy::Reject;
  throw Error(ErrorCode::InvalidInput, "busy policy must be 'wait' or 'reject'");
}

void apply_backend(BackendConfig& b, const json& j) {
  if (j.contains("url")) b.url = j.at("url").get<std::string>();
  if (j.contains("model")) b.model = j.at("model").get<std::string>();
  if (j.contains("api_key")) b.api_key = j.at("api_key").get<std::string>();
}

json backend_json(const BackendConfig& b) {
  return json{{"url", b.url}, {"model", b.model}, {"api_key", b.api_key.empty() ? "" : "***"}};
}

}  // namespace

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

void apply_json(AppConfig& cfg, const json& j) {
  try {
    if (j.contains("engine")) from_json(j.at("engine"), cfg.engine);
    if (j.contains("llm")) apply_backend(cfg.llm, j.at("llm"));
    if (j.contains("embed")) apply_backend(cfg.embed, j.at("embed"));
    if (j.contains("classifier")) apply_backend(cfg.classifier, j.at("classifier"));
    if (j.contains("rules_file")) cfg.rules_file = j.at("rules_file").get<std::string>();
    if (j.contains("mock_dim")) cfg.mock_dim = j.at("mock_dim").get<std::size_t>();
    if (j.contains("mock_seed")) cfg.mock_seed = j.at("mock_seed").get<std::uint64_t>();
    if (j.contains("snapshot_dir")) cfg.snapshot_dir = j.at("snapshot_dir").get<std::string>();
    if (j.contains("host")) cfg.host = j.at("host").get<std::string>();
    if (j.contains("port")) cfg.port = j.at("port").get<int>();
    if (j.contains("trace")) cfg.trace = j.at("trace").get<bool>();
    if (j.contains("busy")) cfg.busy = parse_busy(j.at("busy").get<std::string>());
    if (j.contains("timeout_ms")) cfg.timeout_ms = j.at("timeout_ms").get<int>();
    if (j.contains("retries")) cfg.retries = j.at("retries").get<int>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("bad config: ") + e.what());
  }
}

void apply_env(AppConfig& cfg, const EnvLookup& env) {
  auto str = [&](const char* name, std::string& target) {
    if (auto v = env(name)) target = *v;
  };
  str("RHEA_LLM_URL", cfg.llm.url);
  str("RHEA_LLM_MODEL", cfg.llm.model);
  str("RHEA_LLM_KEY", cfg.llm.api_key);
  str("RHEA_EMBED_URL", cfg.embed.url);
  str("RHEA_EMBED_MODEL", cfg.embed.model);
  str("RHEA_CLASSIFIER_URL", cfg.classifier.url);
  str("RHEA_CLASSIFIER_MODEL", cfg.classifier.model);
  str("RHEA_CLASSIFIER_KEY", cfg.classifier.api_key);
  str("RHEA_SNAPSHOT_DIR", cfg.snapshot_dir);
  str("RHEA_RULES_FILE", cfg.rules_file);
  if (auto v = env("RHEA_TAU_LOW")) cfg.engine.tau_low = parse_double("RHEA_TAU_LOW", *v);
  if (auto v = env("RHEA_TAU_HIGH")) cfg.engine.tau_high = parse_double("RHEA_TAU_HIGH", *v);
  if (auto v = env("RHEA_BUDGET_N")) cfg.engine.budget_n = parse_unsigned("RHEA_BUDGET_N", *v);
  if (auto v = env("RHEA_RENDER_MODE")) cfg.engine.render_mode = parse_render_mode(*v);
  if (auto v = env("RHEA_RECOGNIZER")) cfg.engine.recognizer_mode = parse_recognizer_mode(*v);
  if (auto v = env("RHEA_PORT")) cfg.port = static_cast<int>(parse_unsigned("RHEA_PORT", *v));
}

AppConfig load_config(const std::string& config_file, const EnvLookup& env) {
  AppConfig cfg;
  if (!config_file.empty()) {
    std::ifstream in(config_file);
    if (!in) throw Error(ErrorCode::InvalidInput, "cannot read config file " + config_file);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidInput, "config file " + config_file + ": " + e.what());
    }
    apply_json(cfg, j);
  }
  apply_env(cfg, env);
  return cfg;
}

json to_json(const AppConfig& cfg) {
  return json{{"engine", cfg.engine},
              {"llm", backend_json(cfg.llm)},
              {"embed", backend_json(cfg.embed)},
              {"classifier", backend_json(cfg.classifier)},
              {"rules_file", cfg.rules_file},
              {"mock_dim", cfg.mock_dim},
              {"mock_seed", cfg.mock_seed},
              {"snapshot_dir", cfg.snapshot_dir},
              {"host", cfg.host},
              {"port", cfg.port},
              {"trace", cfg.trace},
              {"busy", cfg.busy == BusyPolicy::Wait ? "wait" : "reject"},
              {"timeout_ms", cfg.timeout_ms},
              {"retries", cfg.retries}};
}

EngineDeps Backends::deps() const {
  EngineDeps d;
  d.llm = llm.get();
  d.compressor = compressor.get();
  d.recognizer.rules = rules;
  d.recognizer.classifier = classifier.get();
  return d;
}

Backends make_backends(const AppConfig& cfg) {
  require_valid(cfg.engine);
  RetryPolicy policy;
  policy.attempts = std::max(1, cfg.retries);
  policy.timeout = std::chrono::milliseconds(cfg.timeout_ms);

  Backends b;
  if (cfg.llm.url.empty()) {
    b.llm = std::make_unique<ObedientMockLlm>();
  } else {
    b.llm = std::make_unique<HttpChatBackend>(cfg.llm.url, cfg.llm.model, cfg.llm.api_key, policy);
  }
  if (cfg.embed.url.empty()) {
    b.compressor = std::make_unique<MockCompressor>(cfg.engine.budget_n, cfg.mock_dim, cfg.mock_seed);
  } else {
    auto client = std::make_shared<HttpEmbeddingClient>(cfg.embed.url, cfg.embed.model, policy);
    b.compressor = std::make_unique<RemoteCompressor>(std::move(client), cfg.engine.budget_n);
  }
  if (cfg.classifier.url.empty()) {
    b.classifier = std::make_unique<KeywordClassifier>();
  } else {
    b.classifier =
        std::make_unique<HttpClassifier>(cfg.classifier.url, cfg.classifier.model, cfg.classifier.api_key, policy);
  }
  b.rules = cfg.rules_file.empty() ? default_rules() : load_rules_file(cfg.rules_file);
  return b;
}

}  // namespace rhea
