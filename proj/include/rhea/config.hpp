#pragma once

// Application configuration. Sources, lowest to highest precedence:
// built-in defaults, a JSON config file, RHEA_* environment variables,
// command-line flags (applied by the caller on top of load_config()).

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "rhea/codec.hpp"
#include "rhea/compressor.hpp"
#include "rhea/gateway.hpp"
#include "rhea/llm.hpp"
#include "rhea/recognizer.hpp"

namespace rhea {

struct BackendConfig {
  std::string url;  // empty selects the offline mock
  std::string model;
  std::string api_key;
};

struct AppConfig {
  EngineConfig engine;
  BackendConfig llm;
  BackendConfig embed;
  BackendConfig classifier;
  std::string rules_file;
  std::size_t mock_dim = 256;
  std::uint64_t mock_seed = 0;
  std::string snapshot_dir;  // empty disables persistence
  std::string host = "127.0.0.1";
  int port = 8080;
  bool trace = false;
  BusyPolicy busy = BusyPolicy::Wait;
  int timeout_ms = 30000;
  int retries = 3;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Process environment.
std::optional<std::string> process_env(const std::string& name);

void apply_json(AppConfig& cfg, const json& j);
void apply_env(AppConfig& cfg, const EnvLookup& env);

/// Defaults, then `config_file` when non-empty, then the environment.
/// Throws Error(InvalidInput) on unreadable or malformed files and values.
AppConfig load_config(const std::string& config_file, const EnvLookup& env = process_env);

json to_json(const AppConfig& cfg);

/// Concrete backends selected by an AppConfig. Missing URLs fall back to the
/// deterministic mocks.
struct Backends {
  std::unique_ptr<LlmBackend> llm;
  std::unique_ptr<Compressor> compressor;
  std::unique_ptr<ClassifierBackend> classifier;
  std::vector<RulePattern> rules;

  EngineDeps deps() const;
};

Backends make_backends(const AppConfig& cfg);

}  // namespace rhea
