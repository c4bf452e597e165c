#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "rhea/assembler.hpp"
#include "rhea/http_json.hpp"

namespace rhea {

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  /// Throws Error(BackendUnavailable) on failure.
  virtual std::string reply(const BackendPayload& payload) = 0;
};

/// Chat-completions client. The system block becomes the first message;
/// latent attachments ride along under "latents" for backends that accept
/// input embeddings and are ignored by the rest.
class HttpChatBackend : public LlmBackend {
 public:
  HttpChatBackend(std::string url, std::string model, std::string api_key = {}, RetryPolicy policy = {});
  std::string reply(const BackendPayload& payload) override;

  json request_body(const BackendPayload& payload) const;

 private:
  Endpoint endpoint_;
  std::string model_;
  std::string api_key_;
  RetryPolicy policy_;
};

// Reply-shaping directives understood by the mock backends:
//   "... start/begin ... with 'X'"  -> reply starts with X
//   "... end ... with 'X'"          -> reply ends with X
enum class DirectiveKind { StartsWith, EndsWith };

struct Directive {
  DirectiveKind kind = DirectiveKind::StartsWith;
  std::string token;

  bool operator==(const Directive&) const = default;
};

std::vector<Directive> parse_directives(std::string_view text);
bool satisfies(std::string_view reply, const Directive& directive);
std::string apply_directives(std::vector<std::string> reply_tokens, const std::vector<Directive>& directives);

/// Obeys every directive found in the system block; the body is a short,
/// deterministic acknowledgement of the query.
class ObedientMockLlm : public LlmBackend {
 public:
  std::string reply(const BackendPayload& payload) override;
  std::size_t calls() const;
  void set_unavailable(bool down);
  std::optional<BackendPayload> last_payload() const;

 private:
  mutable std::mutex mu_;
  std::size_t calls_ = 0;
  bool down_ = false;
  std::optional<BackendPayload> last_;
};

/// Replies with the received instruction lines joined by newlines.
class EchoInstructionsLlm : public LlmBackend {
 public:
  std::string reply(const BackendPayload& payload) override;
};

}  // namespace rhea
