#include "rhea/llm.hpp"

#include <algorithm>
#include <regex>

#include "rhea/recognizer.hpp"

namespace rhea {

HttpChatBackend::HttpChatBackend(std::string url, std::string model, std::string api_key, RetryPolicy policy)
    : endpoint_(parse_endpoint(url, "/v1/chat/completions")),
      model_(std::move(model)),
      api_key_(std::move(api_key)),
      policy_(policy) {}

json HttpChatBackend::request_body(const BackendPayload& payload) const {
  json messages = json::array();
  if (!payload.system.empty()) messages.push_back({{"role", "system"}, {"content", payload.system}});
  for (const auto& m : payload.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  json body{{"model", model_}, {"messages", std::move(messages)}, {"temperature", 0}};
  if (!payload.latents.empty()) body["latents"] = json(payload).at("latents");
  return body;
}

std::string HttpChatBackend::reply(const BackendPayload& payload) {
  std::vector<std::pair<std::string, std::string>> headers;
  if (!api_key_.empty()) headers.emplace_back("Authorization", "Bearer " + api_key_);
  return first_choice_text(post_json(endpoint_, request_body(payload), policy_, headers));
}

std::vector<Directive> parse_directives(std::string_view text) {
  static const std::regex pattern(R"(\b(start|begin|end)\w*\b[^'\n.]*?\bwith\s+'([^'\n]+)')",
                                  std::regex::ECMAScript | std::regex::icase);
  std::vector<Directive> out;
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), pattern); it != std::sregex_iterator(); ++it) {
    const auto verb = to_lower((*it)[1].str());
    const auto kind = verb == "end" ? DirectiveKind::EndsWith : DirectiveKind::StartsWith;
    Directive d{kind, (*it)[2].str()};
    if (std::find(out.begin(), out.end(), d) == out.end()) out.push_back(std::move(d));
  }
  return out;
}

bool satisfies(std::string_view reply, const Directive& directive) {
  const auto tokens = whitespace_tokens(reply);
  if (tokens.empty()) return false;
  return directive.kind == DirectiveKind::StartsWith ? tokens.front() == directive.token
                                                     : tokens.back() == directive.token;
}

std::string apply_directives(std::vector<std::string> reply_tokens, const std::vector<Directive>& directives) {
  for (const auto& d : directives) {
    if (d.kind == DirectiveKind::StartsWith) {
      if (reply_tokens.empty() || reply_tokens.front() != d.token) reply_tokens.insert(reply_tokens.begin(), d.token);
    }
  }
  for (const auto& d : directives) {
    if (d.kind == DirectiveKind::EndsWith) {
      if (reply_tokens.empty() || reply_tokens.back() != d.token) reply_tokens.push_back(d.token);
    }
  }
  std::string out;
  for (const auto& t : reply_tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

std::size_t ObedientMockLlm::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

void ObedientMockLlm::set_unavailable(bool down) {
  std::lock_guard lock(mu_);
  down_ = down;
}

std::optional<BackendPayload> ObedientMockLlm::last_payload() const {
  std::lock_guard lock(mu_);
  return last_;
}

std::string ObedientMockLlm::reply(const BackendPayload& payload) {
  {
    std::lock_guard lock(mu_);
    ++calls_;
    if (down_) throw Error(ErrorCode::BackendUnavailable, "mock LLM is down");
    last_ = payload;
  }
  std::string query;
  if (!payload.messages.empty()) query = payload.messages.back().content;
  std::vector<std::string> body{"Noted:"};
  for (auto tok : whitespace_tokens(query)) {
    if (body.size() > 8) break;
    body.emplace_back(tok);
  }
  return apply_directives(std::move(body), parse_directives(payload.system));
}

std::string EchoInstructionsLlm::reply(const BackendPayload& payload) {
  std::string out;
  for (const auto& line : instruction_lines(payload)) {
    if (!out.empty()) out.push_back('\n');
    out += line;
  }
  return out.empty() ? std::string("(no instructions)") : out;
}

}  // namespace rhea
