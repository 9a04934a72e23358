#include "stayinsight/backends.hpp"

#include <cstdlib>

#include "stayinsight/digest.hpp"
#include "stayinsight/text.hpp"

namespace stayinsight {

using nlohmann::json;

// ---- mock --------------------------------------------------------------------

std::size_t count_review_blocks(std::string_view prompt) {
  std::size_t count = 0;
  std::size_t pos = 0;
  while (pos <= prompt.size()) {
    const auto eol = prompt.find('\n', pos);
    const std::string_view line = prompt.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    // "Review " + YYYY-MM-DD + " | score "
    if (line.size() >= 26 && line.starts_with("Review ") && line.substr(17, 9) == " | score ") {
      const std::string_view date = line.substr(7, 10);
      bool ok = date[4] == '-' && date[7] == '-';
      for (std::size_t i = 0; ok && i < date.size(); ++i) {
        if (i != 4 && i != 7) ok = date[i] >= '0' && date[i] <= '9';
      }
      if (ok) ++count;
    }
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  return count;
}

std::optional<std::string> find_language_directive(std::string_view prompt) {
  static constexpr std::string_view kDirective = "Output language: ";
  const auto at = prompt.find(kDirective);
  if (at == std::string_view::npos) return std::nullopt;
  std::string code;
  for (std::size_t i = at + kDirective.size(); i < prompt.size(); ++i) {
    const char c = prompt[i];
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '-' || c == '_') {
      code += c;
    } else {
      break;
    }
  }
  if (code.empty()) return std::nullopt;
  return code;
}

MockDiagnostics inspect_prompt(const CompletionRequest& request) {
  const std::string prompt = request.system_text + "\n" + request.user_text;
  MockDiagnostics d;
  d.prompt_hash = sha256_hex(prompt).substr(0, 16);
  d.blocks = count_review_blocks(request.user_text) + count_review_blocks(request.system_text);
  d.language = find_language_directive(prompt).value_or("none");
  return d;
}

std::string MockBackend::render(const ModelProfile& profile, const CompletionRequest& request) {
  const MockDiagnostics d = inspect_prompt(request);
  std::string out = "[mock] model=" + profile.model_id + " purpose=" + (request.purpose.empty() ? "none" : request.purpose) +
                    " hash=" + d.prompt_hash + " blocks=" + std::to_string(d.blocks) + " language=" + d.language +
                    "\n";
  if (request.purpose == "summary") {
    out += "Positives: guests highlight recurring strengths across " + std::to_string(d.blocks) + " reviews.\n";
    out += "Negatives: a minority of reviews mention drawbacks.\n";
    out += "Conclusion: overall impression derived from the supplied reviews.\n";
  } else {
    out += "Answer: based on " + std::to_string(d.blocks) + " supplied reviews.\n";
  }
  return out;
}

void MockBackend::set_delay(const std::string& model_id, Duration delay) {
  std::lock_guard lock(mutex_);
  delays_[{model_id, ""}] = delay;
}

void MockBackend::set_delay(const std::string& model_id, const std::string& purpose, Duration delay) {
  std::lock_guard lock(mutex_);
  delays_[{model_id, purpose}] = delay;
}

void MockBackend::set_delay_fn(DelayFn fn) {
  std::lock_guard lock(mutex_);
  delay_fn_ = std::move(fn);
}

void MockBackend::set_failure(const std::string& model_id, Error error) {
  std::lock_guard lock(mutex_);
  failures_.insert_or_assign(model_id, std::move(error));
}

Duration MockBackend::delay_for(const ModelProfile& profile, const CompletionRequest& request) const {
  std::lock_guard lock(mutex_);
  if (delay_fn_) return delay_fn_(profile, request);
  if (const auto it = delays_.find({profile.model_id, request.purpose}); it != delays_.end()) return it->second;
  if (const auto it = delays_.find({profile.model_id, ""}); it != delays_.end()) return it->second;
  return Duration::zero();
}

BackendReply MockBackend::complete(const ModelProfile& profile, const CompletionRequest& request, Clock& clock,
                                   TimePoint deadline) {
  {
    std::lock_guard lock(mutex_);
    if (const auto it = failures_.find(profile.model_id); it != failures_.end()) throw it->second;
  }
  const Duration delay = delay_for(profile, request);
  const Duration remaining = deadline - clock.now();
  if (delay > remaining) {
    clock.sleep_for(std::max(remaining, Duration::zero()));
    throw Error(ErrorCode::Timeout, profile.model_id + " did not answer before the deadline", true);
  }
  clock.sleep_for(delay);
  BackendReply reply;
  reply.text = render(profile, request);
  reply.raw_id = "mock-" + inspect_prompt(request).prompt_hash;
  return reply;
}

// ---- live providers --------------------------------------------------------------

std::string wire_model_name(const ModelProfile& profile) {
  if (profile.model_id == "claude-3.5-sonnet") return "claude-3-5-sonnet-20240620";
  if (profile.model_id == "llama-3.2-3b") return "meta-llama/Llama-3.2-3B-Instruct";
  return profile.model_id;
}

namespace {

json parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProviderError, std::string("unparseable provider response: ") + e.what());
  }
}

std::optional<std::uint64_t> usage_field(const json& obj, const char* key) {
  if (obj.is_object() && obj.contains(key) && obj.at(key).is_number_unsigned()) return obj.at(key).get<std::uint64_t>();
  if (obj.is_object() && obj.contains(key) && obj.at(key).is_number_integer() && obj.at(key).get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(obj.at(key).get<std::int64_t>());
  }
  return std::nullopt;
}

}  // namespace

HttpCall OpenAiChatAdapter::build(const ModelProfile& profile, const CompletionRequest& request,
                                  const std::string& api_key) const {
  const bool reasoning_model = profile.model_id.rfind("o1", 0) == 0;
  json messages = json::array();
  json body = {{"model", wire_model_name(profile)}};
  if (reasoning_model) {
    // o1 models take no system role and no temperature.
    messages.push_back({{"role", "user"}, {"content", request.system_text + "\n\n" + request.user_text}});
    body["max_completion_tokens"] = request.max_output_tokens;
  } else {
    messages.push_back({{"role", "system"}, {"content", request.system_text}});
    messages.push_back({{"role", "user"}, {"content", request.user_text}});
    body["max_tokens"] = request.max_output_tokens;
    body["temperature"] = request.temperature;
  }
  body["messages"] = messages;
  return HttpCall{"api.openai.com",
                  443,
                  "/v1/chat/completions",
                  {{"Authorization", "Bearer " + api_key}, {"Content-Type", "application/json"}},
                  body.dump()};
}

BackendReply OpenAiChatAdapter::parse(const std::string& body) const {
  const json j = parse_body(body);
  if (!j.contains("choices") || !j.at("choices").is_array() || j.at("choices").empty()) {
    throw Error(ErrorCode::ProviderError, "openai response has no choices");
  }
  const auto& message = j.at("choices").at(0).value("message", json::object());
  BackendReply reply;
  reply.text = message.contains("content") && message.at("content").is_string() ? message.at("content").get<std::string>() : "";
  const json usage = j.value("usage", json::object());
  reply.input_tokens = usage_field(usage, "prompt_tokens");
  reply.output_tokens = usage_field(usage, "completion_tokens");
  reply.raw_id = j.value("id", "");
  return reply;
}

HttpCall AnthropicMessagesAdapter::build(const ModelProfile& profile, const CompletionRequest& request,
                                         const std::string& api_key) const {
  json body = {{"model", wire_model_name(profile)},
               {"max_tokens", request.max_output_tokens},
               {"temperature", request.temperature},
               {"system", request.system_text},
               {"messages", json::array({{{"role", "user"}, {"content", request.user_text}}})}};
  return HttpCall{"api.anthropic.com",
                  443,
                  "/v1/messages",
                  {{"x-api-key", api_key}, {"anthropic-version", "2023-06-01"}, {"Content-Type", "application/json"}},
                  body.dump()};
}

BackendReply AnthropicMessagesAdapter::parse(const std::string& body) const {
  const json j = parse_body(body);
  if (!j.contains("content") || !j.at("content").is_array()) {
    throw Error(ErrorCode::ProviderError, "anthropic response has no content");
  }
  BackendReply reply;
  for (const auto& part : j.at("content")) {
    if (part.value("type", "") == "text") reply.text += part.value("text", "");
  }
  const json usage = j.value("usage", json::object());
  reply.input_tokens = usage_field(usage, "input_tokens");
  reply.output_tokens = usage_field(usage, "output_tokens");
  reply.raw_id = j.value("id", "");
  return reply;
}

HttpCall GeminiGenerateAdapter::build(const ModelProfile& profile, const CompletionRequest& request,
                                      const std::string& api_key) const {
  json body = {
      {"systemInstruction", {{"parts", json::array({{{"text", request.system_text}}})}}},
      {"contents", json::array({{{"role", "user"}, {"parts", json::array({{{"text", request.user_text}}})}}})},
      {"generationConfig", {{"temperature", request.temperature}, {"maxOutputTokens", request.max_output_tokens}}}};
  return HttpCall{"generativelanguage.googleapis.com",
                  443,
                  "/v1beta/models/" + wire_model_name(profile) + ":generateContent",
                  {{"x-goog-api-key", api_key}, {"Content-Type", "application/json"}},
                  body.dump()};
}

BackendReply GeminiGenerateAdapter::parse(const std::string& body) const {
  const json j = parse_body(body);
  if (!j.contains("candidates") || !j.at("candidates").is_array() || j.at("candidates").empty()) {
    throw Error(ErrorCode::ProviderError, "gemini response has no candidates");
  }
  BackendReply reply;
  const json content = j.at("candidates").at(0).value("content", json::object());
  for (const auto& part : content.value("parts", json::array())) reply.text += part.value("text", "");
  const json usage = j.value("usageMetadata", json::object());
  reply.input_tokens = usage_field(usage, "promptTokenCount");
  reply.output_tokens = usage_field(usage, "candidatesTokenCount");
  reply.raw_id = j.value("responseId", "");
  return reply;
}

HttpBackend::HttpBackend(std::unique_ptr<WireAdapter> adapter, std::shared_ptr<HttpTransport> transport,
                         std::string api_key_env)
    : adapter_(std::move(adapter)), transport_(std::move(transport)), api_key_env_(std::move(api_key_env)) {}

BackendReply HttpBackend::complete(const ModelProfile& profile, const CompletionRequest& request, Clock& clock,
                                   TimePoint deadline) {
  if (!profile.available) {
    throw Error(ErrorCode::ProviderError, profile.model_id + " is marked unavailable: " + profile.note);
  }
  const char* key = std::getenv(api_key_env_.c_str());
  if (key == nullptr || *key == '\0') {
    throw Error(ErrorCode::ProviderError, "environment variable " + api_key_env_ + " is not set");
  }
  const Duration remaining = deadline - clock.now();
  if (remaining <= Duration::zero()) throw Error(ErrorCode::Timeout, "deadline passed before dispatch", true);
  const HttpReply reply = transport_->post(adapter_->build(profile, request, key), remaining);
  if (reply.status != 200) {
    const bool retriable = reply.status == 429 || reply.status >= 500;
    throw Error(ErrorCode::ProviderError,
                profile.provider + " returned HTTP " + std::to_string(reply.status) + ": " + reply.body.substr(0, 200),
                retriable)
        .with_upstream_status(reply.status);
  }
  return adapter_->parse(reply.body);
}

void install_live_backends(Gateway& gateway, std::shared_ptr<HttpTransport> transport) {
  gateway.set_backend("openai",
                      std::make_shared<HttpBackend>(std::make_unique<OpenAiChatAdapter>(), transport, "OPENAI_API_KEY"));
  gateway.set_backend("anthropic", std::make_shared<HttpBackend>(std::make_unique<AnthropicMessagesAdapter>(),
                                                                 transport, "ANTHROPIC_API_KEY"));
  gateway.set_backend("google", std::make_shared<HttpBackend>(std::make_unique<GeminiGenerateAdapter>(), transport,
                                                              "GEMINI_API_KEY"));
}

}  // namespace stayinsight
