#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stayinsight/error.hpp"
#include "stayinsight/gateway.hpp"

namespace stayinsight {

// ---- mock --------------------------------------------------------------------

/// Lines starting with "Review YYYY-MM-DD | score " in a prompt.
std::size_t count_review_blocks(std::string_view prompt);

/// Value of the first "Output language: <code>" directive, if any.
std::optional<std::string> find_language_directive(std::string_view prompt);

struct MockDiagnostics {
  std::string prompt_hash;  // 16 hex chars of sha256(system + "\n" + user)
  std::size_t blocks = 0;
  std::string language;  // "none" when no directive is present
};

MockDiagnostics inspect_prompt(const CompletionRequest& request);

/// Deterministic stand-in LLM. The reply's first line is
///   [mock] model=<id> purpose=<p> hash=<h> blocks=<n> language=<code>
/// followed by a short fixed-shape body. Delays are served on the caller's
/// clock, so a simulated clock makes them instantaneous.
class MockBackend final : public CompletionBackend {
 public:
  using DelayFn = std::function<Duration(const ModelProfile&, const CompletionRequest&)>;

  void set_delay(const std::string& model_id, Duration delay);
  void set_delay(const std::string& model_id, const std::string& purpose, Duration delay);
  void set_delay_fn(DelayFn fn);
  /// Every request for `model_id` fails with `error`.
  void set_failure(const std::string& model_id, Error error);

  BackendReply complete(const ModelProfile& profile, const CompletionRequest& request, Clock& clock,
                        TimePoint deadline) override;

  static std::string render(const ModelProfile& profile, const CompletionRequest& request);

 private:
  Duration delay_for(const ModelProfile& profile, const CompletionRequest& request) const;

  mutable std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, Duration> delays_;  // (model, purpose|"")
  DelayFn delay_fn_;
  std::map<std::string, Error> failures_;
};

// ---- live providers --------------------------------------------------------------

struct HttpCall {
  std::string host;
  int port = 443;
  std::string path;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
};

struct HttpReply {
  int status = 0;
  std::string body;
};

/// Raises NetworkFailure on connection problems and Timeout on read timeout.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpReply post(const HttpCall& call, Duration timeout) = 0;
  virtual HttpReply get(const std::string& url, Duration timeout) = 0;
};

/// HTTPS transport on cpp-httplib.
std::shared_ptr<HttpTransport> make_https_transport();

/// Encodes a CompletionRequest for one provider API and decodes its reply.
class WireAdapter {
 public:
  virtual ~WireAdapter() = default;
  virtual HttpCall build(const ModelProfile& profile, const CompletionRequest& request,
                         const std::string& api_key) const = 0;
  virtual BackendReply parse(const std::string& body) const = 0;
};

class OpenAiChatAdapter final : public WireAdapter {
 public:
  HttpCall build(const ModelProfile&, const CompletionRequest&, const std::string& api_key) const override;
  BackendReply parse(const std::string& body) const override;
};

class AnthropicMessagesAdapter final : public WireAdapter {
 public:
  HttpCall build(const ModelProfile&, const CompletionRequest&, const std::string& api_key) const override;
  BackendReply parse(const std::string& body) const override;
};

class GeminiGenerateAdapter final : public WireAdapter {
 public:
  HttpCall build(const ModelProfile&, const CompletionRequest&, const std::string& api_key) const override;
  BackendReply parse(const std::string& body) const override;
};

/// Provider model name sent on the wire for a registry id.
std::string wire_model_name(const ModelProfile& profile);

class HttpBackend final : public CompletionBackend {
 public:
  HttpBackend(std::unique_ptr<WireAdapter> adapter, std::shared_ptr<HttpTransport> transport,
              std::string api_key_env);

  BackendReply complete(const ModelProfile& profile, const CompletionRequest& request, Clock& clock,
                        TimePoint deadline) override;

 private:
  std::unique_ptr<WireAdapter> adapter_;
  std::shared_ptr<HttpTransport> transport_;
  std::string api_key_env_;
};

/// Installs OpenAI / Anthropic / Google backends keyed by provider name,
/// reading keys from OPENAI_API_KEY, ANTHROPIC_API_KEY and GEMINI_API_KEY.
void install_live_backends(Gateway& gateway, std::shared_ptr<HttpTransport> transport);

}  // namespace stayinsight
