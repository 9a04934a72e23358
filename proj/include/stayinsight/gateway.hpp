#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "stayinsight/model_registry.hpp"
#include "stayinsight/rate_limiter.hpp"
#include "stayinsight/retrieval.hpp"
#include "stayinsight/time.hpp"

namespace stayinsight {

struct CompletionRequest {
  std::string model_id;
  std::string system_text;
  std::string user_text;
  std::size_t max_output_tokens = 1024;
  double temperature = 0.2;  // [0, 2]
  std::string purpose;       // "summary", "query", ... (audit only)
};

struct CompletionResponse {
  std::string text;
  std::uint64_t input_tokens = 0;
  std::uint64_t output_tokens = 0;
  Duration latency{0};
  Usd cost;
  std::string provider_raw_id;
};

/// What a provider adapter hands back before accounting.
struct BackendReply {
  std::string text;
  std::optional<std::uint64_t> input_tokens;
  std::optional<std::uint64_t> output_tokens;
  std::string raw_id;
};

/// One adapter per provider wire protocol. `deadline` is the latest clock
/// time the backend may run to; exceeding it must raise Error(Timeout).
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual BackendReply complete(const ModelProfile& profile, const CompletionRequest& request, Clock& clock,
                                TimePoint deadline) = 0;
};

/// Thread-safe line-delimited JSON sink.
class AuditLog {
 public:
  AuditLog() = default;  // in-memory only
  explicit AuditLog(const std::filesystem::path& path);

  void append(const nlohmann::json& record);
  std::size_t line_count() const;
  std::vector<std::string> lines() const;

 private:
  mutable std::mutex mutex_;
  std::optional<std::ofstream> file_;
  std::vector<std::string> lines_;
};

struct GatewayOptions {
  Duration timeout = std::chrono::seconds(60);
  TokenizerConfig tokenizer;
  // Wait (on the gateway clock) for a rate-limit permit instead of failing,
  // as long as the wait does not exceed max_permit_wait.
  bool wait_for_permit = true;
  Duration max_permit_wait = std::chrono::minutes(2);
};

/// Built-in zero-cost profiles served by the mock backend ("mock" with a
/// 128k window, "mock-8k" with an 8,192 window). They are not registry rows.
ModelProfile mock_profile(std::string_view model_id);
bool is_mock_model(std::string_view model_id);

/// Uniform completion front door: resolves the model profile, guards the
/// prompt window, applies the per-model rate policy, dispatches to the
/// provider's backend and does exact cost accounting.
class Gateway {
 public:
  Gateway(std::shared_ptr<ModelRegistry> registry, std::shared_ptr<Clock> clock, GatewayOptions options = {});

  /// Routes models whose `provider` equals `provider` to `backend`.
  void set_backend(const std::string& provider, std::shared_ptr<CompletionBackend> backend);
  /// Fallback for providers without a dedicated backend (e.g. mock mode).
  void set_default_backend(std::shared_ptr<CompletionBackend> backend);
  void set_audit_log(std::shared_ptr<AuditLog> audit);

  ModelProfile resolve(std::string_view model_id) const;
  std::size_t prompt_tokens(const CompletionRequest& request) const;

  /// Throws UnknownModel, ContextOverflow (before any dispatch),
  /// TokenRequestTooLarge, RateLimited, Timeout, ProviderError.
  CompletionResponse complete(const CompletionRequest& request);

  /// Number of requests handed to a backend.
  std::size_t call_count() const { return calls_.load(); }

  const ModelRegistry& registry() const { return *registry_; }
  std::shared_ptr<ModelRegistry> registry_ptr() const { return registry_; }
  Clock& clock() const { return *clock_; }
  const GatewayOptions& options() const { return options_; }

 private:
  RateLimiter* limiter_for(const ModelProfile& profile);
  std::shared_ptr<CompletionBackend> backend_for(const ModelProfile& profile) const;
  void audit(const CompletionRequest& request, const CompletionResponse* response, const std::string& error) const;

  std::shared_ptr<ModelRegistry> registry_;
  std::shared_ptr<Clock> clock_;
  GatewayOptions options_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<CompletionBackend>, std::less<>> backends_;
  std::shared_ptr<CompletionBackend> default_backend_;
  std::map<std::string, std::unique_ptr<RateLimiter>, std::less<>> limiters_;
  std::shared_ptr<AuditLog> audit_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace stayinsight
