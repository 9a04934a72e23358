#pragma once

#include <cstdint>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "stayinsight/money.hpp"

namespace stayinsight {

struct RateLimitPolicy {
  std::optional<std::uint64_t> requests_per_minute;
  std::optional<std::uint64_t> requests_per_day;
  std::optional<std::uint64_t> tokens_per_minute;

  friend bool operator==(const RateLimitPolicy&, const RateLimitPolicy&) = default;
};

struct ModelProfile {
  std::string model_id;
  std::string display_name;
  std::string release_date;  // "YYYY-MM"
  Usd input_cost_per_1m;
  Usd output_cost_per_1m;
  std::size_t prompt_window = 0;
  std::size_t completion_window = 0;
  bool open_source = false;
  std::optional<RateLimitPolicy> rate_policy;
  std::string provider;  // wire adapter: openai, anthropic, google, local, mock
  bool free_tier = false;
  bool available = true;
  std::string note;

  friend bool operator==(const ModelProfile&, const ModelProfile&) = default;
};

/// input_tokens * input_rate / 1M + output_tokens * output_rate / 1M, exact.
Usd estimate_cost(const ModelProfile& profile, std::uint64_t input_tokens, std::uint64_t output_tokens);

/// Throws InvalidArgument when a profile breaks an invariant (empty id,
/// zero windows, negative costs, rates finer than 1e-6 USD, zero limits).
void validate_profile(const ModelProfile& profile);

nlohmann::json profile_to_json(const ModelProfile& profile);
ModelProfile profile_from_json(const nlohmann::json& j);

/// Append-only model catalogue, safe for concurrent lookups.
class ModelRegistry {
 public:
  ModelRegistry() = default;
  ModelRegistry(const ModelRegistry& other);
  ModelRegistry& operator=(const ModelRegistry&) = delete;

  /// The eight models of the shipped seed file.
  static ModelRegistry seeded();
  /// One JSON profile per non-blank line.
  static ModelRegistry from_seed_text(std::string_view jsonl);

  void register_model(ModelProfile profile);  // DuplicateModel on reuse of an id
  ModelProfile lookup(std::string_view model_id) const;  // UnknownModel
  bool contains(std::string_view model_id) const;
  std::vector<ModelProfile> list() const;  // registration order
  std::size_t size() const;

 private:
  mutable std::shared_mutex mutex_;
  std::vector<ModelProfile> profiles_;
};

/// Seed file contents compiled into the library.
std::string_view embedded_model_seed();

}  // namespace stayinsight
