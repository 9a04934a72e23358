#include "stayinsight/model_registry.hpp"

#include <mutex>
#include <sstream>

#include "stayinsight/error.hpp"
#include "stayinsight/text.hpp"

namespace stayinsight {

using nlohmann::json;

Usd estimate_cost(const ModelProfile& profile, std::uint64_t input_tokens, std::uint64_t output_tokens) {
  const auto in = static_cast<std::int64_t>(input_tokens);
  const auto out = static_cast<std::int64_t>(output_tokens);
  return profile.input_cost_per_1m.scaled(in, 1'000'000) + profile.output_cost_per_1m.scaled(out, 1'000'000);
}

void validate_profile(const ModelProfile& p) {
  auto bad = [&](const std::string& why) {
    return Error(ErrorCode::InvalidArgument, "model '" + p.model_id + "': " + why);
  };
  if (p.model_id.empty()) throw bad("empty model_id");
  if (p.prompt_window == 0 || p.completion_window == 0) throw bad("context windows must be positive");
  for (const Usd rate : {p.input_cost_per_1m, p.output_cost_per_1m}) {
    if (rate < Usd{}) throw bad("negative cost");
    // Keeps tokens * rate / 1e6 on the 1e-12 grid for every token count.
    if (rate.pico() % 1'000'000 != 0) throw bad("rates are limited to 6 fractional digits");
  }
  if (p.rate_policy) {
    for (const auto& limit : {p.rate_policy->requests_per_minute, p.rate_policy->requests_per_day,
                              p.rate_policy->tokens_per_minute}) {
      if (limit && *limit == 0) throw bad("rate limits must be positive when present");
    }
  }
}

json profile_to_json(const ModelProfile& p) {
  json j = {{"model_id", p.model_id},
            {"display_name", p.display_name},
            {"release_date", p.release_date},
            {"input_cost_per_1m", p.input_cost_per_1m.to_string()},
            {"output_cost_per_1m", p.output_cost_per_1m.to_string()},
            {"prompt_window", p.prompt_window},
            {"completion_window", p.completion_window},
            {"open_source", p.open_source},
            {"provider", p.provider},
            {"free_tier", p.free_tier},
            {"available", p.available}};
  if (!p.note.empty()) j["note"] = p.note;
  if (p.rate_policy) {
    json rp = json::object();
    if (p.rate_policy->requests_per_minute) rp["requests_per_minute"] = *p.rate_policy->requests_per_minute;
    if (p.rate_policy->requests_per_day) rp["requests_per_day"] = *p.rate_policy->requests_per_day;
    if (p.rate_policy->tokens_per_minute) rp["tokens_per_minute"] = *p.rate_policy->tokens_per_minute;
    j["rate_policy"] = rp;
  }
  return j;
}

namespace {

Usd cost_field(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_string()) return Usd::parse(v.get<std::string>());
  if (v.is_number_integer()) return Usd::whole(v.get<std::int64_t>());
  throw Error(ErrorCode::InvalidArgument, std::string("cost field '") + key + "' must be a decimal string");
}

}  // namespace

ModelProfile profile_from_json(const json& j) {
  try {
    ModelProfile p;
    p.model_id = j.at("model_id").get<std::string>();
    p.display_name = j.value("display_name", p.model_id);
    p.release_date = j.value("release_date", "");
    p.input_cost_per_1m = cost_field(j, "input_cost_per_1m");
    p.output_cost_per_1m = cost_field(j, "output_cost_per_1m");
    p.prompt_window = j.at("prompt_window").get<std::size_t>();
    p.completion_window = j.at("completion_window").get<std::size_t>();
    p.open_source = j.value("open_source", false);
    p.provider = j.value("provider", "");
    p.free_tier = j.value("free_tier", false);
    p.available = j.value("available", true);
    p.note = j.value("note", "");
    if (j.contains("rate_policy") && j.at("rate_policy").is_object()) {
      const auto& rp = j.at("rate_policy");
      RateLimitPolicy policy;
      if (rp.contains("requests_per_minute")) policy.requests_per_minute = rp.at("requests_per_minute").get<std::uint64_t>();
      if (rp.contains("requests_per_day")) policy.requests_per_day = rp.at("requests_per_day").get<std::uint64_t>();
      if (rp.contains("tokens_per_minute")) policy.tokens_per_minute = rp.at("tokens_per_minute").get<std::uint64_t>();
      p.rate_policy = policy;
    }
    validate_profile(p);
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad model profile: ") + e.what());
  }
}

ModelRegistry::ModelRegistry(const ModelRegistry& other) {
  std::shared_lock lock(other.mutex_);
  profiles_ = other.profiles_;
}

ModelRegistry ModelRegistry::seeded() { return from_seed_text(embedded_model_seed()); }

ModelRegistry ModelRegistry::from_seed_text(std::string_view jsonl) {
  ModelRegistry registry;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidArgument, std::string("bad model seed line: ") + e.what());
    }
    registry.register_model(profile_from_json(j));
  }
  return registry;
}

void ModelRegistry::register_model(ModelProfile profile) {
  validate_profile(profile);
  std::unique_lock lock(mutex_);
  for (const auto& p : profiles_) {
    if (p.model_id == profile.model_id) {
      throw Error(ErrorCode::DuplicateModel, "model '" + profile.model_id + "' is already registered");
    }
  }
  profiles_.push_back(std::move(profile));
}

ModelProfile ModelRegistry::lookup(std::string_view model_id) const {
  std::shared_lock lock(mutex_);
  for (const auto& p : profiles_) {
    if (p.model_id == model_id) return p;
  }
  throw Error(ErrorCode::UnknownModel, "unknown model '" + std::string(model_id) + "'");
}

bool ModelRegistry::contains(std::string_view model_id) const {
  std::shared_lock lock(mutex_);
  for (const auto& p : profiles_) {
    if (p.model_id == model_id) return true;
  }
  return false;
}

std::vector<ModelProfile> ModelRegistry::list() const {
  std::shared_lock lock(mutex_);
  return profiles_;
}

std::size_t ModelRegistry::size() const {
  std::shared_lock lock(mutex_);
  return profiles_.size();
}

}  // namespace stayinsight
