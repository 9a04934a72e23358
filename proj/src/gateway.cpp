#include "stayinsight/gateway.hpp"

#include "stayinsight/error.hpp"

namespace stayinsight {

using nlohmann::json;

AuditLog::AuditLog(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  file_.emplace(path, std::ios::app);
  if (!*file_) throw Error(ErrorCode::Io, "cannot open audit log " + path.string());
}

void AuditLog::append(const json& record) {
  const std::string line = record.dump();
  std::lock_guard lock(mutex_);
  lines_.push_back(line);
  if (file_) {
    *file_ << line << '\n';
    file_->flush();
  }
}

std::size_t AuditLog::line_count() const {
  std::lock_guard lock(mutex_);
  return lines_.size();
}

std::vector<std::string> AuditLog::lines() const {
  std::lock_guard lock(mutex_);
  return lines_;
}

ModelProfile mock_profile(std::string_view model_id) {
  ModelProfile p;
  p.model_id = std::string(model_id);
  p.provider = "mock";
  p.release_date = "";
  p.open_source = true;
  p.free_tier = true;
  if (model_id == "mock") {
    p.display_name = "Deterministic mock (128k)";
    p.prompt_window = 128000;
    p.completion_window = 8192;
  } else if (model_id == "mock-8k") {
    p.display_name = "Deterministic mock (8k)";
    p.prompt_window = 8192;
    p.completion_window = 8192;
  } else {
    throw Error(ErrorCode::UnknownModel, "unknown model '" + std::string(model_id) + "'");
  }
  return p;
}

bool is_mock_model(std::string_view model_id) { return model_id == "mock" || model_id == "mock-8k"; }

Gateway::Gateway(std::shared_ptr<ModelRegistry> registry, std::shared_ptr<Clock> clock, GatewayOptions options)
    : registry_(std::move(registry)), clock_(std::move(clock)), options_(options) {
  if (!registry_ || !clock_) throw Error(ErrorCode::InvalidArgument, "gateway needs a registry and a clock");
}

void Gateway::set_backend(const std::string& provider, std::shared_ptr<CompletionBackend> backend) {
  std::lock_guard lock(mutex_);
  backends_[provider] = std::move(backend);
}

void Gateway::set_default_backend(std::shared_ptr<CompletionBackend> backend) {
  std::lock_guard lock(mutex_);
  default_backend_ = std::move(backend);
}

void Gateway::set_audit_log(std::shared_ptr<AuditLog> audit) {
  std::lock_guard lock(mutex_);
  audit_ = std::move(audit);
}

ModelProfile Gateway::resolve(std::string_view model_id) const {
  if (!registry_->contains(model_id) && is_mock_model(model_id)) return mock_profile(model_id);
  return registry_->lookup(model_id);
}

std::size_t Gateway::prompt_tokens(const CompletionRequest& request) const {
  return estimate_tokens(request.system_text + request.user_text, options_.tokenizer);
}

RateLimiter* Gateway::limiter_for(const ModelProfile& profile) {
  if (!profile.rate_policy) return nullptr;
  std::lock_guard lock(mutex_);
  auto it = limiters_.find(profile.model_id);
  if (it == limiters_.end()) {
    it = limiters_.emplace(profile.model_id, std::make_unique<RateLimiter>(*profile.rate_policy)).first;
  }
  return it->second.get();
}

std::shared_ptr<CompletionBackend> Gateway::backend_for(const ModelProfile& profile) const {
  std::lock_guard lock(mutex_);
  if (const auto it = backends_.find(profile.provider); it != backends_.end()) return it->second;
  if (default_backend_) return default_backend_;
  throw Error(ErrorCode::ProviderError, "no backend configured for provider '" + profile.provider + "'");
}

void Gateway::audit(const CompletionRequest& request, const CompletionResponse* response,
                    const std::string& error) const {
  std::shared_ptr<AuditLog> sink;
  {
    std::lock_guard lock(mutex_);
    sink = audit_;
  }
  if (!sink) return;
  json line = {{"ts", format_timestamp(clock_->now())}, {"model", request.model_id}, {"purpose", request.purpose}};
  if (response != nullptr) {
    line["status"] = "ok";
    line["input_tokens"] = response->input_tokens;
    line["output_tokens"] = response->output_tokens;
    line["cost_usd"] = response->cost.to_string();
    line["latency_s"] = to_seconds(response->latency);
  } else {
    line["status"] = "error";
    line["error"] = error;
  }
  sink->append(line);
}

CompletionResponse Gateway::complete(const CompletionRequest& request) {
  const ModelProfile profile = resolve(request.model_id);
  if (request.temperature < 0.0 || request.temperature > 2.0) {
    throw Error(ErrorCode::InvalidArgument, "temperature must be within [0, 2]");
  }
  const std::size_t prompt = prompt_tokens(request);
  if (prompt > profile.prompt_window) {
    throw Error(ErrorCode::ContextOverflow, "prompt of ~" + std::to_string(prompt) + " tokens exceeds " +
                                                profile.model_id + " window of " +
                                                std::to_string(profile.prompt_window));
  }

  if (RateLimiter* limiter = limiter_for(profile)) {
    Duration waited{0};
    while (true) {
      const PermitDecision d = limiter->acquire(prompt, *clock_);
      if (d.granted()) break;
      if (d.status == PermitDecision::Status::TokenRequestTooLarge) {
        throw Error(ErrorCode::TokenRequestTooLarge,
                    "request of " + std::to_string(prompt) + " tokens can never fit the per-minute token limit");
      }
      if (!options_.wait_for_permit || waited + d.retry_after > options_.max_permit_wait) {
        throw Error(ErrorCode::RateLimited,
                    "rate limit for " + profile.model_id + "; retry after " + std::to_string(to_seconds(d.retry_after)) +
                        "s",
                    true);
      }
      clock_->sleep_for(d.retry_after);
      waited += d.retry_after;
    }
  }

  auto backend = backend_for(profile);
  ++calls_;
  const TimePoint start = clock_->now();
  BackendReply reply;
  try {
    reply = backend->complete(profile, request, *clock_, start + options_.timeout);
  } catch (const Error& e) {
    audit(request, nullptr, std::string(to_string(e.code())) + ": " + e.what());
    throw;
  }
  CompletionResponse response;
  response.latency = clock_->now() - start;
  if (response.latency > options_.timeout) {
    const std::string msg = profile.model_id + " exceeded the " + std::to_string(to_seconds(options_.timeout)) +
                            "s completion timeout";
    audit(request, nullptr, "Timeout: " + msg);
    throw Error(ErrorCode::Timeout, msg, true);
  }
  response.text = std::move(reply.text);
  response.input_tokens = reply.input_tokens.value_or(prompt);
  response.output_tokens = reply.output_tokens.value_or(estimate_tokens(response.text, options_.tokenizer));
  response.cost = estimate_cost(profile, response.input_tokens, response.output_tokens);
  response.provider_raw_id = std::move(reply.raw_id);
  audit(request, &response, "");
  return response;
}

}  // namespace stayinsight
