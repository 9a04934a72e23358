#include "stayinsight/service.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include "stayinsight/digest.hpp"
#include "stayinsight/error.hpp"
#include "stayinsight/records.hpp"
#include "stayinsight/text.hpp"

namespace stayinsight {

using nlohmann::json;

// ---- configuration ----------------------------------------------------------------

namespace {

bool parse_bool(const std::string& name, const std::string& v) {
  const std::string s = text::to_lower_ascii(text::trim(v));
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off" || s.empty()) return false;
  throw Error(ErrorCode::InvalidArgument, name + ": expected a boolean, got '" + v + "'");
}

long long parse_int(const std::string& name, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long n = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, name + ": expected an integer, got '" + v + "'");
  }
}

}  // namespace

void ServiceConfig::apply_json(const json& j) {
  if (j.is_null()) return;
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "configuration must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (value.is_null()) continue;
      if (key == "host") host = value.get<std::string>();
      else if (key == "port") port = value.get<int>();
      else if (key == "default_model") default_model = value.get<std::string>();
      else if (key == "default_language") default_language = value.get<std::string>();
      else if (key == "default_provider") default_provider = value.get<std::string>();
      else if (key == "cache_dir") cache_dir = value.get<std::string>();
      else if (key == "cache_ttl_hours") cache_ttl = from_seconds(value.get<double>() * 3600.0);
      else if (key == "fixtures_dir") fixtures_dir = value.get<std::string>();
      else if (key == "static_dir") static_dir = std::filesystem::path(value.get<std::string>());
      else if (key == "provider_enabled") provider_enabled = value.get<std::map<std::string, bool>>();
      else if (key == "credentials_env") credentials_env = value.get<std::map<std::string, std::string>>();
      else if (key == "live_scrape") live_scrape = value.get<bool>();
      else if (key == "live_scrape_ack") live_scrape_ack = value.get<std::string>();
      else if (key == "live_llm") live_llm = value.get<bool>();
      else if (key == "max_reviews") max_reviews = value.get<std::size_t>();
      else throw Error(ErrorCode::InvalidArgument, "unknown configuration key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad configuration value: ") + e.what());
  }
}

void ServiceConfig::apply_env(const std::function<std::optional<std::string>(const std::string&)>& getenv) {
  auto get = [&](const char* suffix) { return getenv(std::string("STAYINSIGHT_") + suffix); };
  if (auto v = get("HOST")) host = *v;
  if (auto v = get("PORT")) port = static_cast<int>(parse_int("STAYINSIGHT_PORT", *v));
  if (auto v = get("DEFAULT_MODEL")) default_model = *v;
  if (auto v = get("DEFAULT_LANGUAGE")) default_language = *v;
  if (auto v = get("PROVIDER")) default_provider = *v;
  if (auto v = get("CACHE_DIR")) cache_dir = *v;
  if (auto v = get("CACHE_TTL_HOURS")) {
    cache_ttl = std::chrono::hours(parse_int("STAYINSIGHT_CACHE_TTL_HOURS", *v));
  }
  if (auto v = get("FIXTURES_DIR")) fixtures_dir = *v;
  if (auto v = get("STATIC_DIR")) static_dir = std::filesystem::path(*v);
  if (auto v = get("LIVE_SCRAPE")) live_scrape = parse_bool("STAYINSIGHT_LIVE_SCRAPE", *v);
  if (auto v = get("LIVE_SCRAPE_ACK")) live_scrape_ack = *v;
  if (auto v = get("LIVE_LLM")) live_llm = parse_bool("STAYINSIGHT_LIVE_LLM", *v);
  if (auto v = get("MAX_REVIEWS")) max_reviews = static_cast<std::size_t>(parse_int("STAYINSIGHT_MAX_REVIEWS", *v));
}

void ServiceConfig::validate(const ModelRegistry& registry) const {
  if (cache_ttl <= Duration::zero()) throw Error(ErrorCode::InvalidArgument, "cache TTL must be positive");
  if (port < 0 || port > 65535) throw Error(ErrorCode::InvalidArgument, "port out of range");
  if (max_reviews < 1) throw Error(ErrorCode::InvalidArgument, "max_reviews must be at least 1");
  if (!registry.contains(default_model) && !is_mock_model(default_model)) {
    throw Error(ErrorCode::UnknownModel, "default model '" + default_model + "' is not in the registry");
  }
  if (!is_valid_language_code(default_language)) {
    throw Error(ErrorCode::InvalidArgument, "default language '" + default_language + "' is not a language code");
  }
}

json ServiceConfig::to_json() const {
  json j = {{"host", host},
            {"port", port},
            {"default_model", default_model},
            {"default_language", default_language},
            {"default_provider", default_provider},
            {"cache_dir", cache_dir.string()},
            {"cache_ttl_hours", to_seconds(cache_ttl) / 3600.0},
            {"fixtures_dir", fixtures_dir.string()},
            {"provider_enabled", provider_enabled},
            {"credentials_env", credentials_env},
            {"live_scrape", live_scrape},
            {"live_llm", live_llm},
            {"max_reviews", max_reviews}};
  if (static_dir) j["static_dir"] = static_dir->string();
  return j;
}

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

ServiceConfig load_service_config(const std::optional<std::filesystem::path>& file,
                                  const std::function<std::optional<std::string>(const std::string&)>& getenv,
                                  const json& cli_overrides) {
  ServiceConfig cfg;
  if (file) {
    try {
      cfg.apply_json(json::parse(read_file(*file)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidArgument, "config file " + file->string() + ": " + e.what());
    }
  }
  cfg.apply_env(getenv);
  cfg.apply_json(cli_overrides);
  return cfg;
}

// ---- jobs -------------------------------------------------------------------------

std::string_view to_string(JobState s) noexcept {
  switch (s) {
    case JobState::Pending: return "pending";
    case JobState::Fetching: return "fetching";
    case JobState::Ready: return "ready";
    case JobState::Failed: return "failed";
  }
  return "pending";
}

JobState parse_job_state(std::string_view text) {
  for (const auto s : {JobState::Pending, JobState::Fetching, JobState::Ready, JobState::Failed}) {
    if (to_string(s) == text) return s;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown job state '" + std::string(text) + "'");
}

bool is_forward_transition(JobState from, JobState to) noexcept {
  switch (from) {
    case JobState::Pending: return to == JobState::Fetching || to == JobState::Failed;
    case JobState::Fetching: return to == JobState::Ready || to == JobState::Failed;
    case JobState::Ready:
    case JobState::Failed: return false;
  }
  return false;
}

void JobRecord::advance(JobState next, TimePoint at) {
  if (!is_forward_transition(state, next)) {
    throw Error(ErrorCode::InvalidArgument, "job " + job_id + " cannot move from " + std::string(to_string(state)) +
                                                " to " + std::string(to_string(next)));
  }
  state = next;
  updated_at = at;
}

json JobRecord::to_json() const {
  json j = {{"job_id", job_id},
            {"listing_id", listing_id},
            {"url", url},
            {"provider", provider},
            {"state", to_string(state)},
            {"created_at", format_timestamp(created_at)},
            {"updated_at", format_timestamp(updated_at)},
            {"review_count", review_count}};
  j["error"] = error ? json(*error) : json(nullptr);
  j["error_code"] = error_code ? json(*error_code) : json(nullptr);
  return j;
}

JobRecord JobRecord::from_json(const json& j) {
  try {
    JobRecord r;
    r.job_id = j.at("job_id").get<std::string>();
    r.listing_id = j.at("listing_id").get<std::string>();
    r.url = j.at("url").get<std::string>();
    r.provider = j.at("provider").get<std::string>();
    r.state = parse_job_state(j.at("state").get<std::string>());
    r.created_at = parse_timestamp(j.at("created_at").get<std::string>());
    r.updated_at = parse_timestamp(j.at("updated_at").get<std::string>());
    r.review_count = j.value("review_count", std::size_t{0});
    if (j.contains("error") && j["error"].is_string()) r.error = j["error"].get<std::string>();
    if (j.contains("error_code") && j["error_code"].is_string()) r.error_code = j["error_code"].get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("bad job record: ") + e.what());
  }
}

JobStore::JobStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.path().extension() != ".json") continue;
    try {
      JobRecord r = JobRecord::from_json(json::parse(read_file(entry.path())));
      if (r.state == JobState::Pending || r.state == JobState::Fetching) {
        // left over from a previous process
        r.advance(JobState::Failed, r.updated_at);
        r.error = "interrupted before the fetch finished";
        persist(r);
      }
      jobs_[r.job_id] = std::move(r);
    } catch (const std::exception&) {
      // unreadable record: skip it
    }
  }
}

void JobStore::persist(const JobRecord& job) const {
  write_file_atomic(dir_ / (job.job_id + ".json"), job.to_json().dump(2) + "\n");
}

void JobStore::put(const JobRecord& job) {
  std::unique_lock lock(mutex_);
  persist(job);
  jobs_[job.job_id] = job;
}

std::optional<JobRecord> JobStore::get(const std::string& job_id) const {
  std::shared_lock lock(mutex_);
  const auto it = jobs_.find(job_id);
  if (it == jobs_.end()) return std::nullopt;
  return it->second;
}

std::optional<JobRecord> JobStore::latest_for_listing(const std::string& listing_id) const {
  std::shared_lock lock(mutex_);
  const JobRecord* best = nullptr;
  for (const auto& [id, r] : jobs_) {
    if (r.listing_id != listing_id) continue;
    if (best == nullptr || r.created_at > best->created_at ||
        (r.created_at == best->created_at && r.job_id > best->job_id)) {
      best = &r;
    }
  }
  if (best == nullptr) return std::nullopt;
  return *best;
}

JobRecord JobStore::transition(const std::string& job_id, JobState next, TimePoint at,
                               const std::function<void(JobRecord&)>& mutate) {
  std::unique_lock lock(mutex_);
  const auto it = jobs_.find(job_id);
  if (it == jobs_.end()) throw Error(ErrorCode::NotFound, "unknown job '" + job_id + "'");
  JobRecord updated = it->second;
  updated.advance(next, at);
  if (mutate) mutate(updated);
  persist(updated);
  it->second = updated;
  return updated;
}

std::size_t JobStore::size() const {
  std::shared_lock lock(mutex_);
  return jobs_.size();
}

// ---- service core ------------------------------------------------------------------

ReviewService::Parts ReviewService::default_parts(const ServiceConfig& config, std::shared_ptr<Clock> clock) {
  Parts parts;
  parts.clock = clock ? std::move(clock) : std::make_shared<SystemClock>();
  parts.registry = std::make_shared<ModelRegistry>(ModelRegistry::seeded());
  parts.gateway = std::make_shared<Gateway>(parts.registry, parts.clock);
  parts.mock = std::make_shared<MockBackend>();
  parts.gateway->set_backend("mock", parts.mock);
  if (config.live_llm) {
    install_live_backends(*parts.gateway, make_https_transport());
  } else {
    parts.gateway->set_default_backend(parts.mock);
  }
  std::filesystem::create_directories(config.cache_dir);
  parts.gateway->set_audit_log(std::make_shared<AuditLog>(config.audit_log_path()));

  for (ProviderConfig cfg : default_provider_configs()) {
    if (const auto it = config.provider_enabled.find(cfg.provider_id); it != config.provider_enabled.end()) {
      cfg.enabled = it->second;
    }
    if (const auto it = config.credentials_env.find(cfg.provider_id); it != config.credentials_env.end()) {
      cfg.credentials_env = it->second;
    }
    std::shared_ptr<ReviewProvider> p;
    if (cfg.provider_id == "arel") {
      p = std::make_shared<RecordApiProvider>(cfg, RecordSchema::Arel, RecordedResponses(config.fixtures_dir));
    } else if (cfg.provider_id == "caprolok") {
      p = std::make_shared<RecordApiProvider>(cfg, RecordSchema::Caprolok, RecordedResponses(config.fixtures_dir));
    } else if (cfg.provider_id == "scraper") {
      std::shared_ptr<PageSource> pages;
      if (config.live_scrape) {
        pages = std::make_shared<LivePageSource>(make_https_transport(), true, config.live_scrape_ack);
      } else {
        pages = std::make_shared<SnapshotPageSource>(config.fixtures_dir);
      }
      p = std::make_shared<ScraperProvider>(cfg, pages);
    } else {
      p = std::make_shared<FixtureProvider>(cfg, config.fixtures_dir);
    }
    parts.providers[cfg.provider_id] = std::move(p);
  }
  return parts;
}

ReviewService::ReviewService(ServiceConfig config, Parts parts)
    : config_(std::move(config)), parts_(std::move(parts)), jobs_(config_.cache_dir / "jobs") {
  if (!parts_.clock || !parts_.registry || !parts_.gateway) {
    throw Error(ErrorCode::InvalidArgument, "service needs a clock, a registry and a gateway");
  }
  config_.validate(*parts_.registry);
  FetchOptions fo;
  fo.cache_dir = config_.cache_dir;
  fo.cache_ttl = config_.cache_ttl;
  fetcher_ = std::make_unique<ReviewFetcher>(parts_.clock, fo);
  EngineOptions eo;
  eo.summary_cache_ttl = config_.cache_ttl;
  engine_ = std::make_unique<InsightEngine>(parts_.gateway, eo);
}

ReviewService::~ReviewService() { wait_idle(); }

ReviewProvider& ReviewService::provider(const std::string& id) {
  const auto it = parts_.providers.find(id);
  if (it == parts_.providers.end()) throw Error(ErrorCode::UnknownProvider, "unknown provider '" + id + "'");
  return *it->second;
}

SubmitResult ReviewService::submit_listing(const std::string& url, const std::optional<std::string>& provider_id) {
  const Listing listing = validate_listing_url(url);
  const std::string pid = provider_id.value_or(config_.default_provider);
  const auto pit = parts_.providers.find(pid);
  if (pit == parts_.providers.end()) throw Error(ErrorCode::UnknownProvider, "unknown provider '" + pid + "'");
  if (!pit->second->config().enabled) throw Error(ErrorCode::ProviderDisabled, "provider '" + pid + "' is disabled");

  std::lock_guard lock(submit_mutex_);
  if (auto existing = jobs_.latest_for_listing(listing.listing_id)) {
    if (existing->state == JobState::Pending || existing->state == JobState::Fetching) return {*existing, false};
    if (existing->state == JobState::Ready) {
      bool fresh = false;
      {
        std::lock_guard cl(corpora_mutex_);
        const auto it = corpora_.find(listing.listing_id);
        fresh = it != corpora_.end() && parts_.clock->now() - it->second->fetched_at < config_.cache_ttl;
      }
      if (!fresh) fresh = fetcher_->cached(listing.listing_id).has_value();
      if (fresh) return {*existing, false};
    }
  }

  const TimePoint now = parts_.clock->now();
  JobRecord job;
  const std::uint64_t n = ++job_counter_;
  job.job_id = "job-" + sha256_hex(listing.listing_id + '|' + format_timestamp(now) + '|' + std::to_string(n) + '|' +
                                   std::to_string(jobs_.size()))
                            .substr(0, 16);
  job.listing_id = listing.listing_id;
  job.url = listing.url;
  job.provider = pid;
  job.created_at = now;
  job.updated_at = now;
  jobs_.put(job);

  FetchRequest request{listing, config_.max_reviews, ReviewSort::NewestFirst};
  std::lock_guard wl(workers_mutex_);
  workers_.emplace_back(&ReviewService::run_fetch, this, job.job_id, request, pit->second);
  return {job, true};
}

void ReviewService::run_fetch(std::string job_id, FetchRequest request, std::shared_ptr<ReviewProvider> provider) {
  try {
    jobs_.transition(job_id, JobState::Fetching, parts_.clock->now());
    FetchOutcome outcome = fetcher_->fetch(request, *provider);
    const std::size_t count = outcome.corpus.reviews.size();
    {
      std::lock_guard cl(corpora_mutex_);
      corpora_[request.listing.listing_id] = std::make_shared<const ReviewCorpus>(std::move(outcome.corpus));
    }
    jobs_.transition(job_id, JobState::Ready, parts_.clock->now(), [&](JobRecord& r) { r.review_count = count; });
  } catch (const Error& e) {
    jobs_.transition(job_id, JobState::Failed, parts_.clock->now(), [&](JobRecord& r) {
      r.error = e.what();
      r.error_code = std::string(to_string(e.code()));
    });
  } catch (const std::exception& e) {
    jobs_.transition(job_id, JobState::Failed, parts_.clock->now(), [&](JobRecord& r) { r.error = e.what(); });
  }
}

JobRecord ReviewService::job(const std::string& job_id) const {
  auto r = jobs_.get(job_id);
  if (!r) throw Error(ErrorCode::NotFound, "unknown job '" + job_id + "'");
  return *r;
}

FetchOutcome ReviewService::fetch_now(const std::string& url, const std::optional<std::string>& provider_id) {
  const Listing listing = validate_listing_url(url);
  ReviewProvider& p = provider(provider_id.value_or(config_.default_provider));
  FetchOutcome outcome = fetcher_->fetch(FetchRequest{listing, config_.max_reviews, ReviewSort::NewestFirst}, p);
  std::lock_guard cl(corpora_mutex_);
  corpora_[listing.listing_id] = std::make_shared<const ReviewCorpus>(outcome.corpus);
  return outcome;
}

std::shared_ptr<const ReviewCorpus> ReviewService::corpus_for(const std::string& listing_id) {
  {
    std::lock_guard cl(corpora_mutex_);
    if (const auto it = corpora_.find(listing_id); it != corpora_.end()) {
      const auto job = jobs_.latest_for_listing(listing_id);
      if (!job || job->state == JobState::Ready) return it->second;
    }
  }
  const auto job = jobs_.latest_for_listing(listing_id);
  if (!job) throw Error(ErrorCode::NotFound, "unknown listing '" + listing_id + "'");
  if (job->state == JobState::Failed) {
    throw Error(ErrorCode::NotReady, "fetch for listing '" + listing_id + "' failed: " + job->error.value_or("unknown"));
  }
  if (job->state != JobState::Ready) {
    throw Error(ErrorCode::NotReady, "listing '" + listing_id + "' is still " + std::string(to_string(job->state)));
  }
  const auto path = fetcher_->cache_path(listing_id);
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::NotFound, "corpus for listing '" + listing_id + "' is gone");
  ReviewCorpus loaded = read_corpus_file(path);
  if (loaded.reviews.size() > config_.max_reviews) loaded.reviews.resize(config_.max_reviews);
  auto corpus = std::make_shared<const ReviewCorpus>(std::move(loaded));
  std::lock_guard cl(corpora_mutex_);
  corpora_[listing_id] = corpus;
  return corpus;
}

InsightResult ReviewService::summary(const std::string& listing_id, const std::optional<std::string>& language,
                                     const std::optional<std::string>& model) {
  const auto corpus = corpus_for(listing_id);
  SummaryRequest req{listing_id, language.value_or(config_.default_language), model.value_or(config_.default_model)};
  return engine_->summarize(*corpus, req);
}

InsightResult ReviewService::query(const std::string& listing_id, const std::string& question,
                                   const std::optional<std::string>& language, const std::optional<std::string>& model) {
  if (text::trim(question).empty()) throw Error(ErrorCode::EmptyQuestion, "question is empty");
  const auto corpus = corpus_for(listing_id);
  QueryRequest req{listing_id, question, language.value_or(config_.default_language),
                   model.value_or(config_.default_model)};
  return engine_->answer_query(*corpus, req);
}

json ReviewService::models() const {
  json rows = json::array();
  for (const auto& p : parts_.registry->list()) rows.push_back(profile_to_json(p));
  return json{{"models", rows}, {"count", rows.size()}, {"default_model", config_.default_model}};
}

void ReviewService::wait_idle() {
  std::vector<std::thread> running;
  {
    std::lock_guard wl(workers_mutex_);
    running.swap(workers_);
  }
  for (auto& t : running) {
    if (t.joinable()) t.join();
  }
}

}  // namespace stayinsight
