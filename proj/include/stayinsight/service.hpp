#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "stayinsight/backends.hpp"
#include "stayinsight/ingestion.hpp"
#include "stayinsight/insight.hpp"
#include "stayinsight/model_registry.hpp"

namespace stayinsight {

// ---- configuration ----------------------------------------------------------------

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string default_model = "mock";
  std::string default_language = "en";
  std::string default_provider = "scraper";
  std::filesystem::path cache_dir = ".stayinsight";
  Duration cache_ttl = std::chrono::hours(24);
  std::filesystem::path fixtures_dir = "fixtures/listings";
  std::optional<std::filesystem::path> static_dir;
  std::map<std::string, bool> provider_enabled;  // overrides per provider id
  std::map<std::string, std::string> credentials_env;  // provider id -> env var name
  bool live_scrape = false;
  std::string live_scrape_ack;
  bool live_llm = false;
  std::size_t max_reviews = 200;

  /// Keys mirror the field names; "cache_ttl_hours" for the TTL.
  void apply_json(const nlohmann::json& j);
  /// STAYINSIGHT_HOST, _PORT, _DEFAULT_MODEL, _DEFAULT_LANGUAGE, _PROVIDER,
  /// _CACHE_DIR, _CACHE_TTL_HOURS, _FIXTURES_DIR, _STATIC_DIR, _LIVE_SCRAPE,
  /// _LIVE_SCRAPE_ACK, _LIVE_LLM, _MAX_REVIEWS.
  void apply_env(const std::function<std::optional<std::string>(const std::string&)>& getenv);
  /// TTL > 0, port range, default model resolvable.
  void validate(const ModelRegistry& registry) const;
  nlohmann::json to_json() const;

  std::filesystem::path audit_log_path() const { return cache_dir / "audit.jsonl"; }
  std::filesystem::path http_log_path() const { return cache_dir / "http.jsonl"; }
};

std::optional<std::string> process_env(const std::string& name);

/// defaults < config file < environment < CLI overrides.
ServiceConfig load_service_config(const std::optional<std::filesystem::path>& file,
                                  const std::function<std::optional<std::string>(const std::string&)>& getenv,
                                  const nlohmann::json& cli_overrides);

// ---- jobs -------------------------------------------------------------------------

enum class JobState { Pending, Fetching, Ready, Failed };
std::string_view to_string(JobState s) noexcept;
JobState parse_job_state(std::string_view text);
/// Only pending->fetching, pending->failed, fetching->ready, fetching->failed.
bool is_forward_transition(JobState from, JobState to) noexcept;

struct JobRecord {
  std::string job_id;
  std::string listing_id;
  std::string url;
  std::string provider;
  JobState state = JobState::Pending;
  std::optional<std::string> error;
  std::optional<std::string> error_code;
  TimePoint created_at;
  TimePoint updated_at;
  std::size_t review_count = 0;

  /// Throws InvalidArgument on a non-forward transition.
  void advance(JobState next, TimePoint at);
  nlohmann::json to_json() const;
  static JobRecord from_json(const nlohmann::json& j);
};

/// Flat-file job records under <dir>/<job_id>.json; concurrent reads,
/// serialized writes per job.
class JobStore {
 public:
  explicit JobStore(std::filesystem::path dir);

  void put(const JobRecord& job);
  std::optional<JobRecord> get(const std::string& job_id) const;
  /// Most recently created job for a listing.
  std::optional<JobRecord> latest_for_listing(const std::string& listing_id) const;
  /// Applies `next` if it is a forward move; returns the stored record.
  JobRecord transition(const std::string& job_id, JobState next, TimePoint at,
                       const std::function<void(JobRecord&)>& mutate = {});
  std::size_t size() const;

 private:
  void persist(const JobRecord& job) const;

  std::filesystem::path dir_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, JobRecord> jobs_;
};

// ---- service core ------------------------------------------------------------------

struct SubmitResult {
  JobRecord job;
  bool created = false;
};

/// Everything behind the HTTP routes and the CLI.
class ReviewService {
 public:
  struct Parts {
    std::shared_ptr<Clock> clock;
    std::shared_ptr<ModelRegistry> registry;
    std::shared_ptr<Gateway> gateway;
    std::shared_ptr<MockBackend> mock;
    std::map<std::string, std::shared_ptr<ReviewProvider>> providers;
  };

  /// Builds the default wiring for `config` (fixture providers, mock or live
  /// LLM backends, audit log in the cache dir).
  static Parts default_parts(const ServiceConfig& config, std::shared_ptr<Clock> clock);

  ReviewService(ServiceConfig config, Parts parts);
  ~ReviewService();
  ReviewService(const ReviewService&) = delete;
  ReviewService& operator=(const ReviewService&) = delete;

  /// Starts (or reuses) an asynchronous fetch job.
  SubmitResult submit_listing(const std::string& url, const std::optional<std::string>& provider);
  JobRecord job(const std::string& job_id) const;

  /// Synchronous fetch for the CLI; uses the corpus cache.
  FetchOutcome fetch_now(const std::string& url, const std::optional<std::string>& provider);

  InsightResult summary(const std::string& listing_id, const std::optional<std::string>& language,
                        const std::optional<std::string>& model);
  InsightResult query(const std::string& listing_id, const std::string& question,
                      const std::optional<std::string>& language, const std::optional<std::string>& model);

  nlohmann::json models() const;

  /// Blocks until background fetches finish.
  void wait_idle();

  const ServiceConfig& config() const { return config_; }
  Gateway& gateway() { return *parts_.gateway; }
  ModelRegistry& registry() { return *parts_.registry; }
  InsightEngine& engine() { return *engine_; }
  MockBackend* mock() { return parts_.mock.get(); }
  ReviewProvider& provider(const std::string& id);

 private:
  void run_fetch(std::string job_id, FetchRequest request, std::shared_ptr<ReviewProvider> provider);
  std::shared_ptr<const ReviewCorpus> corpus_for(const std::string& listing_id);

  ServiceConfig config_;
  Parts parts_;
  std::unique_ptr<ReviewFetcher> fetcher_;
  std::unique_ptr<InsightEngine> engine_;
  JobStore jobs_;
  std::mutex submit_mutex_;
  mutable std::mutex corpora_mutex_;
  std::map<std::string, std::shared_ptr<const ReviewCorpus>> corpora_;
  std::mutex workers_mutex_;
  std::vector<std::thread> workers_;
  std::atomic<std::uint64_t> job_counter_{0};
};

// ---- HTTP --------------------------------------------------------------------------

int http_status_for(ErrorCode code) noexcept;
nlohmann::json error_body(const Error& e);

/// cpp-httplib server for the API and the static route. Every response
/// carries X-Request-Id; each completed request appends one line to the HTTP
/// audit log.
class HttpService {
 public:
  HttpService(ReviewService& service, std::shared_ptr<AuditLog> http_log);
  ~HttpService();

  /// Binds (port 0 picks a free port) and serves on a background thread.
  int start(const std::string& host, int port);
  /// Binds and serves on the calling thread.
  void run(const std::string& host, int port);
  void stop();
  int port() const { return port_; }
  AuditLog& http_log() { return *http_log_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::shared_ptr<AuditLog> http_log_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace stayinsight
