#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stayinsight/backends.hpp"
#include "stayinsight/money.hpp"
#include "stayinsight/records.hpp"
#include "stayinsight/review.hpp"
#include "stayinsight/time.hpp"

namespace stayinsight {

enum class ReviewSort { NewestFirst, ScoreDesc, ScoreAsc };
std::string_view to_string(ReviewSort s) noexcept;
ReviewSort parse_review_sort(std::string_view text);

struct FetchRequest {
  Listing listing;
  std::size_t max_reviews = 200;
  ReviewSort sort = ReviewSort::NewestFirst;
};

struct FetchMetrics {
  std::string provider;
  std::size_t reviews_returned = 0;
  Duration wall_time{0};
  Usd monetary_cost;
  std::size_t pages_fetched = 0;
  bool from_cache = false;
};

enum class MaintenanceClass { None, Low, High };
std::string_view to_string(MaintenanceClass m) noexcept;

struct ProviderConfig {
  std::string provider_id;
  std::string display_name;
  Usd cost_per_1000_reviews;
  std::string credentials_env;  // environment variable name, empty if none
  bool enabled = true;
  MaintenanceClass maintenance = MaintenanceClass::None;
  double score_scale_max = 10.0;
  /// Reviews still billable on the account; absent means unmetered.
  std::optional<std::size_t> quota_remaining;
};

/// Built-in provider configs: "arel", "caprolok", "scraper", "fixture".
std::vector<ProviderConfig> default_provider_configs();

/// cost_per_1000 * n / 1000, exact.
Usd estimate_fetch_cost(const ProviderConfig& config, std::size_t n_reviews);
/// Looks `provider_id` up in the default configs; UnknownProvider otherwise.
Usd estimate_fetch_cost(std::string_view provider_id, std::size_t n_reviews);

/// What a provider hands back before sorting/truncation.
struct ProviderBatch {
  std::vector<Review> reviews;
  std::size_t pages_fetched = 0;
};

class ReviewProvider {
 public:
  virtual ~ReviewProvider() = default;
  virtual const ProviderConfig& config() const = 0;
  /// Reviews for the listing, at least `request.max_reviews` when available.
  /// Throws NetworkFailure, NoReviewsFound, ProviderQuotaExceeded, ...
  virtual ProviderBatch fetch(const FetchRequest& request, Clock& clock) = 0;

  /// Extra latency served on the clock for each fetch (benchmarks).
  void set_injected_delay(Duration d) { injected_delay_ = d; }
  Duration injected_delay() const { return injected_delay_; }

 private:
  Duration injected_delay_{0};
};

// ---- snapshot scraping ---------------------------------------------------------

/// Selector set for the Booking-style review list markup.
struct ReviewPageLayout {
  std::string container = "ul.review_list";
  std::string block = "li.review_list_new_item_block";
  std::string review_id_attr = "data-review-url";
  std::string score = ".bui-review-score__badge";
  std::string date = ".c-review-block__date";
  std::string title = ".c-review-block__title";
  std::string review_row = ".c-review__row";
  std::string row_body = ".c-review__body";
  std::string positive_marker = "c-review__prefix--color-green";
  std::string reply = ".c-review-block__response__body";
  std::string username = ".bui-avatar-block__title";
  std::string flag = "img.bui-flag__flag";
  std::string traveller_type = ".review-panel-wide__traveller_type .bui-list__body";
  std::string helpful = ".review-helpful__vote-others-helpful";
  std::string photo = ".c-review-block__photos img";
  std::string next_page = "a.pagenext";
};

/// Extracts one Review per review block, in page order. The snapshot carries
/// no stay dates, so `stay` stays absent. Throws LayoutNotRecognized when the
/// review container is missing.
std::vector<Review> parse_reviews_page(std::string_view html, const std::string& listing_id,
                                       const ReviewPageLayout& layout = {});

/// href of the "next page" link, if the page has one.
std::optional<std::string> find_next_page(std::string_view html, const ReviewPageLayout& layout = {});

/// Resolves review-page URLs to HTML.
class PageSource {
 public:
  virtual ~PageSource() = default;
  virtual std::string first_page_url(const Listing& listing) const = 0;
  /// nullopt when the page does not exist.
  virtual std::optional<std::string> load(const Listing& listing, const std::string& url) = 0;
};

/// Recorded pages at <root>/<listing_id>/pages/page-<n>.html; the page number
/// comes from the `page=` query parameter.
class SnapshotPageSource final : public PageSource {
 public:
  explicit SnapshotPageSource(std::filesystem::path root);
  std::string first_page_url(const Listing& listing) const override;
  std::optional<std::string> load(const Listing& listing, const std::string& url) override;

 private:
  std::filesystem::path root_;
};

inline constexpr std::string_view kLiveScrapeAcknowledgment = "I-ACCEPT-PLATFORM-TERMS-FOR-ACADEMIC-USE";

/// Fetches pages from the live site. Construction throws ProviderDisabled
/// unless `enabled` is set and `acknowledgment` equals kLiveScrapeAcknowledgment.
class LivePageSource final : public PageSource {
 public:
  LivePageSource(std::shared_ptr<HttpTransport> transport, bool enabled, std::string_view acknowledgment);
  std::string first_page_url(const Listing& listing) const override;
  std::optional<std::string> load(const Listing& listing, const std::string& url) override;

 private:
  std::shared_ptr<HttpTransport> transport_;
};

/// Follows next-page links until enough reviews are collected.
class ScraperProvider final : public ReviewProvider {
 public:
  ScraperProvider(ProviderConfig config, std::shared_ptr<PageSource> pages, ReviewPageLayout layout = {});
  const ProviderConfig& config() const override { return config_; }
  ProviderBatch fetch(const FetchRequest& request, Clock& clock) override;

 private:
  ProviderConfig config_;
  std::shared_ptr<PageSource> pages_;
  ReviewPageLayout layout_;
};

// ---- API-schema providers ------------------------------------------------------

/// Recorded provider responses at <root>/<listing_id>/<provider_id>.json, a
/// JSON array of records in the provider's schema.
class RecordedResponses {
 public:
  explicit RecordedResponses(std::filesystem::path root) : root_(std::move(root)) {}
  std::optional<std::string> load(const std::string& listing_id, const std::string& provider_id) const;

 private:
  std::filesystem::path root_;
};

/// Arel- or Caprolok-shaped provider backed by recorded responses.
class RecordApiProvider final : public ReviewProvider {
 public:
  RecordApiProvider(ProviderConfig config, RecordSchema schema, RecordedResponses responses);
  const ProviderConfig& config() const override { return config_; }
  ProviderBatch fetch(const FetchRequest& request, Clock& clock) override;

 private:
  ProviderConfig config_;
  RecordSchema schema_;
  RecordedResponses responses_;
  std::mutex quota_mutex_;
};

/// Native corpus files at <root>/<listing_id>/corpus.jsonl.
class FixtureProvider final : public ReviewProvider {
 public:
  FixtureProvider(ProviderConfig config, std::filesystem::path root);
  const ProviderConfig& config() const override { return config_; }
  ProviderBatch fetch(const FetchRequest& request, Clock& clock) override;

 private:
  ProviderConfig config_;
  std::filesystem::path root_;
};

/// The four built-in providers over one fixture directory.
std::map<std::string, std::shared_ptr<ReviewProvider>> make_fixture_providers(const std::filesystem::path& fixtures_root);

// ---- fetching --------------------------------------------------------------------

struct RetryPolicy {
  int max_retries = 3;
  std::vector<Duration> backoff{std::chrono::seconds(1), std::chrono::seconds(2), std::chrono::seconds(4)};
};

struct FetchOptions {
  std::optional<std::filesystem::path> cache_dir;
  Duration cache_ttl = std::chrono::hours(24);
  RetryPolicy retry;
};

struct FetchOutcome {
  ReviewCorpus corpus;
  FetchMetrics metrics;
};

/// Sorts `reviews` in place by `sort`; ties fall back to the default order.
void sort_reviews(std::vector<Review>& reviews, ReviewSort sort);

/// Fetches, validates, sorts and truncates; writes `<listing_id>.corpus` into
/// the cache dir. Fetches of one listing are serialized.
class ReviewFetcher {
 public:
  ReviewFetcher(std::shared_ptr<Clock> clock, FetchOptions options = {});

  FetchOutcome fetch(const FetchRequest& request, ReviewProvider& provider);

  /// Fresh cached corpus for a listing, if any.
  std::optional<ReviewCorpus> cached(const std::string& listing_id) const;
  std::filesystem::path cache_path(const std::string& listing_id) const;

 private:
  std::mutex& listing_mutex(const std::string& listing_id);

  std::shared_ptr<Clock> clock_;
  FetchOptions options_;
  std::mutex locks_mutex_;
  std::map<std::string, std::unique_ptr<std::mutex>> listing_locks_;
};

/// One-shot helper without caching.
FetchOutcome fetch_reviews(const FetchRequest& request, ReviewProvider& provider, std::shared_ptr<Clock> clock);

struct FetchComparisonRow {
  std::string provider;
  std::size_t runs = 0;
  Duration mean_wall_time{0};
  Usd cost_per_1000;
  double reviews_per_second = 0.0;
};

/// One row per provider in first-seen order. Throws EmptyInput.
std::vector<FetchComparisonRow> record_fetch_comparison(const std::vector<FetchMetrics>& runs);

}  // namespace stayinsight
