#include "stayinsight/ingestion.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <limits>

#include "stayinsight/error.hpp"
#include "stayinsight/html.hpp"
#include "stayinsight/text.hpp"

namespace stayinsight {

using nlohmann::json;

std::string_view to_string(ReviewSort s) noexcept {
  switch (s) {
    case ReviewSort::NewestFirst: return "newest_first";
    case ReviewSort::ScoreDesc: return "score_desc";
    case ReviewSort::ScoreAsc: return "score_asc";
  }
  return "newest_first";
}

ReviewSort parse_review_sort(std::string_view text) {
  if (text == "newest_first") return ReviewSort::NewestFirst;
  if (text == "score_desc") return ReviewSort::ScoreDesc;
  if (text == "score_asc") return ReviewSort::ScoreAsc;
  throw Error(ErrorCode::InvalidArgument, "unknown sort '" + std::string(text) + "'");
}

std::string_view to_string(MaintenanceClass m) noexcept {
  switch (m) {
    case MaintenanceClass::None: return "None (SaaS-managed)";
    case MaintenanceClass::Low: return "Low";
    case MaintenanceClass::High: return "High (manual updates needed)";
  }
  return "None";
}

std::vector<ProviderConfig> default_provider_configs() {
  std::vector<ProviderConfig> out;
  out.push_back({"arel", "Arel Venture API", Usd::parse("1.50"), "APIFY_TOKEN", true, MaintenanceClass::None, 10.0,
                 std::nullopt});
  out.push_back({"caprolok", "Caprolok API", Usd::parse("1.00"), "APIFY_TOKEN", true, MaintenanceClass::None, 10.0,
                 std::nullopt});
  out.push_back({"scraper", "Web Scraping", Usd{}, "", true, MaintenanceClass::High, 10.0, std::nullopt});
  out.push_back({"fixture", "Fixture corpus", Usd{}, "", true, MaintenanceClass::None, 10.0, std::nullopt});
  return out;
}

Usd estimate_fetch_cost(const ProviderConfig& config, std::size_t n_reviews) {
  return config.cost_per_1000_reviews.scaled(static_cast<std::int64_t>(n_reviews), 1000);
}

Usd estimate_fetch_cost(std::string_view provider_id, std::size_t n_reviews) {
  for (const auto& c : default_provider_configs()) {
    if (c.provider_id == provider_id) return estimate_fetch_cost(c, n_reviews);
  }
  throw Error(ErrorCode::UnknownProvider, "unknown provider '" + std::string(provider_id) + "'");
}

// ---- page parsing -------------------------------------------------------------

namespace {

std::optional<std::string> text_of(const html::Node& scope, const std::string& selector) {
  const html::Node* n = html::select_first(scope, selector);
  if (n == nullptr) return std::nullopt;
  std::string t(text::trim(n->text_content()));
  if (t.empty()) return std::nullopt;
  return t;
}

std::optional<long long> first_integer(std::string_view s) {
  const auto start = std::find_if(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
  if (start == s.end()) return std::nullopt;
  long long v = 0;
  std::from_chars(&*start, s.data() + s.size(), v);
  return v;
}

double parse_score_text(std::string_view raw, const std::string& review_id) {
  std::string s;
  bool seen_digit = false;
  for (char c : raw) {
    if (std::isdigit(static_cast<unsigned char>(c))) {
      s += c;
      seen_digit = true;
    } else if ((c == '.' || c == ',') && seen_digit) {
      s += '.';
    } else if (seen_digit) {
      break;
    }
  }
  if (s.empty()) throw Error(ErrorCode::LayoutNotRecognized, "review '" + review_id + "' has no readable score");
  return std::strtod(s.c_str(), nullptr);
}

// "Reviewed: 3 May 2024"
Date parse_review_date(std::string_view raw, const std::string& review_id) {
  static constexpr std::array<std::string_view, 12> months = {"january", "february", "march",     "april",
                                                              "may",     "june",     "july",      "august",
                                                              "september", "october", "november", "december"};
  const auto words = text::word_tokens(raw);
  std::optional<unsigned> day;
  std::optional<unsigned> month;
  std::optional<int> year;
  for (const auto& w : words) {
    if (std::all_of(w.begin(), w.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      const int v = std::atoi(w.c_str());
      if (!day && w.size() <= 2) {
        day = static_cast<unsigned>(v);
      } else if (w.size() == 4) {
        year = v;
      }
      continue;
    }
    for (std::size_t m = 0; m < months.size(); ++m) {
      if (w == months[m] || (w.size() >= 3 && months[m].substr(0, w.size()) == w)) month = static_cast<unsigned>(m + 1);
    }
  }
  if (!day || !month || !year) {
    throw Error(ErrorCode::LayoutNotRecognized, "review '" + review_id + "' has unreadable date '" + std::string(raw) + "'");
  }
  const Date d{std::chrono::year(*year), std::chrono::month(*month), std::chrono::day(*day)};
  if (!d.ok()) throw Error(ErrorCode::LayoutNotRecognized, "review '" + review_id + "' has invalid date");
  return d;
}

// ".../flags/24/gr.png" -> "GR"
std::optional<std::string> country_from_flag(std::string_view src) {
  const auto slash = src.rfind('/');
  std::string_view file = slash == std::string_view::npos ? src : src.substr(slash + 1);
  file = file.substr(0, file.find('.'));
  if (file.size() != 2 || !std::isalpha(static_cast<unsigned char>(file[0])) ||
      !std::isalpha(static_cast<unsigned char>(file[1]))) {
    return std::nullopt;
  }
  std::string code(file);
  for (auto& c : code) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return code;
}

Review parse_block(const html::Node& block, const std::string& listing_id, const ReviewPageLayout& layout) {
  Review r;
  r.listing_id = listing_id;
  r.review_id = std::string(text::trim(block.attr(layout.review_id_attr).value_or("")));
  if (r.review_id.empty()) throw Error(ErrorCode::LayoutNotRecognized, "review block without an id");

  const auto score = text_of(block, layout.score);
  if (!score) throw Error(ErrorCode::LayoutNotRecognized, "review '" + r.review_id + "' has no score badge");
  r.score = parse_score_text(*score, r.review_id);
  const auto date = text_of(block, layout.date);
  if (!date) throw Error(ErrorCode::LayoutNotRecognized, "review '" + r.review_id + "' has no date");
  r.published_at = parse_review_date(*date, r.review_id);

  r.title = text_of(block, layout.title);
  for (const html::Node* row : html::select(block, layout.review_row)) {
    const auto body = text_of(*row, layout.row_body);
    if (!body) continue;
    const bool positive = !html::select(*row, "." + layout.positive_marker).empty();
    auto& slot = positive ? r.positive_text : r.negative_text;
    if (!slot) slot = body;
  }
  r.manager_reply = text_of(block, layout.reply);
  r.reviewer.username = text_of(block, layout.username);
  if (const html::Node* flag = html::select_first(block, layout.flag)) {
    r.reviewer.country = country_from_flag(flag->attr("src").value_or(""));
  }
  if (const auto type = text_of(block, layout.traveller_type)) r.reviewer.reviewer_type = parse_reviewer_type(*type);
  if (const auto helpful = text_of(block, layout.helpful)) r.likes = first_integer(*helpful).value_or(0);
  for (const html::Node* img : html::select(block, layout.photo)) {
    if (const auto src = img->attr("src"); src && !src->empty()) r.photo_urls.emplace_back(*src);
  }
  if (const auto lang = block.attr("lang"); lang && !text::trim(*lang).empty()) {
    r.language_hint = std::string(text::trim(*lang));
  }
  return r;
}

}  // namespace

std::vector<Review> parse_reviews_page(std::string_view html_text, const std::string& listing_id,
                                       const ReviewPageLayout& layout) {
  const html::Document doc = html::Document::parse(html_text);
  const html::Node* container = html::select_first(doc.root(), layout.container);
  if (container == nullptr) {
    throw Error(ErrorCode::LayoutNotRecognized, "no review container '" + layout.container + "' on page");
  }
  std::vector<Review> out;
  for (const html::Node* block : html::select(*container, layout.block)) out.push_back(parse_block(*block, listing_id, layout));
  return out;
}

std::optional<std::string> find_next_page(std::string_view html_text, const ReviewPageLayout& layout) {
  const html::Document doc = html::Document::parse(html_text);
  const html::Node* link = html::select_first(doc.root(), layout.next_page);
  if (link == nullptr) return std::nullopt;
  const auto href = link->attr("href");
  if (!href || text::trim(*href).empty()) return std::nullopt;
  return std::string(text::trim(*href));
}

// ---- page sources ----------------------------------------------------------------

namespace {

int page_number(std::string_view url) {
  const auto at = url.find("page=");
  if (at == std::string_view::npos) return 1;
  return static_cast<int>(first_integer(url.substr(at + 5)).value_or(1));
}

std::string reviews_url(const Listing& listing) {
  // https://www.booking.com/hotel/gr/x.html -> https://www.booking.com/reviews/gr/hotel/x.html
  const std::string marker = "/hotel/";
  const auto at = listing.url.find(marker);
  if (at == std::string::npos) return listing.url + "?page=1";
  const auto cc_end = listing.url.find('/', at + marker.size());
  if (cc_end == std::string::npos) return listing.url + "?page=1";
  const std::string cc = listing.url.substr(at + marker.size(), cc_end - at - marker.size());
  return listing.url.substr(0, at) + "/reviews/" + cc + "/hotel/" + listing.url.substr(cc_end + 1) + "?page=1";
}

}  // namespace

SnapshotPageSource::SnapshotPageSource(std::filesystem::path root) : root_(std::move(root)) {}

std::string SnapshotPageSource::first_page_url(const Listing& listing) const { return reviews_url(listing); }

std::optional<std::string> SnapshotPageSource::load(const Listing& listing, const std::string& url) {
  const auto path = root_ / listing.listing_id / "pages" / ("page-" + std::to_string(page_number(url)) + ".html");
  if (!std::filesystem::exists(path)) return std::nullopt;
  return read_file(path);
}

LivePageSource::LivePageSource(std::shared_ptr<HttpTransport> transport, bool enabled, std::string_view acknowledgment)
    : transport_(std::move(transport)) {
  if (!enabled || acknowledgment != kLiveScrapeAcknowledgment) {
    throw Error(ErrorCode::ProviderDisabled,
                "live scraping is disabled; enable it and set the acknowledgment string to use it");
  }
}

std::string LivePageSource::first_page_url(const Listing& listing) const { return reviews_url(listing); }

std::optional<std::string> LivePageSource::load(const Listing&, const std::string& url) {
  const HttpReply reply = transport_->get(url, std::chrono::seconds(30));
  if (reply.status == 404) return std::nullopt;
  if (reply.status != 200) {
    throw Error(ErrorCode::NetworkFailure, "page fetch returned HTTP " + std::to_string(reply.status), true);
  }
  return reply.body;
}

// ---- providers -------------------------------------------------------------------

ScraperProvider::ScraperProvider(ProviderConfig config, std::shared_ptr<PageSource> pages, ReviewPageLayout layout)
    : config_(std::move(config)), pages_(std::move(pages)), layout_(std::move(layout)) {}

ProviderBatch ScraperProvider::fetch(const FetchRequest& request, Clock& clock) {
  if (injected_delay().count() > 0) clock.sleep_for(injected_delay());
  ProviderBatch batch;
  std::string url = pages_->first_page_url(request.listing);
  std::vector<std::string> visited;
  while (batch.reviews.size() < request.max_reviews) {
    if (std::find(visited.begin(), visited.end(), url) != visited.end()) break;  // pagination loop
    visited.push_back(url);
    const auto page = pages_->load(request.listing, url);
    if (!page) {
      if (batch.pages_fetched == 0) throw Error(ErrorCode::NoReviewsFound, "no review pages for listing");
      break;
    }
    ++batch.pages_fetched;
    auto reviews = parse_reviews_page(*page, request.listing.listing_id, layout_);
    for (auto& r : reviews) batch.reviews.push_back(std::move(r));
    const auto next = find_next_page(*page, layout_);
    if (!next) break;
    url = *next;
  }
  return batch;
}

std::optional<std::string> RecordedResponses::load(const std::string& listing_id, const std::string& provider_id) const {
  const auto path = root_ / listing_id / (provider_id + ".json");
  if (!std::filesystem::exists(path)) return std::nullopt;
  return read_file(path);
}

RecordApiProvider::RecordApiProvider(ProviderConfig config, RecordSchema schema, RecordedResponses responses)
    : config_(std::move(config)), schema_(schema), responses_(std::move(responses)) {}

ProviderBatch RecordApiProvider::fetch(const FetchRequest& request, Clock& clock) {
  if (injected_delay().count() > 0) clock.sleep_for(injected_delay());
  const auto body = responses_.load(request.listing.listing_id, config_.provider_id);
  if (!body) throw Error(ErrorCode::NoReviewsFound, "no " + config_.provider_id + " response for listing");
  json doc;
  try {
    doc = json::parse(*body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, config_.provider_id + " response is not JSON: " + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorCode::SchemaMismatch, config_.provider_id + " response must be an array");

  const std::size_t n = std::min(doc.size(), request.max_reviews);
  {
    std::lock_guard lock(quota_mutex_);
    if (config_.quota_remaining) {
      if (*config_.quota_remaining < n) {
        throw Error(ErrorCode::ProviderQuotaExceeded, config_.provider_id + " quota allows " +
                                                          std::to_string(*config_.quota_remaining) + " more reviews");
      }
      *config_.quota_remaining -= n;
    }
  }
  const NormalizeOptions opts{request.listing.listing_id, date_of(clock.now()), config_.score_scale_max};
  ProviderBatch batch;
  batch.pages_fetched = 1;
  for (std::size_t i = 0; i < n; ++i) batch.reviews.push_back(normalize_review(doc[i], schema_, opts));
  return batch;
}

FixtureProvider::FixtureProvider(ProviderConfig config, std::filesystem::path root)
    : config_(std::move(config)), root_(std::move(root)) {}

ProviderBatch FixtureProvider::fetch(const FetchRequest& request, Clock& clock) {
  if (injected_delay().count() > 0) clock.sleep_for(injected_delay());
  const auto path = root_ / request.listing.listing_id / "corpus.jsonl";
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::NoReviewsFound, "no fixture corpus for listing");
  ReviewCorpus corpus = read_corpus_file(path);
  return ProviderBatch{std::move(corpus.reviews), 1};
}

std::map<std::string, std::shared_ptr<ReviewProvider>> make_fixture_providers(const std::filesystem::path& root) {
  std::map<std::string, std::shared_ptr<ReviewProvider>> out;
  for (const auto& cfg : default_provider_configs()) {
    if (cfg.provider_id == "arel") {
      out[cfg.provider_id] = std::make_shared<RecordApiProvider>(cfg, RecordSchema::Arel, RecordedResponses(root));
    } else if (cfg.provider_id == "caprolok") {
      out[cfg.provider_id] = std::make_shared<RecordApiProvider>(cfg, RecordSchema::Caprolok, RecordedResponses(root));
    } else if (cfg.provider_id == "scraper") {
      out[cfg.provider_id] = std::make_shared<ScraperProvider>(cfg, std::make_shared<SnapshotPageSource>(root));
    } else {
      out[cfg.provider_id] = std::make_shared<FixtureProvider>(cfg, root);
    }
  }
  return out;
}

// ---- fetcher ---------------------------------------------------------------------

void sort_reviews(std::vector<Review>& reviews, ReviewSort sort) {
  switch (sort) {
    case ReviewSort::NewestFirst:
      std::sort(reviews.begin(), reviews.end(), default_order_less);
      break;
    case ReviewSort::ScoreDesc:
      std::sort(reviews.begin(), reviews.end(), [](const Review& a, const Review& b) {
        if (a.score != b.score) return a.score > b.score;
        return default_order_less(a, b);
      });
      break;
    case ReviewSort::ScoreAsc:
      std::sort(reviews.begin(), reviews.end(), [](const Review& a, const Review& b) {
        if (a.score != b.score) return a.score < b.score;
        return default_order_less(a, b);
      });
      break;
  }
}

ReviewFetcher::ReviewFetcher(std::shared_ptr<Clock> clock, FetchOptions options)
    : clock_(std::move(clock)), options_(std::move(options)) {
  if (!clock_) throw Error(ErrorCode::InvalidArgument, "fetcher needs a clock");
  if (options_.cache_ttl <= Duration::zero()) throw Error(ErrorCode::InvalidArgument, "cache TTL must be positive");
}

std::mutex& ReviewFetcher::listing_mutex(const std::string& listing_id) {
  std::lock_guard lock(locks_mutex_);
  auto& slot = listing_locks_[listing_id];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

std::filesystem::path ReviewFetcher::cache_path(const std::string& listing_id) const {
  if (!options_.cache_dir) throw Error(ErrorCode::InvalidArgument, "no cache directory configured");
  return *options_.cache_dir / (listing_id + ".corpus");
}

std::optional<ReviewCorpus> ReviewFetcher::cached(const std::string& listing_id) const {
  if (!options_.cache_dir) return std::nullopt;
  const auto path = cache_path(listing_id);
  if (!std::filesystem::exists(path)) return std::nullopt;
  ReviewCorpus corpus;
  try {
    corpus = read_corpus_file(path);
  } catch (const Error&) {
    return std::nullopt;  // unreadable cache entry, refetch
  }
  if (clock_->now() - corpus.fetched_at >= options_.cache_ttl) return std::nullopt;
  return corpus;
}

FetchOutcome ReviewFetcher::fetch(const FetchRequest& request, ReviewProvider& provider) {
  const ProviderConfig& cfg = provider.config();
  if (!cfg.enabled) throw Error(ErrorCode::ProviderDisabled, "provider '" + cfg.provider_id + "' is disabled");
  if (request.max_reviews < 1) throw Error(ErrorCode::InvalidArgument, "max_reviews must be at least 1");

  std::lock_guard listing_lock(listing_mutex(request.listing.listing_id));
  const TimePoint start = clock_->now();

  // A cached corpus may be a newest-first prefix, so score orders skip it.
  const bool cache_usable = request.sort == ReviewSort::NewestFirst;
  if (auto hit = cache_usable ? cached(request.listing.listing_id) : std::nullopt;
      hit && hit->source == cfg.provider_id && hit->reviews.size() >= request.max_reviews) {
    sort_reviews(hit->reviews, request.sort);
    hit->reviews.resize(request.max_reviews);
    FetchMetrics m{cfg.provider_id, hit->reviews.size(), Duration{0}, Usd{}, 0, true};
    return FetchOutcome{std::move(*hit), m};
  }

  // Score orders need the whole listing; only newest-first can stop early.
  FetchRequest upstream = request;
  if (request.sort != ReviewSort::NewestFirst) upstream.max_reviews = std::numeric_limits<std::size_t>::max();

  ProviderBatch batch;
  for (int attempt = 0;; ++attempt) {
    try {
      batch = provider.fetch(upstream, *clock_);
      break;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NetworkFailure || attempt >= options_.retry.max_retries) throw;
      const auto& backoff = options_.retry.backoff;
      const Duration wait =
          backoff.empty() ? Duration{0} : backoff[std::min<std::size_t>(attempt, backoff.size() - 1)];
      clock_->sleep_for(wait);
    }
  }

  const Date today = date_of(clock_->now());
  for (const auto& r : batch.reviews) validate_review(r, today);
  if (batch.reviews.empty()) throw Error(ErrorCode::NoReviewsFound, "provider returned no reviews");
  const std::size_t fetched = batch.reviews.size();
  ReviewCorpus corpus = make_corpus(request.listing, std::move(batch.reviews), clock_->now(), cfg.provider_id);
  const ReviewCorpus full = corpus;  // default order, untruncated
  sort_reviews(corpus.reviews, request.sort);
  if (corpus.reviews.size() > request.max_reviews) corpus.reviews.resize(request.max_reviews);

  FetchMetrics metrics;
  metrics.provider = cfg.provider_id;
  metrics.reviews_returned = corpus.reviews.size();
  metrics.wall_time = clock_->now() - start;
  metrics.monetary_cost = estimate_fetch_cost(cfg, fetched);
  metrics.pages_fetched = batch.pages_fetched;

  if (options_.cache_dir) write_corpus_file(cache_path(request.listing.listing_id), full);
  return FetchOutcome{std::move(corpus), metrics};
}

FetchOutcome fetch_reviews(const FetchRequest& request, ReviewProvider& provider, std::shared_ptr<Clock> clock) {
  ReviewFetcher fetcher(std::move(clock));
  return fetcher.fetch(request, provider);
}

std::vector<FetchComparisonRow> record_fetch_comparison(const std::vector<FetchMetrics>& runs) {
  if (runs.empty()) throw Error(ErrorCode::EmptyInput, "no fetch runs to compare");
  struct Acc {
    std::size_t runs = 0;
    Duration total{0};
    std::size_t reviews = 0;
    Usd cost;
  };
  std::vector<std::string> order;
  std::map<std::string, Acc> acc;
  for (const auto& m : runs) {
    if (!acc.count(m.provider)) order.push_back(m.provider);
    auto& a = acc[m.provider];
    ++a.runs;
    a.total += m.wall_time;
    a.reviews += m.reviews_returned;
    a.cost += m.monetary_cost;
  }
  std::vector<FetchComparisonRow> rows;
  for (const auto& p : order) {
    const Acc& a = acc[p];
    FetchComparisonRow row;
    row.provider = p;
    row.runs = a.runs;
    row.mean_wall_time = a.total / static_cast<Duration::rep>(a.runs);
    row.cost_per_1000 = a.reviews == 0 ? Usd{} : a.cost.scaled_rounded(1000, static_cast<std::int64_t>(a.reviews));
    const double seconds = to_seconds(a.total);
    row.reviews_per_second = seconds > 0.0 ? static_cast<double>(a.reviews) / seconds : 0.0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace stayinsight
