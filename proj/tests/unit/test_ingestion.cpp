#include <gtest/gtest.h>

#include "stayinsight/error.hpp"
#include "stayinsight/ingestion.hpp"
#include "stayinsight/records.hpp"
#include "test_support.hpp"

using namespace stayinsight;
namespace ts = testsupport;
using std::chrono::seconds;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::Io;
}

FetchRequest bench_request(std::size_t k = 200, ReviewSort sort = ReviewSort::NewestFirst) {
  return FetchRequest{validate_listing_url(ts::kBenchUrl), k, sort};
}

std::vector<std::string> ids(const std::vector<Review>& rs) {
  std::vector<std::string> out;
  for (const auto& r : rs) out.push_back(r.review_id);
  return out;
}

/// Fails with NetworkFailure `failures` times, then delegates.
class FlakyProvider : public ReviewProvider {
 public:
  FlakyProvider(std::shared_ptr<ReviewProvider> inner, int failures) : inner_(std::move(inner)), left_(failures) {}
  const ProviderConfig& config() const override { return inner_->config(); }
  ProviderBatch fetch(const FetchRequest& r, Clock& clock) override {
    ++calls;
    call_times.push_back(clock.now());
    if (left_-- > 0) throw Error(ErrorCode::NetworkFailure, "connection reset", true);
    return inner_->fetch(r, clock);
  }
  int calls = 0;
  std::vector<TimePoint> call_times;

 private:
  std::shared_ptr<ReviewProvider> inner_;
  int left_;
};

class LoopingPages : public PageSource {
 public:
  static constexpr const char* kUrl = "https://www.booking.com/reviews/gr/hotel/aegean-breeze-suites.html?page=1";
  std::string first_page_url(const Listing&) const override { return kUrl; }
  std::optional<std::string> load(const Listing& l, const std::string&) override {
    ++loads;
    std::string page = ts::slurp(ts::fixtures_root() / l.listing_id / "pages" / "page-1.html");
    page.replace(page.find("?page=2"), 7, "?page=1");  // next link points back at itself
    return page;
  }
  int loads = 0;
};

}  // namespace

TEST(Parser, SnapshotsMatchGoldens) {
  const auto cases = ts::snapshot_cases();
  ASSERT_GE(cases.size(), 10u);
  for (const auto& c : cases) {
    const auto got = parse_reviews_page(ts::slurp(c.page), c.listing_id);
    const auto expect = ts::golden_reviews(c.golden);
    ASSERT_EQ(got.size(), expect.size()) << c.page;
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i], expect[i]) << c.page << " #" << i;
  }
}

TEST(Parser, EmptyListAndForeignPages) {
  EXPECT_TRUE(parse_reviews_page(ts::slurp(ts::pages_dir() / "empty-review-list.html"), "L").empty());
  EXPECT_EQ(code_of([] { parse_reviews_page(ts::slurp(ts::pages_dir() / "not-a-listing.html"), "L"); }),
            ErrorCode::LayoutNotRecognized);
  EXPECT_EQ(code_of([] { parse_reviews_page("", "L"); }), ErrorCode::LayoutNotRecognized);
  EXPECT_EQ(code_of([] {
              parse_reviews_page(R"(<ul class="review_list"><li class="review_list_new_item_block" data-review-url="x">
                                    <span class="c-review-block__date">Reviewed: 1 May 2024</span></li></ul>)",
                                 "L");
            }),
            ErrorCode::LayoutNotRecognized);
}

TEST(Parser, NextPageLinks) {
  const auto dir = ts::fixtures_root() / ts::kBenchId / "pages";
  EXPECT_EQ(find_next_page(ts::slurp(dir / "page-1.html")),
            "https://www.booking.com/reviews/gr/hotel/aegean-breeze-suites.html?page=2");
  EXPECT_FALSE(find_next_page(ts::slurp(dir / "page-8.html")).has_value());
}

TEST(Parser, RoundTripsThroughCorpusSerializer) {
  for (const auto& c : ts::snapshot_cases()) {
    const auto parsed = parse_reviews_page(ts::slurp(c.page), c.listing_id);
    const Listing l = c.listing_id == ts::kBenchId ? validate_listing_url(ts::kBenchUrl) : validate_listing_url(ts::kKalimeraUrl);
    const ReviewCorpus corpus = make_corpus(l, parsed, SimulatedClock::default_start(), "scraper");
    EXPECT_EQ(parse_corpus(serialize_corpus(corpus)).reviews, corpus.reviews) << c.page;
  }
}

TEST(Providers, AllFourAgreeOnTheFixtureListing) {
  auto providers = make_fixture_providers(ts::fixtures_root());
  auto clock = std::make_shared<SimulatedClock>();
  std::vector<std::string> first;
  for (const char* id : {"fixture", "scraper", "arel", "caprolok"}) {
    const FetchOutcome out = fetch_reviews(bench_request(), *providers.at(id), clock);
    EXPECT_EQ(out.corpus.reviews.size(), 200u) << id;
    EXPECT_EQ(out.metrics.provider, id);
    if (first.empty()) first = ids(out.corpus.reviews);
    EXPECT_EQ(ids(out.corpus.reviews), first) << id;
  }
  EXPECT_EQ(fetch_reviews(bench_request(), *providers.at("scraper"), clock).metrics.pages_fetched, 8u);
  EXPECT_EQ(fetch_reviews(bench_request(), *providers.at("arel"), clock).metrics.monetary_cost, Usd::parse("0.30"));
}

TEST(Providers, MaxReviewsTruncatesToMostRecent) {
  auto providers = make_fixture_providers(ts::fixtures_root());
  auto clock = std::make_shared<SimulatedClock>();
  const auto all = fetch_reviews(bench_request(), *providers.at("fixture"), clock).corpus.reviews;
  const auto fifty = fetch_reviews(bench_request(50), *providers.at("scraper"), clock);
  EXPECT_EQ(ids(fifty.corpus.reviews), ids({all.begin(), all.begin() + 50}));
  EXPECT_EQ(fifty.metrics.pages_fetched, 2u);
}

TEST(Providers, FetchIsPrefixStableAcrossK) {
  auto providers = make_fixture_providers(ts::fixtures_root());
  auto clock = std::make_shared<SimulatedClock>();
  for (const char* id : {"scraper", "arel", "fixture"}) {
    for (auto sort : {ReviewSort::NewestFirst, ReviewSort::ScoreDesc, ReviewSort::ScoreAsc}) {
      std::vector<std::string> prev;
      for (std::size_t k : {1, 2, 24, 25, 26, 77, 199, 200}) {
        const auto cur = ids(fetch_reviews(bench_request(k, sort), *providers.at(id), clock).corpus.reviews);
        ASSERT_EQ(cur.size(), k);
        ASSERT_TRUE(std::equal(prev.begin(), prev.end(), cur.begin())) << id << " " << to_string(sort) << " k=" << k;
        prev = cur;
      }
    }
  }
}

TEST(Providers, SortOrders) {
  auto providers = make_fixture_providers(ts::fixtures_root());
  const auto out = fetch_reviews(bench_request(200, ReviewSort::ScoreDesc), *providers.at("fixture"),
                                 std::make_shared<SimulatedClock>());
  for (std::size_t i = 1; i < out.corpus.reviews.size(); ++i) {
    ASSERT_GE(out.corpus.reviews[i - 1].score, out.corpus.reviews[i].score);
  }
  EXPECT_EQ(parse_review_sort("score_asc"), ReviewSort::ScoreAsc);
  EXPECT_THROW(parse_review_sort("random"), Error);
}

TEST(Providers, ErrorsAndQuota) {
  auto providers = make_fixture_providers(ts::fixtures_root());
  auto clock = std::make_shared<SimulatedClock>();
  const FetchRequest missing{validate_listing_url("https://www.booking.com/hotel/gr/nowhere.html")};
  for (const char* id : {"fixture", "scraper", "arel"}) {
    EXPECT_EQ(code_of([&] { fetch_reviews(missing, *providers.at(id), clock); }), ErrorCode::NoReviewsFound) << id;
  }
  ProviderConfig cfg = default_provider_configs()[0];
  cfg.quota_remaining = 250;
  RecordApiProvider limited(cfg, RecordSchema::Arel, RecordedResponses(ts::fixtures_root()));
  EXPECT_NO_THROW(fetch_reviews(bench_request(), limited, clock));
  EXPECT_EQ(code_of([&] { fetch_reviews(bench_request(), limited, clock); }), ErrorCode::ProviderQuotaExceeded);
  EXPECT_NO_THROW(fetch_reviews(bench_request(50), limited, clock));
  cfg.enabled = false;
  RecordApiProvider disabled(cfg, RecordSchema::Arel, RecordedResponses(ts::fixtures_root()));
  EXPECT_EQ(code_of([&] { fetch_reviews(bench_request(), disabled, clock); }), ErrorCode::ProviderDisabled);
}

TEST(Providers, LiveScrapingNeedsFlagAndAcknowledgment) {
  auto transport = std::shared_ptr<HttpTransport>();
  EXPECT_EQ(code_of([&] { LivePageSource(transport, false, kLiveScrapeAcknowledgment); }), ErrorCode::ProviderDisabled);
  EXPECT_EQ(code_of([&] { LivePageSource(transport, true, "yes"); }), ErrorCode::ProviderDisabled);
  EXPECT_NO_THROW(LivePageSource(transport, true, kLiveScrapeAcknowledgment));
}

TEST(Providers, ScraperStopsOnPaginationLoop) {
  auto pages = std::make_shared<LoopingPages>();
  ScraperProvider scraper(default_provider_configs()[2], pages);
  SimulatedClock clock;
  const auto batch = scraper.fetch(bench_request(), clock);
  EXPECT_EQ(batch.pages_fetched, 1u);
  EXPECT_EQ(pages->loads, 1);
}

TEST(Fetcher, RetriesNetworkFailuresWithBackoff) {
  auto providers = make_fixture_providers(ts::fixtures_root());
  auto clock = std::make_shared<SimulatedClock>();
  FlakyProvider flaky(providers.at("fixture"), 3);
  ReviewFetcher fetcher(clock);
  EXPECT_EQ(fetcher.fetch(bench_request(), flaky).corpus.reviews.size(), 200u);
  ASSERT_EQ(flaky.calls, 4);
  EXPECT_EQ(flaky.call_times[1] - flaky.call_times[0], seconds(1));
  EXPECT_EQ(flaky.call_times[2] - flaky.call_times[1], seconds(2));
  EXPECT_EQ(flaky.call_times[3] - flaky.call_times[2], seconds(4));

  FlakyProvider hopeless(providers.at("fixture"), 4);
  try {
    fetcher.fetch(bench_request(), hopeless);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NetworkFailure);
    EXPECT_TRUE(e.retriable());
  }
  EXPECT_EQ(hopeless.calls, 4);
}

TEST(Fetcher, CachesWithinTtl) {
  auto providers = make_fixture_providers(ts::fixtures_root());
  auto clock = std::make_shared<SimulatedClock>();
  const auto dir = ts::scratch_dir("cache");
  FetchOptions opt;
  opt.cache_dir = dir;
  ReviewFetcher fetcher(clock, opt);
  FlakyProvider counting(providers.at("arel"), 0);
  const auto first = fetcher.fetch(bench_request(), counting);
  EXPECT_FALSE(first.metrics.from_cache);
  EXPECT_TRUE(std::filesystem::exists(dir / (std::string(ts::kBenchId) + ".corpus")));
  clock->advance(std::chrono::hours(23));
  const auto second = fetcher.fetch(bench_request(100), counting);
  EXPECT_TRUE(second.metrics.from_cache);
  EXPECT_TRUE(second.metrics.monetary_cost.is_zero());
  EXPECT_EQ(second.corpus.reviews.size(), 100u);
  EXPECT_EQ(counting.calls, 1);
  clock->advance(std::chrono::hours(2));
  EXPECT_FALSE(fetcher.fetch(bench_request(), counting).metrics.from_cache);
  EXPECT_EQ(counting.calls, 2);
  std::filesystem::remove_all(dir);
}

TEST(FetchCost, ExactAndHomogeneous) {
  EXPECT_EQ(estimate_fetch_cost("arel", 1000), Usd::parse("1.50"));
  EXPECT_EQ(estimate_fetch_cost("caprolok", 1000), Usd::parse("1.00"));
  EXPECT_TRUE(estimate_fetch_cost("scraper", 1000).is_zero());
  EXPECT_EQ(estimate_fetch_cost("arel", 1), Usd::parse("0.0015"));
  for (std::size_t n : {0, 1, 7, 200, 333, 100000}) {
    for (const char* p : {"arel", "caprolok", "scraper"}) {
      EXPECT_EQ(estimate_fetch_cost(p, 2 * n), estimate_fetch_cost(p, n) + estimate_fetch_cost(p, n));
    }
  }
  EXPECT_EQ(code_of([] { estimate_fetch_cost("apify", 1); }), ErrorCode::UnknownProvider);
}

TEST(FetchComparison, AggregatesPerProvider) {
  std::vector<FetchMetrics> runs = {{"arel", 200, seconds(20), Usd::parse("0.30"), 1, false},
                                    {"scraper", 200, seconds(4), Usd{}, 8, false},
                                    {"arel", 200, seconds(30), Usd::parse("0.30"), 1, false}};
  const auto rows = record_fetch_comparison(runs);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].provider, "arel");
  EXPECT_EQ(rows[0].runs, 2u);
  EXPECT_EQ(rows[0].mean_wall_time, seconds(25));
  EXPECT_EQ(rows[0].cost_per_1000, Usd::parse("1.50"));
  EXPECT_DOUBLE_EQ(rows[0].reviews_per_second, 8.0);
  EXPECT_THROW(record_fetch_comparison({}), Error);
}
