#include <gtest/gtest.h>

#include <random>

#include "stayinsight/error.hpp"
#include "stayinsight/service.hpp"
#include "test_support.hpp"

using namespace stayinsight;
using nlohmann::json;
namespace ts = testsupport;

namespace {

std::function<std::optional<std::string>(const std::string&)> env_of(std::map<std::string, std::string> m) {
  return [m](const std::string& k) -> std::optional<std::string> {
    const auto it = m.find(k);
    if (it == m.end()) return std::nullopt;
    return it->second;
  };
}

ServiceConfig test_config(const std::filesystem::path& cache) {
  ServiceConfig c;
  c.cache_dir = cache;
  c.fixtures_dir = ts::fixtures_root();
  return c;
}

}  // namespace

TEST(Config, PrecedenceDefaultsFileEnvCli) {
  const auto dir = ts::scratch_dir("cfg");
  const auto file = dir / "cfg.json";
  std::ofstream(file) << R"({"port": 9000, "default_model": "gpt-4o", "default_language": "el", "cache_ttl_hours": 2})";
  const ServiceConfig c = load_service_config(
      file, env_of({{"STAYINSIGHT_PORT", "9100"}, {"STAYINSIGHT_DEFAULT_MODEL", "gpt-4o-mini"}}),
      json{{"port", 9200}});
  EXPECT_EQ(c.port, 9200);                        // CLI
  EXPECT_EQ(c.default_model, "gpt-4o-mini");      // env
  EXPECT_EQ(c.default_language, "el");            // file
  EXPECT_EQ(c.cache_ttl, std::chrono::hours(2));  // file
  EXPECT_EQ(c.host, "127.0.0.1");                 // default
  const ServiceConfig d = load_service_config(std::nullopt, env_of({}), json::object());
  EXPECT_EQ(d.port, 8080);
  EXPECT_EQ(d.default_model, "mock");
  EXPECT_FALSE(d.live_scrape);
  EXPECT_FALSE(d.live_llm);
  std::filesystem::remove_all(dir);
}

TEST(Config, RejectsBadValues) {
  ServiceConfig c;
  EXPECT_THROW(c.apply_json(json{{"prot", 1}}), Error);
  EXPECT_THROW(c.apply_json(json{{"port", "eighty"}}), Error);
  EXPECT_THROW(c.apply_env(env_of({{"STAYINSIGHT_PORT", "80a"}})), Error);
  EXPECT_THROW(c.apply_env(env_of({{"STAYINSIGHT_LIVE_LLM", "maybe"}})), Error);
  const ModelRegistry reg = ModelRegistry::seeded();
  ServiceConfig bad;
  bad.default_model = "gpt-9";
  EXPECT_THROW(bad.validate(reg), Error);
  bad = ServiceConfig{};
  bad.cache_ttl = Duration{0};
  EXPECT_THROW(bad.validate(reg), Error);
  bad = ServiceConfig{};
  bad.port = 70000;
  EXPECT_THROW(bad.validate(reg), Error);
}

TEST(Jobs, OnlyForwardTransitionsProperty) {
  const JobState all[] = {JobState::Pending, JobState::Fetching, JobState::Ready, JobState::Failed};
  auto rank = [](JobState s) { return s == JobState::Pending ? 0 : s == JobState::Fetching ? 1 : 2; };
  std::mt19937 rng(3);
  for (int round = 0; round < 500; ++round) {
    JobRecord job;
    job.job_id = "j";
    std::vector<JobState> history{JobState::Pending};
    for (int step = 0; step < 6; ++step) {
      const JobState next = all[rng() % 4];
      const JobState cur = job.state;
      // oracle: strictly increasing rank, and failed is reachable from any non-terminal state
      const bool allowed = rank(next) > rank(cur) && !(cur == JobState::Pending && next == JobState::Ready);
      EXPECT_EQ(is_forward_transition(cur, next), allowed);
      if (allowed) {
        job.advance(next, SimulatedClock::default_start());
        history.push_back(next);
      } else {
        EXPECT_THROW(job.advance(next, SimulatedClock::default_start()), Error);
        EXPECT_EQ(job.state, cur);
      }
    }
    EXPECT_LE(history.size(), 3u);
    EXPECT_EQ(JobRecord::from_json(job.to_json()).state, job.state);
  }
}

TEST(Jobs, StorePersistsAndFailsInterruptedJobs) {
  const auto dir = ts::scratch_dir("jobs");
  {
    JobStore store(dir);
    JobRecord a;
    a.job_id = "job-a";
    a.listing_id = "L";
    a.created_at = SimulatedClock::default_start();
    store.put(a);
    store.transition("job-a", JobState::Fetching, a.created_at);
    JobRecord b = a;
    b.job_id = "job-b";
    b.created_at += std::chrono::seconds(5);
    store.put(b);
    store.transition("job-b", JobState::Fetching, b.created_at);
    store.transition("job-b", JobState::Ready, b.created_at, [](JobRecord& r) { r.review_count = 9; });
    EXPECT_THROW(store.transition("job-b", JobState::Fetching, b.created_at), Error);
    EXPECT_EQ(store.latest_for_listing("L")->job_id, "job-b");
  }
  JobStore reopened(dir);
  EXPECT_EQ(reopened.size(), 2u);
  EXPECT_EQ(reopened.get("job-a")->state, JobState::Failed);
  EXPECT_TRUE(reopened.get("job-a")->error.has_value());
  EXPECT_EQ(reopened.get("job-b")->state, JobState::Ready);
  EXPECT_EQ(reopened.get("job-b")->review_count, 9u);
  EXPECT_FALSE(reopened.get("job-zzz").has_value());
  std::filesystem::remove_all(dir);
}

TEST(Service, SubmitIsIdempotentAndServesInsights) {
  const auto dir = ts::scratch_dir("svc");
  const ServiceConfig cfg = test_config(dir);
  auto clock = std::make_shared<SimulatedClock>();
  ReviewService svc(cfg, ReviewService::default_parts(cfg, clock));
  const SubmitResult first = svc.submit_listing(ts::kBenchUrl, std::nullopt);
  EXPECT_TRUE(first.created);
  svc.wait_idle();
  EXPECT_EQ(svc.job(first.job.job_id).state, JobState::Ready);
  EXPECT_EQ(svc.job(first.job.job_id).review_count, 200u);
  const SubmitResult again = svc.submit_listing(std::string(ts::kBenchUrl) + "?aid=1", std::nullopt);
  EXPECT_FALSE(again.created);
  EXPECT_EQ(again.job.job_id, first.job.job_id);

  const auto s1 = svc.summary(ts::kBenchId, std::nullopt, std::nullopt);
  const auto s2 = svc.summary(ts::kBenchId, std::nullopt, std::nullopt);
  EXPECT_EQ(svc.gateway().call_count(), 1u);
  EXPECT_TRUE(s2.cached);
  EXPECT_EQ(s1.model_id, "mock");
  const auto q = svc.query(ts::kBenchId, "Is parking free?", "el", "gpt-4o");
  EXPECT_EQ(q.language, "el");
  EXPECT_EQ(svc.gateway().call_count(), 2u);
  EXPECT_THROW(svc.query(ts::kBenchId, " ", std::nullopt, std::nullopt), Error);
  EXPECT_EQ(svc.models()["count"], 8);
  std::filesystem::remove_all(dir);
}

TEST(Service, ErrorsByState) {
  const auto dir = ts::scratch_dir("svc2");
  const ServiceConfig cfg = test_config(dir);
  ReviewService svc(cfg, ReviewService::default_parts(cfg, std::make_shared<SimulatedClock>()));
  auto code_of = [](const std::function<void()>& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  EXPECT_EQ(code_of([&] { svc.summary("ffffffffffffffff", std::nullopt, std::nullopt); }), ErrorCode::NotFound);
  EXPECT_EQ(code_of([&] { svc.job("job-nope"); }), ErrorCode::NotFound);
  EXPECT_EQ(code_of([&] { svc.submit_listing("https://example.com/x", std::nullopt); }), ErrorCode::UnsupportedHost);
  EXPECT_EQ(code_of([&] { svc.submit_listing(ts::kBenchUrl, "apify"); }), ErrorCode::UnknownProvider);
  const auto missing = svc.submit_listing("https://www.booking.com/hotel/gr/nowhere.html", std::nullopt);
  svc.wait_idle();
  const JobRecord failed = svc.job(missing.job.job_id);
  EXPECT_EQ(failed.state, JobState::Failed);
  EXPECT_EQ(failed.error_code, "NoReviewsFound");
  EXPECT_EQ(code_of([&] { svc.summary(failed.listing_id, std::nullopt, std::nullopt); }), ErrorCode::NotReady);
  std::filesystem::remove_all(dir);
}

TEST(Service, DisabledProviderAndLiveScrapeDefaults) {
  const auto dir = ts::scratch_dir("svc3");
  ServiceConfig cfg = test_config(dir);
  cfg.provider_enabled["arel"] = false;
  ReviewService svc(cfg, ReviewService::default_parts(cfg, std::make_shared<SimulatedClock>()));
  try {
    svc.submit_listing(ts::kBenchUrl, "arel");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ProviderDisabled);
  }
  ServiceConfig live = test_config(dir);
  live.live_scrape = true;  // without the acknowledgment string
  EXPECT_THROW(ReviewService::default_parts(live, std::make_shared<SimulatedClock>()), Error);
  std::filesystem::remove_all(dir);
}
