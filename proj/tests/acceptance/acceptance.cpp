// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Expected values are transcribed from the published tables or
// computed by the oracles in test_support.hpp.
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "stayinsight/bench.hpp"
#include "stayinsight/error.hpp"
#include "stayinsight/ingestion.hpp"
#include "stayinsight/insight.hpp"
#include "stayinsight/records.hpp"
#include "test_support.hpp"

using namespace stayinsight;
namespace ts = testsupport;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && out_.pass) {
      out_.pass = false;
      out_.detail = what;
    }
  }
  Outcome done(const std::string& summary) {
    if (out_.pass) out_.detail = summary;
    return out_;
  }
  bool failed() const { return !out_.pass; }

 private:
  Outcome out_;
};

// ---- 1 --------------------------------------------------------------------------

Outcome registry_fidelity() {
  struct Row {
    const char* id;
    const char* name;
    const char* released;
    const char* in;
    const char* out;
    std::size_t prompt;
    std::size_t completion;
    bool open;
  };
  // published model table ("128K" is 128,000; the 1M window is 1,048,576)
  const Row table[] = {
      {"gpt-4", "GPT-4", "2023-03", "30", "60", 8192, 8192, false},
      {"gpt-4o", "GPT-4o", "2024-05", "2.50", "10", 128000, 16384, false},
      {"gpt-4o-mini", "GPT-4o mini", "2024-07", "0.15", "0.60", 128000, 16384, false},
      {"o1-preview", "OpenAI o1-preview", "2024-09", "15", "60", 128000, 32768, false},
      {"o1-mini", "OpenAI o1-mini", "2024-09", "3", "12", 128000, 65536, false},
      {"claude-3.5-sonnet", "Claude 3.5 Sonnet", "2024-06", "3", "15", 200000, 8192, false},
      {"llama-3.2-3b", "LLaMA 3.2 3B", "2024-09", "0", "0", 128000, 2048, true},
      {"gemini-1.5-flash", "Gemini 1.5 Flash", "2024-05", "0", "0", 1048576, 8192, false},
  };
  Check c;
  const ModelRegistry reg = ModelRegistry::seeded();
  c.expect(reg.size() == 8, "registry has " + std::to_string(reg.size()) + " rows, expected 8");
  for (const auto& row : table) {
    ModelProfile p;
    try {
      p = reg.lookup(row.id);
    } catch (const Error& e) {
      c.expect(false, std::string(row.id) + ": " + e.what());
      continue;
    }
    c.expect(p.display_name == row.name, std::string(row.id) + " display name");
    c.expect(p.release_date == row.released, std::string(row.id) + " release date");
    c.expect(p.input_cost_per_1m == Usd::parse(row.in), std::string(row.id) + " input price");
    c.expect(p.output_cost_per_1m == Usd::parse(row.out), std::string(row.id) + " output price");
    c.expect(p.prompt_window == row.prompt, std::string(row.id) + " prompt window");
    c.expect(p.completion_window == row.completion, std::string(row.id) + " completion window");
    c.expect(p.open_source == row.open, std::string(row.id) + " open-source flag");
  }
  const auto g = reg.lookup("gpt-4");
  return c.done("8 rows exact; gpt-4 " + g.input_cost_per_1m.to_string() + "/" + g.output_cost_per_1m.to_string() +
                " USD per 1M, " + std::to_string(g.prompt_window) + "/" + std::to_string(g.completion_window));
}

// ---- 2 --------------------------------------------------------------------------

Outcome cost_arithmetic() {
  Check c;
  const ModelRegistry reg = ModelRegistry::seeded();
  const Usd big = estimate_cost(reg.lookup("gpt-4"), 1'000'000, 1'000'000);
  const Usd small = estimate_cost(reg.lookup("gpt-4o"), 13'000, 500);
  c.expect(big == Usd::parse("90.00"), "gpt-4 1M/1M = " + big.to_string());
  c.expect(small == Usd::parse("0.0375"), "gpt-4o 13000/500 = " + small.to_string());
  c.expect(Usd::parse("0.03") <= small && small <= Usd::parse("0.05"), "gpt-4o response outside [0.03, 0.05]");
  return c.done("gpt-4 1M/1M = " + big.to_string() + " USD; gpt-4o 13000/500 = " + small.to_string() +
                " USD (band 0.03..0.05)");
}

// ---- 3 --------------------------------------------------------------------------

Outcome context_ceiling() {
  Check c;
  const Listing listing = validate_listing_url(ts::kBenchUrl);
  const ReviewCorpus corpus = make_synthetic_corpus(listing, 200, 440, SimulatedClock::default_start());
  for (const auto& r : corpus.reviews) {
    if (ts::code_points(render_review_block(r)) != 440) {
      c.expect(false, "synthetic block of " + std::to_string(ts::code_points(render_review_block(r))) + " chars");
      break;
    }
  }
  const ModelProfile gpt4 = ModelRegistry::seeded().lookup("gpt-4");
  const RetrievalPlan plan =
      select_reviews_for_budget(corpus, TokenBudget::make(gpt4.prompt_window, 492), SelectionMode::Recency);
  // oracle: blocks of ceil(440 / 4) = 110 tokens in (8192 - 492) tokens
  const std::size_t expect = (8192 - 492) / 110;
  c.expect(expect == 70, "oracle arithmetic");
  c.expect(plan.selected.size() == expect, "selected " + std::to_string(plan.selected.size()));
  c.expect(plan.dropped_count == 130, "dropped " + std::to_string(plan.dropped_count));
  return c.done("gpt-4 window 8192, overhead 492: " + std::to_string(plan.selected.size()) + " of 200 reviews (" +
                std::to_string(plan.total_tokens) + " tokens)");
}

// ---- 4 --------------------------------------------------------------------------

Outcome retrieval_cost_table() {
  Check c;
  c.expect(estimate_fetch_cost("arel", 1000) == Usd::parse("1.50"), "arel per 1000");
  c.expect(estimate_fetch_cost("caprolok", 1000) == Usd::parse("1.00"), "caprolok per 1000");
  c.expect(estimate_fetch_cost("scraper", 1000).is_zero(), "scraper per 1000");

  auto providers = make_fixture_providers(ts::fixtures_root());
  providers.at("arel")->set_injected_delay(std::chrono::milliseconds(250));
  providers.at("caprolok")->set_injected_delay(std::chrono::milliseconds(350));
  providers.at("scraper")->set_injected_delay(std::chrono::milliseconds(50));
  const auto report = run_retrieval_bench({providers.at("arel"), providers.at("caprolok"), providers.at("scraper")},
                                          FetchRequest{validate_listing_url(ts::kBenchUrl)},
                                          std::make_shared<SystemClock>());
  std::map<std::string, double> secs;
  for (const auto& row : report.rows) {
    c.expect(row.ok(), row.provider + ": " + row.error_message);
    c.expect(row.reviews == 200, row.provider + " returned " + std::to_string(row.reviews));
    secs[row.provider] = to_seconds(row.wall_time);
  }
  // expected: scraper ~5 s < Arel ~25 s < Caprolok ~35 s
  c.expect(secs["scraper"] < secs["arel"] && secs["arel"] < secs["caprolok"], "ordering differs from the table");
  const std::string md = emit_retrieval_report(report, ReportFormat::Markdown);
  c.expect(md.find("| Cost | $1.50 per 1000 reviews | $1.00 per 1000 reviews | Free |") != std::string::npos,
           "cost row");
  char buf[160];
  std::snprintf(buf, sizeof buf, "$1.50/$1.00/Free per 1000; scraper %.3fs < arel %.3fs < caprolok %.3fs",
                secs["scraper"], secs["arel"], secs["caprolok"]);
  return c.done(buf);
}

// ---- 5 --------------------------------------------------------------------------

Outcome bm25_oracle() {
  Check c;
  std::mt19937 rng(20241101);
  double worst = 0.0;
  std::size_t compared = 0;
  for (int round = 0; round < 100 && !c.failed(); ++round) {
    const std::size_t vocab = 1 + rng() % 200;
    const std::size_t n = 1 + rng() % 50;
    std::vector<Review> reviews;
    std::vector<ts::OracleDoc> docs;
    std::set<std::string> used_ids;
    for (std::size_t i = 0; i < n; ++i) {
      std::string id;
      do {
        id = "r" + std::to_string(rng() % 100000);
      } while (!used_ids.insert(id).second);
      const int age = static_cast<int>(rng() % 4);  // coarse dates force ties
      std::vector<std::string> words;
      std::string text;
      for (std::size_t k = 0, len = 1 + rng() % 25; k < len; ++k) {
        words.push_back("t" + std::to_string(rng() % vocab));
        text += (k ? " " : "") + words.back();
      }
      Review r;
      r.review_id = id;
      r.listing_id = ts::kBenchId;
      r.published_at = date_of(SimulatedClock::default_start() - std::chrono::days(age));
      r.score = 7.0;
      r.positive_text = text;
      reviews.push_back(r);
      docs.push_back({id, age, words});
    }
    const ReviewCorpus corpus =
        make_corpus(validate_listing_url(ts::kBenchUrl), reviews, SimulatedClock::default_start(), "oracle");
    std::vector<std::string> query;
    std::string qtext;
    for (std::size_t k = 0, m = 1 + rng() % 5; k < m; ++k) {
      query.push_back("t" + std::to_string(rng() % (vocab + 3)));  // sometimes out of vocabulary
      qtext += (k ? " " : "") + query.back();
    }
    const auto got = rank_reviews_bm25(corpus, qtext);
    const auto expect = ts::bm25_oracle(docs, query);
    c.expect(got.size() == expect.size(), "result size");
    for (std::size_t i = 0; i < got.size() && !c.failed(); ++i) {
      c.expect(got[i].review_id == expect[i].id, "round " + std::to_string(round) + " rank " + std::to_string(i) +
                                                      ": " + got[i].review_id + " vs " + expect[i].id);
      const double d = std::abs(got[i].score - expect[i].score);
      worst = std::max(worst, d);
      c.expect(d <= 1e-9, "score difference " + std::to_string(d));
      ++compared;
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "100 corpora, %zu ranked reviews, identical order, max |diff| %.1e", compared, worst);
  return c.done(buf);
}

// ---- 6 --------------------------------------------------------------------------

Outcome rate_limiter_safety() {
  Check c;
  std::mt19937_64 rng(77);
  RateLimiter limiter(RateLimitPolicy{15, 1500, 1'000'000});
  std::vector<ts::GrantedEvent> granted;
  std::int64_t t = SimulatedClock::default_start().time_since_epoch().count();
  std::size_t too_large = 0;
  for (int i = 0; i < 10'000; ++i) {
    // bursts of back-to-back calls, pauses up to 20 s, now and then a gap of hours
    if (rng() % 200 == 0) {
      t += static_cast<std::int64_t>(rng() % 10'800'000'000'000ULL);
    } else if (rng() % 4 != 0) {
      t += static_cast<std::int64_t>(rng() % 20'000'000'000ULL);
    }
    const std::uint64_t tokens = (rng() % 500 == 0) ? 1'000'001 : 1 + rng() % 300'000;
    const auto d = limiter.acquire(tokens, TimePoint(Duration(t)));
    if (d.granted()) granted.push_back({t, tokens});
    if (d.status == PermitDecision::Status::TokenRequestTooLarge) {
      ++too_large;
      c.expect(tokens > 1'000'000, "small request reported too large");
    }
    if (d.status == PermitDecision::Status::RetryAfter) c.expect(d.retry_after.count() > 0, "zero retry_after");
  }
  const auto v = ts::scan_windows(granted, 15, 1500, 1'000'000);
  if (v) c.expect(false, v->dimension + " bound exceeded: " + std::to_string(v->observed));
  c.expect(!granted.empty(), "nothing granted");
  const double days = (granted.empty() ? 0.0 : static_cast<double>(granted.back().t_ns - granted.front().t_ns)) / 86400e9;
  char buf[160];
  std::snprintf(buf, sizeof buf, "10000 requests over %.1f days, %zu granted, %zu oversized; no window over 15 rpm / 1500 rpd / 1M tpm",
                days, granted.size(), too_large);
  return c.done(buf);
}

// ---- 7 --------------------------------------------------------------------------

Outcome end_to_end_determinism() {
  Check c;
  const std::vector<std::string> questions = {"Is parking free?", "Is the WiFi fast?", "zxqv blorft?"};
  std::vector<std::string> runs;
  for (int run = 0; run < 5; ++run) {
    auto clock = std::make_shared<SimulatedClock>();
    auto gw = std::make_shared<Gateway>(std::make_shared<ModelRegistry>(ModelRegistry::seeded()), clock);
    gw->set_default_backend(std::make_shared<MockBackend>());
    InsightEngine engine(gw);
    auto providers = make_fixture_providers(ts::fixtures_root());
    const ReviewCorpus corpus =
        fetch_reviews(FetchRequest{validate_listing_url(ts::kBenchUrl)}, *providers.at("scraper"), clock).corpus;
    std::string transcript;
    std::size_t before = gw->call_count();
    transcript += engine.summarize(corpus, {corpus.listing.listing_id, "en", "mock"}).to_json().dump() + "\n";
    c.expect(gw->call_count() - before == 1, "summarize made " + std::to_string(gw->call_count() - before) + " calls");
    for (const auto& q : questions) {
      before = gw->call_count();
      transcript += engine.answer_query(corpus, {corpus.listing.listing_id, q, "en", "mock"}).to_json().dump() + "\n";
      c.expect(gw->call_count() - before == 1, "query made " + std::to_string(gw->call_count() - before) + " calls");
    }
    before = gw->call_count();
    const auto again = engine.summarize(corpus, {corpus.listing.listing_id, "en", "mock"});
    c.expect(gw->call_count() == before, "cached summarize called the gateway");
    c.expect(again.cached, "second summarize not marked cached");
    runs.push_back(transcript);
  }
  for (std::size_t i = 1; i < runs.size(); ++i) c.expect(runs[i] == runs[0], "run " + std::to_string(i) + " differs");
  return c.done("5 runs byte-identical (" + std::to_string(runs[0].size()) +
                " bytes); 1 call per operation; cached summary 0 calls");
}

// ---- 8 --------------------------------------------------------------------------

Outcome parser_goldens() {
  Check c;
  std::size_t pages = 0;
  std::size_t reviews = 0;
  for (const auto& sc : ts::snapshot_cases()) {
    ++pages;
    const auto got = parse_reviews_page(ts::slurp(sc.page), sc.listing_id);
    const auto expect = ts::golden_reviews(sc.golden);
    c.expect(got.size() == expect.size(), sc.page.string() + ": " + std::to_string(got.size()) + " reviews");
    for (std::size_t i = 0; i < std::min(got.size(), expect.size()); ++i) {
      c.expect(got[i] == expect[i], sc.page.string() + " review " + std::to_string(i) + " differs");
    }
    reviews += got.size();
  }
  c.expect(pages >= 10, "only " + std::to_string(pages) + " snapshots");
  c.expect(parse_reviews_page(ts::slurp(ts::pages_dir() / "empty-review-list.html"), "x").empty(), "empty page");
  bool layout_error = false;
  try {
    parse_reviews_page(ts::slurp(ts::pages_dir() / "not-a-listing.html"), "x");
  } catch (const Error& e) {
    layout_error = e.code() == ErrorCode::LayoutNotRecognized;
  }
  c.expect(layout_error, "non-listing page did not raise LayoutNotRecognized");
  return c.done(std::to_string(pages) + " snapshots, " + std::to_string(reviews) +
                " reviews field-for-field; non-listing page -> LayoutNotRecognized");
}

// ---- 9 --------------------------------------------------------------------------

Outcome bench_report() {
  Check c;
  BenchPlan plan;
  plan.corpus = read_corpus_file(ts::fixtures_root() / ts::kBenchId / "corpus.jsonl");
  plan.model_ids = default_bench_models();
  plan.trials = 3;
  auto engine = make_mock_bench_engine();
  const BenchReport report = run_llm_bench(plan, *engine);

  // reference latencies, fastest first; the 3B model timed out and is listed last
  const std::vector<std::tuple<std::string, double, double>> reference = {
      {"gemini-1.5-flash", 3, 3},  {"gpt-4o-mini", 5, 4},        {"gpt-4o", 7.5, 7.5},
      {"o1-mini", 8.5, 8.5},       {"claude-3.5-sonnet", 10, 10}, {"gpt-4", 10, 8},
  };
  std::vector<std::string> order;
  std::map<std::pair<std::string, TemplateRole>, const BenchRow*> cells;
  for (const auto& row : report.rows) {
    if (row.role == TemplateRole::Summary) order.push_back(row.model_id);
    cells[{row.model_id, row.role}] = &row;
  }
  std::vector<std::string> expect_order;
  for (const auto& [id, s, q] : reference) expect_order.push_back(id);
  expect_order.push_back("llama-3.2-3b");
  c.expect(order == expect_order, "row order differs from the table");
  for (const auto& [id, s, q] : reference) {
    const BenchRow* srow = cells[{id, TemplateRole::Summary}];
    const BenchRow* qrow = cells[{id, TemplateRole::Query}];
    c.expect(srow && srow->ok() && to_seconds(srow->mean_latency) == s, id + " summary latency");
    c.expect(qrow && qrow->ok() && to_seconds(qrow->mean_latency) == q, id + " query latency");
  }
  const BenchRow* llama = cells[{"llama-3.2-3b", TemplateRole::Summary}];
  c.expect(llama && llama->error == ErrorCode::Timeout, "llama row is not a timeout");

  const std::string md = emit_report(report, ReportFormat::Markdown);
  const std::string golden = ts::slurp(ts::golden_dir() / "bench-llm.md");
  c.expect(md == golden, "markdown differs from tests/golden/bench-llm.md");
  return c.done("7 models in table order (gemini .. gpt-4, llama timeout last); markdown matches golden");
}

// ---- 10 -------------------------------------------------------------------------

Outcome insufficient_evidence() {
  Check c;
  auto clock = std::make_shared<SimulatedClock>();
  auto gw = std::make_shared<Gateway>(std::make_shared<ModelRegistry>(ModelRegistry::seeded()), clock);
  gw->set_default_backend(std::make_shared<MockBackend>());
  InsightEngine engine(gw);
  const ReviewCorpus corpus = read_corpus_file(ts::fixtures_root() / ts::kBenchId / "corpus.jsonl");
  const auto nonsense = engine.answer_query(corpus, {ts::kBenchId, "Do they rent zxqv blorft gear?", "en", "mock"});
  c.expect(nonsense.insufficient_evidence, "out-of-vocabulary question not flagged");
  c.expect(nonsense.text.rfind(kInsufficientEvidenceNotice, 0) == 0, "notice missing");
  const auto parking = engine.answer_query(corpus, {ts::kBenchId, "Is parking free?", "en", "mock"});
  c.expect(!parking.insufficient_evidence, "parking question flagged");
  c.expect(parking.text.find(kInsufficientEvidenceNotice) == std::string::npos, "notice on grounded answer");
  return c.done("nonsense -> flagged with notice; parking -> grounded (" + std::to_string(parking.reviews_used) +
                " reviews)");
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"registry fidelity", 1, registry_fidelity},
      {"cost arithmetic", 1, cost_arithmetic},
      {"70-review context ceiling", 1, context_ceiling},
      {"retrieval cost table", 5, retrieval_cost_table},
      {"bm25 oracle equivalence", 30, bm25_oracle},
      {"rate-limiter safety", 30, rate_limiter_safety},
      {"end-to-end determinism", 5, end_to_end_determinism},
      {"parser golden", 5, parser_goldens},
      {"bench report pipeline", 10, bench_report},
      {"insufficient evidence", 5, insufficient_evidence},
  };
  int failures = 0;
  int index = 0;
  for (const auto& crit : criteria) {
    ++index;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = crit.run();
    } catch (const std::exception& e) {
      o = Outcome{false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.pass && secs > crit.budget_s) {
      o.pass = false;
      o.detail += " (took longer than the runtime budget)";
    }
    if (!o.pass) ++failures;
    std::printf("%s [%2d] %-28s %6.3fs  %s\n", o.pass ? "PASS" : "FAIL", index, crit.name, secs, o.detail.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
