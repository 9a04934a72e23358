// stayinsight command-line front end: fetch, summarize, ask, bench, models, serve.
#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <iostream>

#include "stayinsight/bench.hpp"
#include "stayinsight/error.hpp"
#include "stayinsight/service.hpp"

using namespace stayinsight;
using nlohmann::json;

namespace {

int exit_code_for(ErrorCode code) {
  const int status = http_status_for(code);
  if (status == 400) return 2;
  if (status == 404 || status == 409) return 3;
  if (status >= 500 || status == 429) return 4;
  return 1;
}

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

std::string stamp(TimePoint t) {
  std::string s = format_timestamp(t);  // 2024-11-01T00:00:00Z
  std::string out;
  for (char c : s) {
    if (c != '-' && c != ':') out += c;
  }
  return out;
}

HttpService* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Review summaries and Q&A for short-rental listings"};
  app.require_subcommand(1);

  std::string config_file;
  std::string cache_dir;
  std::string fixtures_dir;
  bool as_json = false;
  app.add_option("--config", config_file, "JSON configuration file");
  app.add_option("--cache-dir", cache_dir, "Cache directory (corpora, jobs, audit logs)");
  app.add_option("--fixtures-dir", fixtures_dir, "Recorded pages and provider responses");
  app.add_flag("--json", as_json, "Print full JSON results");

  std::string url;
  std::string provider;
  std::string lang;
  std::string model;
  std::string question;

  auto* fetch = app.add_subcommand("fetch", "Fetch and cache the reviews of a listing");
  fetch->add_option("url", url, "Listing URL")->required();
  fetch->add_option("--provider", provider, "arel | caprolok | scraper | fixture");

  auto* summarize = app.add_subcommand("summarize", "Summarize a listing's reviews");
  summarize->add_option("url", url, "Listing URL")->required();
  summarize->add_option("--lang", lang, "Output language code");
  summarize->add_option("--model", model, "Model id");
  summarize->add_option("--provider", provider, "Review provider");

  auto* ask = app.add_subcommand("ask", "Answer a question from a listing's reviews");
  ask->add_option("url", url, "Listing URL")->required();
  ask->add_option("question", question, "Question text")->required();
  ask->add_option("--lang", lang, "Output language code");
  ask->add_option("--model", model, "Model id");
  ask->add_option("--provider", provider, "Review provider");

  bool live = false;
  int trials = 3;
  double scale = 1.0;
  std::string out_dir = "results";
  std::string format = "markdown";
  auto* bench = app.add_subcommand("bench", "Run the LLM and retrieval benchmarks");
  bench->add_flag("--live", live, "Call the real provider APIs (needs API keys)");
  bench->add_option("--trials", trials, "Trials per (model, role)")->check(CLI::PositiveNumber);
  bench->add_option("--scale", scale, "Multiplier for the injected mock delays")->check(CLI::PositiveNumber);
  bench->add_option("--out", out_dir, "Results directory");
  bench->add_option("--format", format, "markdown | csv");
  bench->add_option("--url", url, "Listing to bench on (defaults to the 200-review fixture)");

  app.add_subcommand("models", "List the model registry");

  std::string host;
  int port = -1;
  std::string static_dir;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");
  serve->add_option("--static-dir", static_dir, "Directory served at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    json overrides = json::object();
    if (!cache_dir.empty()) overrides["cache_dir"] = cache_dir;
    if (!fixtures_dir.empty()) overrides["fixtures_dir"] = fixtures_dir;
    if (!host.empty()) overrides["host"] = host;
    if (port >= 0) overrides["port"] = port;
    if (!static_dir.empty()) overrides["static_dir"] = static_dir;
    if (live) overrides["live_llm"] = true;
    const ServiceConfig config = load_service_config(
        config_file.empty() ? std::nullopt : std::optional<std::filesystem::path>(config_file), process_env, overrides);
    auto opt = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional<std::string>(s); };

    if (*bench) {
      const ReportFormat fmt = parse_report_format(format);
      const std::string ext = fmt == ReportFormat::Csv ? ".csv" : ".md";
      const Listing listing = validate_listing_url(url.empty() ? std::string(kBenchListingUrl) : url);
      auto providers = make_fixture_providers(config.fixtures_dir);
      auto sim = std::make_shared<SimulatedClock>();
      const ReviewCorpus corpus = fetch_reviews(FetchRequest{listing}, *providers.at("fixture"), sim).corpus;

      BenchPlan plan;
      plan.corpus = corpus;
      plan.model_ids = default_bench_models();
      plan.trials = trials;
      std::unique_ptr<InsightEngine> engine;
      if (live) {
        auto parts = ReviewService::default_parts(config, std::make_shared<SystemClock>());
        engine = std::make_unique<InsightEngine>(parts.gateway);
      } else {
        engine = make_mock_bench_engine(scale);
      }
      const BenchReport report = run_llm_bench(plan, *engine);

      providers.at("arel")->set_injected_delay(from_seconds(25.0 * scale));
      providers.at("caprolok")->set_injected_delay(from_seconds(35.0 * scale));
      providers.at("scraper")->set_injected_delay(from_seconds(5.0 * scale));
      const RetrievalBenchReport retrieval = run_retrieval_bench(
          {providers.at("arel"), providers.at("caprolok"), providers.at("scraper")}, FetchRequest{listing}, sim);

      std::filesystem::create_directories(out_dir);
      const std::string ts = stamp(SystemClock().now());
      const auto llm_path = std::filesystem::path(out_dir) / ("bench-llm-" + ts + ext);
      const auto retrieval_path = std::filesystem::path(out_dir) / ("bench-retrieval-" + ts + ext);
      write_file_atomic(llm_path, emit_report(report, fmt));
      write_file_atomic(retrieval_path, emit_retrieval_report(retrieval, fmt));
      print_json(json{{"llm_report", llm_path.string()}, {"retrieval_report", retrieval_path.string()}});
      return 0;
    }

    ReviewService service(config, ReviewService::default_parts(config, std::make_shared<SystemClock>()));

    if (*fetch) {
      const FetchOutcome out = service.fetch_now(url, opt(provider));
      const CorpusStats stats = corpus_stats(out.corpus);
      print_json(json{{"listing", listing_to_json(out.corpus.listing)},
                      {"provider", out.metrics.provider},
                      {"reviews", out.metrics.reviews_returned},
                      {"pages", out.metrics.pages_fetched},
                      {"wall_time_s", to_seconds(out.metrics.wall_time)},
                      {"cost_usd", out.metrics.monetary_cost.to_string()},
                      {"from_cache", out.metrics.from_cache},
                      {"mean_score", stats.mean_score ? json(*stats.mean_score) : json(nullptr)},
                      {"cache_file", (service.config().cache_dir / (out.corpus.listing.listing_id + ".corpus")).string()}});
      return 0;
    }
    if (*summarize || *ask) {
      const FetchOutcome out = service.fetch_now(url, opt(provider));
      const std::string& id = out.corpus.listing.listing_id;
      const InsightResult r = *summarize ? service.summary(id, opt(lang), opt(model))
                                         : service.query(id, question, opt(lang), opt(model));
      if (as_json) {
        print_json(r.to_json());
      } else {
        std::cout << r.text << '\n';
      }
      return 0;
    }
    if (app.got_subcommand("models")) {
      const json models = service.models();
      if (as_json) {
        print_json(models);
      } else {
        std::printf("%-20s %-22s %12s %12s %9s %9s %s\n", "model_id", "name", "in $/1M", "out $/1M", "prompt",
                    "complete", "available");
        for (const auto& m : models["models"]) {
          std::printf("%-20s %-22s %12s %12s %9lld %9lld %s\n", m["model_id"].get<std::string>().c_str(),
                      m["display_name"].get<std::string>().c_str(), m["input_cost_per_1m"].get<std::string>().c_str(),
                      m["output_cost_per_1m"].get<std::string>().c_str(), m["prompt_window"].get<long long>(),
                      m["completion_window"].get<long long>(), m["available"].get<bool>() ? "yes" : "no");
        }
      }
      return 0;
    }
    if (*serve) {
      auto http_log = std::make_shared<AuditLog>(service.config().http_log_path());
      HttpService server(service, http_log);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::fprintf(stderr, "listening on %s:%d\n", service.config().host.c_str(), service.config().port);
      server.run(service.config().host, service.config().port);
      g_server = nullptr;
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << error_body(e).dump() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << error_body(Error(ErrorCode::Io, e.what())).dump() << '\n';
    return 1;
  }
  return 0;
}
