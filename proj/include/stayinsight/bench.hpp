#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stayinsight/backends.hpp"
#include "stayinsight/ingestion.hpp"
#include "stayinsight/insight.hpp"

namespace stayinsight {

struct BenchPlan {
  ReviewCorpus corpus;
  std::vector<std::string> model_ids;
  int trials = 3;
  std::vector<TemplateRole> roles{TemplateRole::Summary, TemplateRole::Query};
  std::string question = "Is there free parking near the property?";
  std::string language = "en";
  /// One worker thread per model; needs the factory overload so each worker
  /// gets its own engine and simulated clock.
  bool parallel = false;
};

struct BenchRow {
  std::string model_id;
  std::string display_name;
  TemplateRole role = TemplateRole::Summary;
  int samples = 0;
  Duration mean_latency{0};
  Duration min_latency{0};
  Duration max_latency{0};
  std::uint64_t input_tokens = 0;   // per call
  std::uint64_t output_tokens = 0;  // per call
  Usd cost_per_call;
  Usd total_cost;  // sum of the gateway's per-call costs
  std::size_t reviews_used = 0;
  std::optional<ErrorCode> error;
  std::string error_message;

  bool ok() const { return !error.has_value(); }
};

struct BenchReport {
  std::string title = "LLM performance";
  std::string clock_note;  // "simulated" | "real"
  int trials = 0;
  std::string corpus_note;
  std::vector<BenchRow> rows;
};

/// Reference latencies (seconds) as (summary, query) per model. Ranges use
/// their midpoint; LLaMA sits just past the 60 s timeout.
std::map<std::string, std::pair<double, double>> default_mock_delays();
/// The benched models, fastest first, LLaMA last.
std::vector<std::string> default_bench_models();

/// The 200-review fixture listing used when a bench names no corpus.
inline constexpr std::string_view kBenchListingUrl = "https://www.booking.com/hotel/gr/aegean-breeze-suites.html";

/// Seeded registry, fresh simulated clock, mock backend for every provider
/// with the reference delays times `scale`.
std::unique_ptr<InsightEngine> make_mock_bench_engine(double scale = 1.0);

/// Installs per-(model, role) delays, multiplied by `scale`, on a mock.
void apply_mock_delays(MockBackend& mock, const std::map<std::string, std::pair<double, double>>& delays,
                       double scale = 1.0);

/// Times `trials` calls per (model, role) through the engine. Cell failures
/// are recorded in the row. Models are ordered by mean summary latency; ties
/// go to the cheaper summary, then model_id; failed models come last.
BenchReport run_llm_bench(const BenchPlan& plan, InsightEngine& engine);

using EngineFactory = std::function<std::unique_ptr<InsightEngine>()>;
BenchReport run_llm_bench(const BenchPlan& plan, const EngineFactory& factory);

enum class ReportFormat { Markdown, Csv };
ReportFormat parse_report_format(std::string_view text);

/// Deterministic rendering. Throws EmptyReport.
std::string emit_report(const BenchReport& report, ReportFormat format);

struct RetrievalBenchRow {
  std::string provider;
  std::string display_name;
  std::size_t reviews = 0;
  Duration wall_time{0};
  Usd cost_per_1000;
  MaintenanceClass maintenance = MaintenanceClass::None;
  std::optional<ErrorCode> error;
  std::string error_message;

  bool ok() const { return !error.has_value(); }
};

struct RetrievalBenchReport {
  std::size_t requested = 0;
  std::vector<RetrievalBenchRow> rows;
};

/// Times one uncached fetch per provider, in the given order. Throws EmptyInput.
RetrievalBenchReport run_retrieval_bench(const std::vector<std::shared_ptr<ReviewProvider>>& providers,
                                         const FetchRequest& request, std::shared_ptr<Clock> clock);

/// "Free" or "$1.50 per 1000 reviews".
std::string format_fetch_cost(Usd per_1000);

/// Criterion-by-provider table in the layout of the retrieval comparison.
std::string emit_retrieval_report(const RetrievalBenchReport& report, ReportFormat format);

}  // namespace stayinsight
