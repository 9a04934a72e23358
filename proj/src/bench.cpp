#include "stayinsight/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <thread>

#include "stayinsight/error.hpp"

namespace stayinsight {

std::map<std::string, std::pair<double, double>> default_mock_delays() {
  return {
      {"gemini-1.5-flash", {3.0, 3.0}},   {"gpt-4o-mini", {5.0, 4.0}},        {"gpt-4o", {7.5, 7.5}},
      {"o1-mini", {8.5, 8.5}},            {"claude-3.5-sonnet", {10.0, 10.0}}, {"gpt-4", {10.0, 8.0}},
      {"llama-3.2-3b", {61.0, 61.0}},
  };
}

std::vector<std::string> default_bench_models() {
  return {"gemini-1.5-flash", "gpt-4o-mini", "gpt-4o", "o1-mini", "claude-3.5-sonnet", "gpt-4", "llama-3.2-3b"};
}

void apply_mock_delays(MockBackend& mock, const std::map<std::string, std::pair<double, double>>& delays, double scale) {
  for (const auto& [model, d] : delays) {
    mock.set_delay(model, "summary", from_seconds(d.first * scale));
    mock.set_delay(model, "query", from_seconds(d.second * scale));
  }
}

std::unique_ptr<InsightEngine> make_mock_bench_engine(double scale) {
  auto registry = std::make_shared<ModelRegistry>(ModelRegistry::seeded());
  auto clock = std::make_shared<SimulatedClock>();
  GatewayOptions options;
  options.timeout = from_seconds(60.0 * scale);  // the timeout scales with the delays
  auto gateway = std::make_shared<Gateway>(registry, clock, options);
  auto mock = std::make_shared<MockBackend>();
  apply_mock_delays(*mock, default_mock_delays(), scale);
  gateway->set_default_backend(mock);
  return std::make_unique<InsightEngine>(gateway);
}

namespace {

BenchRow run_cell(const BenchPlan& plan, InsightEngine& engine, const std::string& model_id, TemplateRole role) {
  BenchRow row;
  row.model_id = model_id;
  row.role = role;
  try {
    row.display_name = engine.gateway().resolve(model_id).display_name;
  } catch (const Error& e) {
    row.display_name = model_id;
    row.error = e.code();
    row.error_message = e.what();
    return row;
  }
  Duration total{0};
  std::uint64_t in = 0;
  std::uint64_t out = 0;
  for (int t = 0; t < plan.trials; ++t) {
    try {
      InsightResult r;
      if (role == TemplateRole::Summary) {
        r = engine.summarize(plan.corpus, SummaryRequest{plan.corpus.listing.listing_id, plan.language, model_id, false});
      } else {
        r = engine.answer_query(plan.corpus,
                                QueryRequest{plan.corpus.listing.listing_id, plan.question, plan.language, model_id});
      }
      if (row.samples == 0 || r.latency < row.min_latency) row.min_latency = r.latency;
      if (row.samples == 0 || r.latency > row.max_latency) row.max_latency = r.latency;
      ++row.samples;
      total += r.latency;
      in += r.input_tokens;
      out += r.output_tokens;
      row.total_cost += r.cost;
      row.reviews_used = r.reviews_used;
    } catch (const Error& e) {
      row.error = e.code();
      row.error_message = e.what();
      break;
    }
  }
  if (row.samples > 0) {
    row.mean_latency = total / row.samples;
    row.input_tokens = in / static_cast<std::uint64_t>(row.samples);
    row.output_tokens = out / static_cast<std::uint64_t>(row.samples);
    row.cost_per_call = row.total_cost.scaled_rounded(1, row.samples);
  }
  return row;
}

std::vector<BenchRow> run_model(const BenchPlan& plan, InsightEngine& engine, const std::string& model_id) {
  std::vector<BenchRow> rows;
  for (const TemplateRole role : plan.roles) rows.push_back(run_cell(plan, engine, model_id, role));
  return rows;
}

void order_rows(std::vector<BenchRow>& rows) {
  struct Key {
    bool failed = false;
    Duration latency{Duration::max()};
    Usd cost;
  };
  std::map<std::string, Key> keys;
  for (const auto& r : rows) {
    auto& k = keys[r.model_id];
    if (!r.ok()) k.failed = true;
    if (r.role == TemplateRole::Summary && r.ok()) {
      k.latency = r.mean_latency;
      k.cost = r.cost_per_call;
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [&](const BenchRow& a, const BenchRow& b) {
    const Key& ka = keys[a.model_id];
    const Key& kb = keys[b.model_id];
    if (ka.failed != kb.failed) return !ka.failed;
    if (ka.latency != kb.latency) return ka.latency < kb.latency;
    if (ka.cost != kb.cost) return ka.cost < kb.cost;
    if (a.model_id != b.model_id) return a.model_id < b.model_id;
    return a.role == TemplateRole::Summary && b.role != TemplateRole::Summary;
  });
}

BenchReport make_report(const BenchPlan& plan, const Clock& clock) {
  if (plan.trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be at least 1");
  if (plan.model_ids.empty()) throw Error(ErrorCode::EmptyInput, "no models to benchmark");
  BenchReport report;
  report.clock_note = dynamic_cast<const SimulatedClock*>(&clock) != nullptr ? "simulated" : "real";
  report.trials = plan.trials;
  report.corpus_note = plan.corpus.listing.listing_id + " (" + std::to_string(plan.corpus.reviews.size()) + " reviews)";
  return report;
}

std::string seconds_text(Duration d) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", to_seconds(d));
  return buf;
}

std::string status_text(const BenchRow& r) { return r.ok() ? "ok" : std::string(to_string(*r.error)); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

BenchReport run_llm_bench(const BenchPlan& plan, InsightEngine& engine) {
  if (plan.parallel) throw Error(ErrorCode::InvalidArgument, "parallel bench needs an engine factory");
  BenchReport report = make_report(plan, engine.gateway().clock());
  for (const auto& model : plan.model_ids) {
    for (auto& row : run_model(plan, engine, model)) report.rows.push_back(std::move(row));
  }
  order_rows(report.rows);
  return report;
}

BenchReport run_llm_bench(const BenchPlan& plan, const EngineFactory& factory) {
  if (!plan.parallel) {
    auto engine = factory();
    return run_llm_bench(plan, *engine);
  }
  std::vector<std::unique_ptr<InsightEngine>> engines;
  for (std::size_t i = 0; i < plan.model_ids.size(); ++i) {
    engines.push_back(factory());
    if (dynamic_cast<const SimulatedClock*>(&engines.back()->gateway().clock()) == nullptr) {
      throw Error(ErrorCode::InvalidArgument, "parallel bench runs on mocks with a simulated clock only");
    }
  }
  if (engines.empty()) throw Error(ErrorCode::EmptyInput, "no models to benchmark");
  BenchReport report = make_report(plan, engines.front()->gateway().clock());
  std::vector<std::vector<BenchRow>> per_model(plan.model_ids.size());
  {
    std::vector<std::jthread> workers;
    for (std::size_t i = 0; i < plan.model_ids.size(); ++i) {
      workers.emplace_back([&, i] { per_model[i] = run_model(plan, *engines[i], plan.model_ids[i]); });
    }
  }
  for (auto& rows : per_model) {
    for (auto& row : rows) report.rows.push_back(std::move(row));
  }
  order_rows(report.rows);
  return report;
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "markdown" || text == "md") return ReportFormat::Markdown;
  if (text == "csv") return ReportFormat::Csv;
  throw Error(ErrorCode::InvalidArgument, "unknown report format '" + std::string(text) + "'");
}

std::string emit_report(const BenchReport& report, ReportFormat format) {
  if (report.rows.empty()) throw Error(ErrorCode::EmptyReport, "report has no rows");
  std::ostringstream os;
  if (format == ReportFormat::Csv) {
    os << "model_id,display_name,role,samples,mean_s,min_s,max_s,input_tokens,output_tokens,cost_per_call_usd,"
          "total_cost_usd,reviews_used,status\n";
    for (const auto& r : report.rows) {
      os << csv_field(r.model_id) << ',' << csv_field(r.display_name) << ',' << to_string(r.role) << ','
         << r.samples << ',' << seconds_text(r.mean_latency) << ',' << seconds_text(r.min_latency) << ','
         << seconds_text(r.max_latency) << ',' << r.input_tokens << ',' << r.output_tokens << ','
         << r.cost_per_call.to_string() << ',' << r.total_cost.to_string() << ',' << r.reviews_used << ','
         << status_text(r) << '\n';
    }
    return os.str();
  }

  os << "# " << report.title << "\n\n";
  os << "Clock: " << report.clock_note << ". Trials per cell: " << report.trials << ". Corpus: " << report.corpus_note
     << ".\n\n";

  // Model-by-role pivot: one row per model, summary and query columns.
  std::vector<std::string> models;
  std::map<std::string, std::string> names;
  std::map<std::pair<std::string, TemplateRole>, const BenchRow*> cells;
  for (const auto& r : report.rows) {
    if (std::find(models.begin(), models.end(), r.model_id) == models.end()) models.push_back(r.model_id);
    names[r.model_id] = r.display_name;
    cells[{r.model_id, r.role}] = &r;
  }
  auto cell_text = [&](const std::string& m, TemplateRole role) -> std::string {
    const auto it = cells.find({m, role});
    if (it == cells.end()) return "-";
    return it->second->ok() ? seconds_text(it->second->mean_latency) : std::string(to_string(*it->second->error));
  };
  os << "| LLM | Summary Time (s) | Query Time (s) |\n";
  os << "|---|---:|---:|\n";
  for (const auto& m : models) {
    os << "| " << names[m] << " | " << cell_text(m, TemplateRole::Summary) << " | " << cell_text(m, TemplateRole::Query)
       << " |\n";
  }

  os << "\n| Model | Role | Samples | Mean (s) | Min (s) | Max (s) | Tokens in | Tokens out | Reviews | "
        "Cost/call (USD) | Total cost (USD) | Status |\n";
  os << "|---|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|---|\n";
  for (const auto& r : report.rows) {
    os << "| " << r.model_id << " | " << to_string(r.role) << " | " << r.samples << " | " << seconds_text(r.mean_latency)
       << " | " << seconds_text(r.min_latency) << " | " << seconds_text(r.max_latency) << " | " << r.input_tokens
       << " | " << r.output_tokens << " | " << r.reviews_used << " | " << r.cost_per_call.display(6) << " | "
       << r.total_cost.display(6) << " | " << status_text(r) << " |\n";
  }
  return os.str();
}

// ---- retrieval bench -------------------------------------------------------------

RetrievalBenchReport run_retrieval_bench(const std::vector<std::shared_ptr<ReviewProvider>>& providers,
                                         const FetchRequest& request, std::shared_ptr<Clock> clock) {
  if (providers.empty()) throw Error(ErrorCode::EmptyInput, "no providers to benchmark");
  RetrievalBenchReport report;
  report.requested = request.max_reviews;
  for (const auto& p : providers) {
    RetrievalBenchRow row;
    row.provider = p->config().provider_id;
    row.display_name = p->config().display_name;
    row.cost_per_1000 = p->config().cost_per_1000_reviews;
    row.maintenance = p->config().maintenance;
    const TimePoint start = clock->now();
    try {
      const FetchOutcome outcome = fetch_reviews(request, *p, clock);
      row.reviews = outcome.metrics.reviews_returned;
      row.wall_time = outcome.metrics.wall_time;
    } catch (const Error& e) {
      row.wall_time = clock->now() - start;
      row.error = e.code();
      row.error_message = e.what();
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string format_fetch_cost(Usd per_1000) {
  if (per_1000.is_zero()) return "Free";
  return "$" + per_1000.display(2) + " per 1000 reviews";
}

std::string emit_retrieval_report(const RetrievalBenchReport& report, ReportFormat format) {
  if (report.rows.empty()) throw Error(ErrorCode::EmptyReport, "report has no rows");
  std::ostringstream os;
  if (format == ReportFormat::Csv) {
    os << "provider,display_name,reviews,wall_time_s,cost_per_1000_usd,maintenance,status\n";
    for (const auto& r : report.rows) {
      os << csv_field(r.provider) << ',' << csv_field(r.display_name) << ',' << r.reviews << ','
         << seconds_text(r.wall_time) << ',' << r.cost_per_1000.to_string() << ',' << csv_field(std::string(to_string(r.maintenance)))
         << ',' << (r.ok() ? "ok" : std::string(to_string(*r.error))) << '\n';
    }
    return os.str();
  }
  os << "| Criterion |";
  for (const auto& r : report.rows) os << ' ' << r.display_name << " |";
  os << "\n|---|";
  for (std::size_t i = 0; i < report.rows.size(); ++i) os << "---|";
  os << "\n| Retrieval Time (" << report.requested << " reviews) |";
  for (const auto& r : report.rows) {
    os << ' ' << (r.ok() ? "~" + seconds_text(r.wall_time) + " s" : std::string(to_string(*r.error))) << " |";
  }
  os << "\n| Cost |";
  for (const auto& r : report.rows) os << ' ' << format_fetch_cost(r.cost_per_1000) << " |";
  os << "\n| Maintenance Effort |";
  for (const auto& r : report.rows) os << ' ' << to_string(r.maintenance) << " |";
  os << '\n';
  return os.str();
}

}  // namespace stayinsight
