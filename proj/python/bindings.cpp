// Python bindings: a thin layer over ReviewService plus the pure helpers
// (cost, tokens, parsing, ranking, bench). Structured results cross as dicts.
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "stayinsight/bench.hpp"
#include "stayinsight/error.hpp"
#include "stayinsight/records.hpp"
#include "stayinsight/service.hpp"

namespace py = pybind11;
using namespace stayinsight;
using nlohmann::json;

namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::handle& obj) {
  if (obj.is_none()) return json::object();
  return json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

json reviews_json(const std::vector<Review>& reviews) {
  json out = json::array();
  for (const auto& r : reviews) out.push_back(to_record(r, RecordSchema::Native));
  return out;
}

// Owns the service; the GIL is dropped around anything that may block.
class PyService {
 public:
  explicit PyService(const py::object& config) {
    const ServiceConfig cfg = load_service_config(std::nullopt, process_env, from_py(config));
    service_ = std::make_unique<ReviewService>(cfg, ReviewService::default_parts(cfg, std::make_shared<SystemClock>()));
  }

  py::object fetch(const std::string& url, const std::optional<std::string>& provider) {
    FetchOutcome out;
    {
      py::gil_scoped_release release;
      out = service_->fetch_now(url, provider);
    }
    return to_py(json{{"listing", listing_to_json(out.corpus.listing)},
                      {"provider", out.metrics.provider},
                      {"reviews", out.metrics.reviews_returned},
                      {"pages", out.metrics.pages_fetched},
                      {"wall_time_s", to_seconds(out.metrics.wall_time)},
                      {"cost_usd", out.metrics.monetary_cost.to_string()},
                      {"from_cache", out.metrics.from_cache}});
  }

  py::object submit(const std::string& url, const std::optional<std::string>& provider) {
    SubmitResult r;
    {
      py::gil_scoped_release release;
      r = service_->submit_listing(url, provider);
    }
    json j = r.job.to_json();
    j["created"] = r.created;
    return to_py(j);
  }

  py::object job(const std::string& job_id) { return to_py(service_->job(job_id).to_json()); }

  void wait_idle() {
    py::gil_scoped_release release;
    service_->wait_idle();
  }

  py::object summary(const std::string& listing_id, const std::optional<std::string>& lang,
                     const std::optional<std::string>& model) {
    InsightResult r;
    {
      py::gil_scoped_release release;
      r = service_->summary(listing_id, lang, model);
    }
    return to_py(r.to_json());
  }

  py::object ask(const std::string& listing_id, const std::string& question, const std::optional<std::string>& lang,
                 const std::optional<std::string>& model) {
    InsightResult r;
    {
      py::gil_scoped_release release;
      r = service_->query(listing_id, question, lang, model);
    }
    return to_py(r.to_json());
  }

  py::object models() const { return to_py(service_->models()); }
  py::object config() const { return to_py(service_->config().to_json()); }
  std::size_t llm_calls() { return service_->gateway().call_count(); }

 private:
  std::unique_ptr<ReviewService> service_;
};

py::object parse_page(const std::string& html, const std::string& listing_id) {
  return to_py(reviews_json(parse_reviews_page(html, listing_id)));
}

std::string cost(const std::string& model_id, std::uint64_t input_tokens, std::uint64_t output_tokens) {
  return estimate_cost(ModelRegistry::seeded().lookup(model_id), input_tokens, output_tokens).to_string();
}

py::object registry() {
  json out = json::array();
  for (const auto& p : ModelRegistry::seeded().list()) out.push_back(profile_to_json(p));
  return to_py(out);
}

py::object rank(const std::filesystem::path& corpus_file, const std::string& query) {
  const ReviewCorpus corpus = read_corpus_file(corpus_file);
  json out = json::array();
  for (const auto& hit : rank_reviews_bm25(corpus, query)) {
    out.push_back({{"review_id", hit.review_id}, {"score", hit.score}});
  }
  return to_py(out);
}

py::object select_plan(const std::filesystem::path& corpus_file, std::size_t prompt_window, std::size_t template_overhead) {
  const ReviewCorpus corpus = read_corpus_file(corpus_file);
  const RetrievalPlan plan =
      select_reviews_for_budget(corpus, TokenBudget::make(prompt_window, template_overhead), SelectionMode::Recency);
  json ids = json::array();
  for (const auto& p : plan.selected) ids.push_back(p.review_id);
  return to_py(json{{"selected", ids}, {"total_tokens", plan.total_tokens}, {"dropped", plan.dropped_count}});
}

std::string bench(const std::filesystem::path& corpus_file, int trials, double scale, const std::string& format) {
  BenchPlan plan;
  plan.corpus = read_corpus_file(corpus_file);
  plan.model_ids = default_bench_models();
  plan.trials = trials;
  const ReportFormat fmt = parse_report_format(format);
  py::gil_scoped_release release;
  auto engine = make_mock_bench_engine(scale);
  return emit_report(run_llm_bench(plan, *engine), fmt);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Review summaries and Q&A for short-rental listings";

  py::exception<Error>(m, "StayInsightError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object type = py::module_::import("stayinsight._core").attr("StayInsightError");
      py::object exc = type(std::string(e.what()));
      exc.attr("code") = std::string(to_string(e.code()));
      exc.attr("retriable") = e.retriable();
      PyErr_SetObject(type.ptr(), exc.ptr());
    }
  });

  py::class_<PyService>(m, "Service")
      .def(py::init<const py::object&>(), py::arg("config") = py::none(),
           "config: dict of overrides on top of STAYINSIGHT_* environment variables")
      .def("fetch", &PyService::fetch, py::arg("url"), py::arg("provider") = py::none())
      .def("submit", &PyService::submit, py::arg("url"), py::arg("provider") = py::none())
      .def("job", &PyService::job, py::arg("job_id"))
      .def("wait_idle", &PyService::wait_idle)
      .def("summary", &PyService::summary, py::arg("listing_id"), py::arg("lang") = py::none(),
           py::arg("model") = py::none())
      .def("ask", &PyService::ask, py::arg("listing_id"), py::arg("question"), py::arg("lang") = py::none(),
           py::arg("model") = py::none())
      .def("models", &PyService::models)
      .def("config", &PyService::config)
      .def_property_readonly("llm_calls", &PyService::llm_calls);

  m.def("listing_id", [](const std::string& url) { return validate_listing_url(url).listing_id; }, py::arg("url"));
  m.def("estimate_cost", &cost, py::arg("model_id"), py::arg("input_tokens"), py::arg("output_tokens"),
        "Exact USD cost as a decimal string");
  m.def("estimate_tokens", [](const std::string& text) { return estimate_tokens(text); }, py::arg("text"));
  m.def("models", &registry);
  m.def("parse_reviews_page", &parse_page, py::arg("html"), py::arg("listing_id"));
  m.def("rank_reviews", &rank, py::arg("corpus_file"), py::arg("query"));
  m.def("select_reviews", &select_plan, py::arg("corpus_file"), py::arg("prompt_window"), py::arg("template_overhead"));
  m.def("bench_report", &bench, py::arg("corpus_file"), py::arg("trials") = 3, py::arg("scale") = 1.0,
        py::arg("format") = "markdown");
}
