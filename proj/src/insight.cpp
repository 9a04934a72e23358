#include "stayinsight/insight.hpp"

#include <algorithm>
#include <set>

#include "stayinsight/digest.hpp"
#include "stayinsight/error.hpp"
#include "stayinsight/records.hpp"
#include "stayinsight/text.hpp"

namespace stayinsight {

using nlohmann::json;

std::string_view to_string(TemplateRole r) noexcept { return r == TemplateRole::Summary ? "summary" : "query"; }

namespace {

constexpr std::string_view kSystemMarker = "=== system ===\n";
constexpr std::string_view kUserMarker = "=== user ===\n";

std::vector<std::string_view> allowed_placeholders(TemplateRole role) {
  if (role == TemplateRole::Summary) return {"language", "context"};
  return {"language", "context", "question"};
}

// Calls on_text for literal runs and on_name for each {name}.
template <typename OnText, typename OnName>
void scan(std::string_view s, OnText on_text, OnName on_name) {
  std::size_t i = 0;
  std::size_t literal_start = 0;
  auto flush = [&](std::size_t end) {
    if (end > literal_start) on_text(s.substr(literal_start, end - literal_start));
  };
  while (i < s.size()) {
    if (s.substr(i, 2) == "{{" || s.substr(i, 2) == "}}") {
      flush(i);
      on_text(s.substr(i, 1));
      i += 2;
      literal_start = i;
      continue;
    }
    if (s[i] == '{') {
      const auto close = s.find('}', i + 1);
      if (close == std::string_view::npos) {
        throw Error(ErrorCode::UnknownPlaceholder, "unterminated placeholder in template");
      }
      flush(i);
      on_name(s.substr(i + 1, close - i - 1));
      i = close + 1;
      literal_start = i;
      continue;
    }
    ++i;
  }
  flush(s.size());
}

}  // namespace

PromptTemplate PromptTemplate::parse(std::string template_id, int version, TemplateRole role,
                                     std::string_view source) {
  const auto sys_at = source.find(kSystemMarker);
  const auto user_at = source.find(kUserMarker);
  if (sys_at == std::string_view::npos || user_at == std::string_view::npos || user_at < sys_at) {
    throw Error(ErrorCode::InvalidArgument, "template '" + template_id + "' needs system and user sections");
  }
  PromptTemplate t;
  t.template_id = std::move(template_id);
  t.version = version;
  t.role = role;
  t.system_text = std::string(source.substr(sys_at + kSystemMarker.size(), user_at - sys_at - kSystemMarker.size()));
  t.user_text = std::string(source.substr(user_at + kUserMarker.size()));

  const auto allowed = allowed_placeholders(role);
  std::map<std::string, int> seen;
  for (const auto& name : t.placeholders()) {
    if (std::find(allowed.begin(), allowed.end(), name) == allowed.end()) {
      throw Error(ErrorCode::UnknownPlaceholder, "template '" + t.template_id + "' uses unknown placeholder {" + name + "}");
    }
    ++seen[name];
  }
  for (const auto name : allowed) {
    if (seen[std::string(name)] != 1) {
      throw Error(ErrorCode::InvalidArgument, "template '" + t.template_id + "' must reference {" + std::string(name) +
                                                  "} exactly once");
    }
  }
  return t;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  const std::string name = path.filename().string();
  const auto dot_v = name.find(".v");
  const auto ext = name.rfind(".txt");
  if (dot_v == std::string::npos || ext == std::string::npos || ext <= dot_v + 2) {
    throw Error(ErrorCode::InvalidArgument, "template file name must be <id>.v<version>.txt: " + name);
  }
  const std::string id = name.substr(0, dot_v);
  const int version = std::stoi(name.substr(dot_v + 2, ext - dot_v - 2));
  const TemplateRole role = id.rfind("query", 0) == 0 ? TemplateRole::Query : TemplateRole::Summary;
  return parse(id, version, role, read_file(path));
}

PromptTemplate PromptTemplate::builtin(TemplateRole role) {
  if (role == TemplateRole::Summary) return parse("summary", 1, role, embedded_template_text("summary.v1.txt"));
  return parse("query", 1, role, embedded_template_text("query.v1.txt"));
}

std::vector<std::string> PromptTemplate::placeholders() const {
  std::vector<std::string> names;
  for (const std::string* part : {&system_text, &user_text}) {
    scan(*part, [](std::string_view) {}, [&](std::string_view name) { names.emplace_back(name); });
  }
  return names;
}

RenderedPrompt render_prompt(const PromptTemplate& tmpl, const Bindings& bindings) {
  const auto allowed = allowed_placeholders(tmpl.role);
  auto render_part = [&](const std::string& part) {
    std::string out;
    scan(
        part, [&](std::string_view literal) { out += literal; },
        [&](std::string_view name) {
          if (std::find(allowed.begin(), allowed.end(), name) == allowed.end()) {
            throw Error(ErrorCode::UnknownPlaceholder, "unknown placeholder {" + std::string(name) + "}");
          }
          const auto it = bindings.find(name);
          if (it == bindings.end()) {
            throw Error(ErrorCode::MissingBinding, "no binding for {" + std::string(name) + "}");
          }
          out += it->second;
        });
    return out;
  };
  return RenderedPrompt{render_part(tmpl.system_text), render_part(tmpl.user_text)};
}

bool detect_insufficient_evidence(const RetrievalPlan& plan, std::string_view question) {
  (void)question;
  return plan.relevance_sum() <= 0.0;
}

bool is_valid_language_code(std::string_view code) {
  auto lower = [](char c) { return c >= 'a' && c <= 'z'; };
  auto upper = [](char c) { return c >= 'A' && c <= 'Z'; };
  const auto dash = code.find('-');
  const std::string_view base = code.substr(0, dash);
  if (base.size() < 2 || base.size() > 3 || !std::all_of(base.begin(), base.end(), lower)) return false;
  if (dash == std::string_view::npos) return true;
  const std::string_view region = code.substr(dash + 1);
  return region.size() == 2 && std::all_of(region.begin(), region.end(), upper);
}

json InsightResult::to_json() const {
  return json{{"kind", kind == InsightKind::Summary ? "summary" : "answer"},
              {"text", text},
              {"model_id", model_id},
              {"plan_digest", plan_digest},
              {"usage", {{"input_tokens", input_tokens}, {"output_tokens", output_tokens}}},
              {"cost_usd", cost.to_string()},
              {"latency_s", to_seconds(latency)},
              {"insufficient_evidence", insufficient_evidence},
              {"language", language},
              {"template", {{"id", template_id}, {"version", template_version}}},
              {"reviews_used", reviews_used},
              {"reviews_dropped", reviews_dropped},
              {"cached", cached}};
}

std::string corpus_digest(const ReviewCorpus& corpus) {
  // fetched_at is excluded: re-fetching identical reviews keeps the digest.
  std::string material = corpus.listing.listing_id + '\n';
  for (const auto& r : corpus.reviews) material += to_record(r, RecordSchema::Native).dump() + '\n';
  return sha256_hex(material).substr(0, 16);
}

InsightEngine::InsightEngine(std::shared_ptr<Gateway> gateway, EngineOptions options)
    : gateway_(std::move(gateway)), options_(std::move(options)) {
  if (!gateway_) throw Error(ErrorCode::InvalidArgument, "engine needs a gateway");
  if (options_.summary_template.role != TemplateRole::Summary || options_.query_template.role != TemplateRole::Query) {
    throw Error(ErrorCode::InvalidArgument, "template roles do not match");
  }
}

TokenBudget InsightEngine::budget_for(const ModelProfile& profile, TemplateRole role, const Bindings& bindings) const {
  const PromptTemplate& tmpl = role == TemplateRole::Summary ? options_.summary_template : options_.query_template;
  Bindings empty_context = bindings;
  empty_context["context"] = "";
  const RenderedPrompt bare = render_prompt(tmpl, empty_context);
  const std::size_t overhead = estimate_tokens(bare.system_text + bare.user_text, gateway_->options().tokenizer);
  return TokenBudget::make(profile.prompt_window, overhead,
                           std::min(profile.completion_window, options_.max_completion_reserve));
}

InsightResult InsightEngine::run(const ReviewCorpus& corpus, const PromptTemplate& tmpl, Bindings bindings,
                                 const std::string& model_id, SelectionMode mode, const std::string& question) {
  const ModelProfile profile = gateway_->resolve(model_id);
  const TokenBudget budget = budget_for(profile, tmpl.role, bindings);
  const RetrievalPlan plan =
      select_reviews_for_budget(corpus, budget, mode,
                                mode == SelectionMode::Relevance ? std::optional<std::string_view>(question) : std::nullopt,
                                gateway_->options().tokenizer);
  bindings["context"] = build_context(plan, corpus);
  const RenderedPrompt prompt = render_prompt(tmpl, bindings);

  CompletionRequest request;
  request.model_id = model_id;
  request.system_text = prompt.system_text;
  request.user_text = prompt.user_text;
  request.max_output_tokens = budget.completion_reserve;
  request.temperature = options_.temperature;
  request.purpose = std::string(to_string(tmpl.role));
  if (gateway_->prompt_tokens(request) > profile.prompt_window) {
    throw Error(ErrorCode::ContextOverflow, "packed prompt exceeds the model window");
  }

  const CompletionResponse response = gateway_->complete(request);
  InsightResult result;
  result.kind = tmpl.role == TemplateRole::Summary ? InsightKind::Summary : InsightKind::Answer;
  result.text = response.text;
  result.model_id = model_id;
  result.plan_digest = plan.digest();
  result.input_tokens = response.input_tokens;
  result.output_tokens = response.output_tokens;
  result.cost = response.cost;
  result.latency = response.latency;
  result.language = bindings.at("language");
  result.template_id = tmpl.template_id;
  result.template_version = tmpl.version;
  result.reviews_used = plan.selected.size();
  result.reviews_dropped = plan.dropped_count;
  if (mode == SelectionMode::Relevance) {
    result.insufficient_evidence = detect_insufficient_evidence(plan, question);
    if (result.insufficient_evidence) result.text = std::string(kInsufficientEvidenceNotice) + "\n\n" + result.text;
  }
  return result;
}

InsightResult InsightEngine::summarize(const ReviewCorpus& corpus, const SummaryRequest& request) {
  if (corpus.reviews.empty()) throw Error(ErrorCode::EmptyCorpus, "no reviews to summarize");
  if (!is_valid_language_code(request.language)) {
    throw Error(ErrorCode::InvalidArgument, "unsupported language code '" + request.language + "'");
  }
  const std::string key = corpus.listing.listing_id + '|' + request.model_id + '|' + request.language + '|' +
                          corpus_digest(corpus);
  const TimePoint now = gateway_->clock().now();
  if (request.use_cache) {
    std::lock_guard lock(cache_mutex_);
    if (const auto it = summary_cache_.find(key);
        it != summary_cache_.end() && now - it->second.stored_at < options_.summary_cache_ttl) {
      InsightResult hit = it->second.result;
      hit.cached = true;
      return hit;
    }
  }
  InsightResult result = run(corpus, options_.summary_template, Bindings{{"language", request.language}},
                             request.model_id, SelectionMode::Recency, "");
  std::lock_guard lock(cache_mutex_);
  summary_cache_.insert_or_assign(key, CacheEntry{result, now});
  return result;
}

InsightResult InsightEngine::answer_query(const ReviewCorpus& corpus, const QueryRequest& request) {
  const std::string question{text::trim(request.question)};
  if (question.empty() || text::word_tokens(question).empty()) {
    throw Error(ErrorCode::EmptyQuestion, "question is empty");
  }
  if (corpus.reviews.empty()) throw Error(ErrorCode::EmptyCorpus, "no reviews to answer from");
  if (!is_valid_language_code(request.language)) {
    throw Error(ErrorCode::InvalidArgument, "unsupported language code '" + request.language + "'");
  }
  return run(corpus, options_.query_template, Bindings{{"language", request.language}, {"question", question}},
             request.model_id, SelectionMode::Relevance, question);
}

}  // namespace stayinsight
