#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "stayinsight/gateway.hpp"
#include "stayinsight/retrieval.hpp"
#include "stayinsight/review.hpp"

namespace stayinsight {

enum class TemplateRole { Summary, Query };
std::string_view to_string(TemplateRole r) noexcept;

/// Prompt template with `{name}` placeholders; `{{` and `}}` are literal
/// braces. Files hold a "=== system ===" section and a "=== user ===" section.
struct PromptTemplate {
  std::string template_id;  // e.g. "summary"
  int version = 1;
  TemplateRole role = TemplateRole::Summary;
  std::string system_text;
  std::string user_text;

  /// Parses and validates: each allowed placeholder of the role appears
  /// exactly once; any other name is UnknownPlaceholder.
  static PromptTemplate parse(std::string template_id, int version, TemplateRole role, std::string_view source);
  /// "<id>.v<version>.txt"; the role is taken from the id.
  static PromptTemplate load(const std::filesystem::path& path);
  static PromptTemplate builtin(TemplateRole role);

  std::vector<std::string> placeholders() const;
};

struct RenderedPrompt {
  std::string system_text;
  std::string user_text;
};

using Bindings = std::map<std::string, std::string, std::less<>>;

/// Single-pass substitution (bound values are never re-scanned). Throws
/// MissingBinding / UnknownPlaceholder.
RenderedPrompt render_prompt(const PromptTemplate& tmpl, const Bindings& bindings);

/// Fixed notice placed at the top of answers without supporting reviews.
inline constexpr std::string_view kInsufficientEvidenceNotice =
    "Insufficient evidence: none of the reviews mention this topic, so the answer cannot be grounded in guest "
    "feedback.";

/// True iff the selected reviews' relevance scores sum to zero, i.e. no
/// query term occurs in any selected review.
bool detect_insufficient_evidence(const RetrievalPlan& plan, std::string_view question);

/// Lower-case ISO 639 code with optional region ("en", "el", "pt-BR").
bool is_valid_language_code(std::string_view code);

struct SummaryRequest {
  std::string listing_id;
  std::string language = "en";
  std::string model_id;
  bool use_cache = true;
};

struct QueryRequest {
  std::string listing_id;
  std::string question;
  std::string language = "en";
  std::string model_id;
};

enum class InsightKind { Summary, Answer };

struct InsightResult {
  InsightKind kind = InsightKind::Summary;
  std::string text;
  std::string model_id;
  std::string plan_digest;
  std::uint64_t input_tokens = 0;
  std::uint64_t output_tokens = 0;
  Usd cost;
  Duration latency{0};
  bool insufficient_evidence = false;
  std::string language;
  std::string template_id;
  int template_version = 0;
  std::size_t reviews_used = 0;
  std::size_t reviews_dropped = 0;
  bool cached = false;

  nlohmann::json to_json() const;
};

struct EngineOptions {
  PromptTemplate summary_template = PromptTemplate::builtin(TemplateRole::Summary);
  PromptTemplate query_template = PromptTemplate::builtin(TemplateRole::Query);
  double temperature = 0.2;
  std::size_t max_completion_reserve = 1024;
  Duration summary_cache_ttl = std::chrono::hours(24);
};

/// Summaries and answers over one corpus, one completion per call.
class InsightEngine {
 public:
  explicit InsightEngine(std::shared_ptr<Gateway> gateway, EngineOptions options = {});

  /// Recency-packed summary. Cached per (listing, model, language, corpus
  /// digest) for `summary_cache_ttl`. Throws EmptyCorpus plus gateway errors.
  InsightResult summarize(const ReviewCorpus& corpus, const SummaryRequest& request);

  /// BM25-packed answer; never cached. Throws EmptyCorpus, EmptyQuestion.
  InsightResult answer_query(const ReviewCorpus& corpus, const QueryRequest& request);

  /// Token budget the engine would use for `role` with these bindings.
  TokenBudget budget_for(const ModelProfile& profile, TemplateRole role, const Bindings& bindings) const;

  Gateway& gateway() const { return *gateway_; }

 private:
  struct CacheEntry {
    InsightResult result;
    TimePoint stored_at;
  };

  InsightResult run(const ReviewCorpus& corpus, const PromptTemplate& tmpl, Bindings bindings,
                    const std::string& model_id, SelectionMode mode, const std::string& question);

  std::shared_ptr<Gateway> gateway_;
  EngineOptions options_;
  std::mutex cache_mutex_;
  std::map<std::string, CacheEntry> summary_cache_;
};

std::string corpus_digest(const ReviewCorpus& corpus);

/// Built-in template text by file name ("summary.v1.txt", "query.v1.txt").
std::string_view embedded_template_text(std::string_view name);

}  // namespace stayinsight
