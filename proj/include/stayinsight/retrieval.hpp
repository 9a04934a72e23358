#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stayinsight/review.hpp"

namespace stayinsight {

struct TokenizerConfig {
  enum class Strategy { CharsPerToken, WhitespaceWords };
  Strategy strategy = Strategy::CharsPerToken;
  std::size_t chars_per_token = 4;  // k, must be > 0
  double words_factor = 1.3;        // tokens per whitespace word
};

/// ceil(code_points / k) under the default strategy; ceil(words * factor)
/// under WhitespaceWords.
std::size_t estimate_tokens(std::string_view text, const TokenizerConfig& cfg = {});

struct TokenBudget {
  std::size_t prompt_window = 0;
  std::size_t template_overhead = 0;
  std::size_t completion_reserve = 0;
  std::size_t available = 0;  // prompt_window - template_overhead

  /// Throws BudgetTooSmall when the template alone exceeds the window.
  static TokenBudget make(std::size_t prompt_window, std::size_t template_overhead,
                          std::size_t completion_reserve = 0);
};

enum class SelectionMode { Recency, Relevance };
std::string_view to_string(SelectionMode m) noexcept;

struct PlannedReview {
  std::string review_id;
  std::size_t estimated_tokens = 0;
  std::optional<double> relevance_score;

  friend bool operator==(const PlannedReview&, const PlannedReview&) = default;
};

struct RetrievalPlan {
  std::vector<PlannedReview> selected;
  std::size_t total_tokens = 0;
  std::size_t dropped_count = 0;
  SelectionMode mode = SelectionMode::Recency;

  /// Diagnostic log form, one line per selected review.
  std::string to_log() const;
  std::string digest() const;
  double relevance_sum() const;
};

struct RankedReview {
  std::string review_id;
  double score = 0.0;
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Relevance ranking seam; BM25 is the shipped strategy.
class RankingStrategy {
 public:
  virtual ~RankingStrategy() = default;
  virtual std::vector<RankedReview> rank(const ReviewCorpus& corpus, std::string_view query) const = 0;
};

/// Okapi BM25 with the non-negative idf ln(1 + (N - df + 0.5) / (df + 0.5)).
/// Documents are title + positive + negative text; distinct query terms are
/// summed. Ties keep corpus default order (recency, then review_id).
std::vector<RankedReview> rank_reviews_bm25(const ReviewCorpus& corpus, std::string_view query,
                                            Bm25Params params = {});

class Bm25Ranker final : public RankingStrategy {
 public:
  explicit Bm25Ranker(Bm25Params params = {}) : params_(params) {}
  std::vector<RankedReview> rank(const ReviewCorpus& corpus, std::string_view query) const override {
    return rank_reviews_bm25(corpus, query, params_);
  }

 private:
  Bm25Params params_;
};

/// The text of one review as it appears in a prompt, framing included:
///
///   Review 2024-05-03 | score 9.0/10
///   Title: ...
///   + <positive>
///   − <negative>
///   <blank line>
///
/// Absent fields are omitted; internal whitespace is collapsed so a review
/// can never forge another block header.
std::string render_review_block(const Review& review);
std::size_t review_block_tokens(const Review& review, const TokenizerConfig& cfg = {});

/// Greedy prefix packing: walks the reviews in mode order (corpus default
/// order, or ranking order for Relevance) and stops at the first one that
/// would overflow `budget.available`. Throws BudgetTooSmall when nothing fits
/// and EmptyQuery when Relevance mode gets no usable query.
RetrievalPlan select_reviews_for_budget(const ReviewCorpus& corpus, const TokenBudget& budget, SelectionMode mode,
                                        std::optional<std::string_view> query = std::nullopt,
                                        const TokenizerConfig& cfg = {}, const RankingStrategy* ranker = nullptr);

/// Concatenated review blocks in plan order. Throws PlanCorpusMismatch.
std::string build_context(const RetrievalPlan& plan, const ReviewCorpus& corpus);

/// Deterministic corpus of `count` reviews whose rendered blocks are exactly
/// `block_chars` code points long. Used for context-ceiling checks.
ReviewCorpus make_synthetic_corpus(const Listing& listing, std::size_t count, std::size_t block_chars,
                                   TimePoint fetched_at);

}  // namespace stayinsight
