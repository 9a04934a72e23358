#include "stayinsight/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <unordered_map>

#include "stayinsight/digest.hpp"
#include "stayinsight/error.hpp"
#include "stayinsight/text.hpp"

namespace stayinsight {

std::size_t estimate_tokens(std::string_view s, const TokenizerConfig& cfg) {
  switch (cfg.strategy) {
    case TokenizerConfig::Strategy::CharsPerToken: {
      if (cfg.chars_per_token == 0) throw Error(ErrorCode::InvalidArgument, "chars_per_token must be > 0");
      const std::size_t n = text::utf8_length(s);
      return (n + cfg.chars_per_token - 1) / cfg.chars_per_token;
    }
    case TokenizerConfig::Strategy::WhitespaceWords: {
      if (!(cfg.words_factor > 0.0)) throw Error(ErrorCode::InvalidArgument, "words_factor must be > 0");
      std::size_t words = 0;
      bool in_word = false;
      for (char c : s) {
        const bool space = c == ' ' || c == '\n' || c == '\t' || c == '\r';
        if (!space && !in_word) ++words;
        in_word = !space;
      }
      return static_cast<std::size_t>(std::ceil(static_cast<double>(words) * cfg.words_factor));
    }
  }
  return 0;
}

TokenBudget TokenBudget::make(std::size_t prompt_window, std::size_t template_overhead,
                              std::size_t completion_reserve) {
  if (template_overhead > prompt_window) {
    throw Error(ErrorCode::BudgetTooSmall, "template overhead " + std::to_string(template_overhead) +
                                               " exceeds prompt window " + std::to_string(prompt_window));
  }
  return TokenBudget{prompt_window, template_overhead, completion_reserve, prompt_window - template_overhead};
}

std::string_view to_string(SelectionMode m) noexcept {
  return m == SelectionMode::Recency ? "recency" : "relevance";
}

std::string RetrievalPlan::to_log() const {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < selected.size(); ++i) {
    const auto& s = selected[i];
    out += std::to_string(i + 1) + '\t' + s.review_id + "\ttokens=" + std::to_string(s.estimated_tokens);
    if (s.relevance_score) {
      std::snprintf(buf, sizeof buf, "\tscore=%.9f", *s.relevance_score);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::string RetrievalPlan::digest() const {
  return sha256_hex(std::string(to_string(mode)) + '\n' + std::to_string(total_tokens) + '\n' +
                    std::to_string(dropped_count) + '\n' + to_log())
      .substr(0, 16);
}

double RetrievalPlan::relevance_sum() const {
  double sum = 0.0;
  for (const auto& s : selected) sum += s.relevance_score.value_or(0.0);
  return sum;
}

namespace {

std::vector<std::string> document_terms(const Review& r) {
  std::string doc;
  for (const auto* field : {&r.title, &r.positive_text, &r.negative_text}) {
    if (*field) {
      doc += **field;
      doc += ' ';
    }
  }
  return text::word_tokens(doc);
}

std::string format_score(double score) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", score);
  return buf;
}

}  // namespace

std::vector<RankedReview> rank_reviews_bm25(const ReviewCorpus& corpus, std::string_view query, Bm25Params params) {
  const auto raw_terms = text::word_tokens(query);
  if (raw_terms.empty()) throw Error(ErrorCode::EmptyQuery, "query has no searchable terms");
  std::vector<std::string> terms;
  for (const auto& t : raw_terms) {
    if (std::find(terms.begin(), terms.end(), t) == terms.end()) terms.push_back(t);
  }

  // Ranking ties fall back to corpus default order, so work on a sorted view.
  std::vector<const Review*> docs;
  docs.reserve(corpus.reviews.size());
  for (const auto& r : corpus.reviews) docs.push_back(&r);
  std::stable_sort(docs.begin(), docs.end(), [](const Review* a, const Review* b) { return default_order_less(*a, *b); });

  const std::size_t n = docs.size();
  std::vector<std::unordered_map<std::string, std::size_t>> tf(n);
  std::vector<std::size_t> length(n, 0);
  std::unordered_map<std::string, std::size_t> df;
  double total_length = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto words = document_terms(*docs[i]);
    length[i] = words.size();
    total_length += static_cast<double>(words.size());
    for (const auto& w : words) ++tf[i][w];
    for (const auto& [w, count] : tf[i]) {
      (void)count;
      ++df[w];
    }
  }
  const double avgdl = n == 0 ? 0.0 : total_length / static_cast<double>(n);

  std::vector<double> idf(terms.size(), 0.0);
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const auto it = df.find(terms[t]);
    const double d = it == df.end() ? 0.0 : static_cast<double>(it->second);
    idf[t] = std::log(1.0 + (static_cast<double>(n) - d + 0.5) / (d + 0.5));
  }

  std::vector<RankedReview> ranked(n);
  for (std::size_t i = 0; i < n; ++i) {
    double score = 0.0;
    const double norm = avgdl > 0.0 ? static_cast<double>(length[i]) / avgdl : 0.0;
    for (std::size_t t = 0; t < terms.size(); ++t) {
      const auto it = tf[i].find(terms[t]);
      if (it == tf[i].end()) continue;
      const double f = static_cast<double>(it->second);
      score += idf[t] * (f * (params.k1 + 1.0)) / (f + params.k1 * (1.0 - params.b + params.b * norm));
    }
    ranked[i] = RankedReview{docs[i]->review_id, score};
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedReview& a, const RankedReview& b) { return a.score > b.score; });
  return ranked;
}

std::string render_review_block(const Review& r) {
  std::string block = "Review " + format_date(r.published_at) + " | score " + format_score(r.score) + "/10\n";
  if (r.title) block += "Title: " + text::collapse_whitespace(*r.title) + "\n";
  if (r.positive_text) block += "+ " + text::collapse_whitespace(*r.positive_text) + "\n";
  if (r.negative_text) block += "− " + text::collapse_whitespace(*r.negative_text) + "\n";
  block += "\n";
  return block;
}

std::size_t review_block_tokens(const Review& review, const TokenizerConfig& cfg) {
  return estimate_tokens(render_review_block(review), cfg);
}

RetrievalPlan select_reviews_for_budget(const ReviewCorpus& corpus, const TokenBudget& budget, SelectionMode mode,
                                        std::optional<std::string_view> query, const TokenizerConfig& cfg,
                                        const RankingStrategy* ranker) {
  if (budget.available + budget.template_overhead != budget.prompt_window) {
    throw Error(ErrorCode::InvalidArgument, "inconsistent token budget");
  }
  std::vector<std::pair<const Review*, std::optional<double>>> order;
  order.reserve(corpus.reviews.size());
  if (mode == SelectionMode::Recency) {
    for (const auto& r : corpus.reviews) order.emplace_back(&r, std::nullopt);
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return default_order_less(*a.first, *b.first); });
  } else {
    if (!query) throw Error(ErrorCode::EmptyQuery, "relevance selection needs a query");
    const Bm25Ranker bm25;
    const RankingStrategy& strategy = ranker != nullptr ? *ranker : bm25;
    for (const auto& ranked : strategy.rank(corpus, *query)) {
      const Review* r = corpus.find(ranked.review_id);
      if (r == nullptr) throw Error(ErrorCode::PlanCorpusMismatch, "ranker returned unknown review");
      order.emplace_back(r, ranked.score);
    }
  }

  RetrievalPlan plan;
  plan.mode = mode;
  for (const auto& [review, score] : order) {
    const std::size_t tokens = review_block_tokens(*review, cfg);
    if (plan.total_tokens + tokens > budget.available) break;
    plan.total_tokens += tokens;
    plan.selected.push_back(PlannedReview{review->review_id, tokens, score});
  }
  plan.dropped_count = order.size() - plan.selected.size();
  if (plan.selected.empty() && !order.empty()) {
    throw Error(ErrorCode::BudgetTooSmall, "no review fits in " + std::to_string(budget.available) + " tokens");
  }
  return plan;
}

std::string build_context(const RetrievalPlan& plan, const ReviewCorpus& corpus) {
  std::set<std::string_view> seen;
  std::string context;
  for (const auto& s : plan.selected) {
    const Review* r = corpus.find(s.review_id);
    if (r == nullptr) throw Error(ErrorCode::PlanCorpusMismatch, "plan references unknown review '" + s.review_id + "'");
    if (!seen.insert(s.review_id).second) {
      throw Error(ErrorCode::PlanCorpusMismatch, "plan lists review '" + s.review_id + "' twice");
    }
    context += render_review_block(*r);
  }
  return context;
}

ReviewCorpus make_synthetic_corpus(const Listing& listing, std::size_t count, std::size_t block_chars,
                                   TimePoint fetched_at) {
  static constexpr std::string_view kWords[] = {
      "clean",  "quiet",   "staff",   "friendly", "breakfast", "location", "view",    "room",  "bed",
      "shower", "balcony", "walk",    "beach",    "center",    "helpful",  "spacious", "modern", "cozy",
      "coffee", "street",  "noise",   "small",    "kitchen",   "pool",     "garden",  "host",  "value"};
  std::mt19937 rng(20241101u);
  const Date latest = date_of(fetched_at);
  std::vector<Review> reviews;
  reviews.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Review r;
    char id[32];
    std::snprintf(id, sizeof id, "syn-%04zu", i + 1);
    r.review_id = id;
    r.listing_id = listing.listing_id;
    r.published_at = Date{std::chrono::sys_days(latest) - std::chrono::days(static_cast<int>(i))};
    r.score = 1.0 + static_cast<double>(rng() % 17) * 0.5;  // 1.0 .. 9.0
    r.positive_text = std::string{};
    const std::size_t framing = text::utf8_length(render_review_block(r));
    if (block_chars < framing + 1) {
      throw Error(ErrorCode::InvalidArgument, "block_chars too small for framing");
    }
    const std::size_t target = block_chars - framing;
    std::string body;
    while (body.size() < target) {
      if (!body.empty()) body += ' ';
      body += kWords[rng() % std::size(kWords)];
    }
    body.resize(target);
    if (body.back() == ' ') body.back() = '.';
    r.positive_text = body;
    reviews.push_back(std::move(r));
  }
  return make_corpus(listing, std::move(reviews), fetched_at, "synthetic");
}

}  // namespace stayinsight
