#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stayinsight/time.hpp"

namespace stayinsight {

enum class Platform { Booking };

std::string_view to_string(Platform p) noexcept;

struct Listing {
  std::string url;         // canonical, https, allow-listed host
  std::string listing_id;  // 16 hex chars of sha256(url)
  std::optional<std::string> name;
  Platform platform = Platform::Booking;

  friend bool operator==(const Listing&, const Listing&) = default;
};

/// Canonicalizes a listing URL: lowercases the host, forces https, drops the
/// fragment, the default port and the tracking parameters (aid, label, sid,
/// utm_*). Throws MalformedUrl / UnsupportedHost.
Listing validate_listing_url(std::string_view raw);

std::string listing_id_for(std::string_view canonical_url);

enum class ReviewerType { Solo, Couple, Family, Group, Business, Unknown };

std::string_view to_string(ReviewerType t) noexcept;
/// Accepts the enum names plus common provider spellings ("Solo traveller",
/// "Group of friends", "Business traveller"...). Unrecognized -> Unknown.
ReviewerType parse_reviewer_type(std::string_view text);

struct ReviewerInfo {
  std::optional<std::string> username;
  std::optional<std::string> country;  // ISO 3166 alpha-2, upper case
  std::optional<ReviewerType> reviewer_type;

  friend bool operator==(const ReviewerInfo&, const ReviewerInfo&) = default;
};

struct StayInfo {
  int nights = 0;
  Date check_in;
  Date check_out;

  friend bool operator==(const StayInfo&, const StayInfo&) = default;
};

struct Review {
  std::string review_id;
  std::string listing_id;
  Date published_at;
  double score = 0.0;  // 0..10
  std::optional<std::string> title;
  std::optional<std::string> positive_text;
  std::optional<std::string> negative_text;
  std::optional<std::string> manager_reply;
  ReviewerInfo reviewer;
  std::optional<StayInfo> stay;
  std::int64_t likes = 0;
  std::vector<std::string> photo_urls;
  std::optional<std::string> language_hint;

  friend bool operator==(const Review&, const Review&) = default;
};

/// Checks every Review invariant; throws ScoreOutOfRange or InvalidReview.
void validate_review(const Review& review, Date today);

/// Corpus default order: published_at descending, then review_id ascending.
bool default_order_less(const Review& a, const Review& b);
void sort_default(std::vector<Review>& reviews);

struct ReviewCorpus {
  Listing listing;
  std::vector<Review> reviews;
  TimePoint fetched_at;
  std::string source;

  const Review* find(std::string_view review_id) const;
};

/// Builds a corpus in default order. Throws InvalidReview on duplicate ids or
/// reviews belonging to another listing.
ReviewCorpus make_corpus(Listing listing, std::vector<Review> reviews, TimePoint fetched_at, std::string source);

struct CorpusStats {
  std::size_t count = 0;
  std::optional<double> mean_score;  // absent for an empty corpus
  std::array<std::size_t, 10> score_histogram{};  // [0,1) ... [8,9), [9,10]
  std::optional<Date> earliest;
  std::optional<Date> latest;
};

CorpusStats corpus_stats(const ReviewCorpus& corpus);

}  // namespace stayinsight
