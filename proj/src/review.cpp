#include "stayinsight/review.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "stayinsight/digest.hpp"
#include "stayinsight/error.hpp"
#include "stayinsight/text.hpp"

namespace stayinsight {

std::string_view to_string(Platform p) noexcept {
  switch (p) {
    case Platform::Booking: return "booking";
  }
  return "booking";
}

namespace {

// Hosts are matched as the registrable domain or any subdomain of it.
constexpr std::string_view kAllowedDomains[] = {"booking.com"};

bool is_tracking_param(std::string_view key) {
  const std::string lower = text::to_lower_ascii(key);
  return lower == "aid" || lower == "label" || lower == "sid" || lower.rfind("utm_", 0) == 0;
}

bool host_allowed(std::string_view host) {
  for (std::string_view domain : kAllowedDomains) {
    if (host == domain) return true;
    if (host.size() > domain.size() && host.ends_with(domain) && host[host.size() - domain.size() - 1] == '.') {
      return true;
    }
  }
  return false;
}

bool valid_host_chars(std::string_view host) {
  if (host.empty() || host.front() == '.' || host.back() == '.') return false;
  return std::all_of(host.begin(), host.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '.';
  });
}

}  // namespace

std::string listing_id_for(std::string_view canonical_url) { return sha256_hex(canonical_url).substr(0, 16); }

Listing validate_listing_url(std::string_view raw) {
  const std::string_view input = text::trim(raw);
  auto malformed = [&](std::string_view why) {
    return Error(ErrorCode::MalformedUrl, "malformed listing url '" + std::string(input) + "': " + std::string(why));
  };

  const auto scheme_end = input.find("://");
  if (scheme_end == std::string_view::npos || scheme_end == 0) throw malformed("missing scheme");
  const std::string scheme = text::to_lower_ascii(input.substr(0, scheme_end));
  if (scheme != "https" && scheme != "http") throw malformed("scheme must be http(s)");

  std::string_view rest = input.substr(scheme_end + 3);
  if (rest.find_first_of(" \t\r\n") != std::string_view::npos) throw malformed("whitespace in url");

  std::string_view fragmentless = rest.substr(0, rest.find('#'));
  const auto authority_end = fragmentless.find_first_of("/?");
  std::string_view authority = fragmentless.substr(0, authority_end);
  std::string_view path_and_query =
      authority_end == std::string_view::npos ? std::string_view{} : fragmentless.substr(authority_end);

  if (authority.find('@') != std::string_view::npos) throw malformed("credentials are not allowed");
  std::string_view host_part = authority;
  std::string_view port;
  if (const auto colon = authority.rfind(':'); colon != std::string_view::npos) {
    host_part = authority.substr(0, colon);
    port = authority.substr(colon + 1);
    if (port.empty() || !std::all_of(port.begin(), port.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw malformed("bad port");
    }
  }
  const std::string host = text::to_lower_ascii(host_part);
  if (!valid_host_chars(host)) throw malformed("bad host");
  if (!host_allowed(host)) {
    throw Error(ErrorCode::UnsupportedHost, "host '" + host + "' is not a supported listing platform");
  }
  if (!port.empty() && port != "443" && port != "80") throw malformed("unexpected port");

  std::string_view path = path_and_query.substr(0, path_and_query.find('?'));
  std::string_view query;
  if (const auto q = path_and_query.find('?'); q != std::string_view::npos) query = path_and_query.substr(q + 1);
  if (path.empty()) path = "/";

  std::string kept_query;
  while (!query.empty()) {
    const auto amp = query.find('&');
    std::string_view pair = query.substr(0, amp);
    query = amp == std::string_view::npos ? std::string_view{} : query.substr(amp + 1);
    if (pair.empty()) continue;
    if (is_tracking_param(pair.substr(0, pair.find('=')))) continue;
    if (!kept_query.empty()) kept_query += '&';
    kept_query += pair;
  }

  Listing listing;
  listing.url = "https://" + host + std::string(path);
  if (!kept_query.empty()) listing.url += "?" + kept_query;
  listing.listing_id = listing_id_for(listing.url);
  listing.platform = Platform::Booking;
  return listing;
}

std::string_view to_string(ReviewerType t) noexcept {
  switch (t) {
    case ReviewerType::Solo: return "solo";
    case ReviewerType::Couple: return "couple";
    case ReviewerType::Family: return "family";
    case ReviewerType::Group: return "group";
    case ReviewerType::Business: return "business";
    case ReviewerType::Unknown: return "unknown";
  }
  return "unknown";
}

ReviewerType parse_reviewer_type(std::string_view raw) {
  const std::string s = text::to_lower_ascii(text::trim(raw));
  if (s.find("solo") != std::string::npos) return ReviewerType::Solo;
  if (s.find("couple") != std::string::npos) return ReviewerType::Couple;
  if (s.find("family") != std::string::npos) return ReviewerType::Family;
  if (s.find("group") != std::string::npos || s.find("friends") != std::string::npos) return ReviewerType::Group;
  if (s.find("business") != std::string::npos) return ReviewerType::Business;
  return ReviewerType::Unknown;
}

void validate_review(const Review& r, Date today) {
  auto invalid = [&](const std::string& why) {
    return Error(ErrorCode::InvalidReview, "review '" + r.review_id + "': " + why);
  };
  if (!std::isfinite(r.score) || r.score < 0.0 || r.score > 10.0) {
    throw Error(ErrorCode::ScoreOutOfRange, "review '" + r.review_id + "': score " + std::to_string(r.score) +
                                                " outside [0,10]");
  }
  if (r.review_id.empty()) throw invalid("empty review_id");
  auto has = [](const std::optional<std::string>& s) { return s.has_value() && !s->empty(); };
  for (const auto* field : {&r.title, &r.positive_text, &r.negative_text, &r.manager_reply, &r.language_hint}) {
    if (field->has_value() && (*field)->empty()) throw invalid("optional text present but empty");
  }
  if (!has(r.title) && !has(r.positive_text) && !has(r.negative_text)) {
    throw invalid("needs at least one of title, positive_text, negative_text");
  }
  if (!r.published_at.ok()) throw invalid("invalid publication date");
  if (std::chrono::sys_days(r.published_at) > std::chrono::sys_days(today)) {
    throw invalid("published_at " + format_date(r.published_at) + " is in the future");
  }
  if (r.likes < 0) throw invalid("negative likes");
  if (r.reviewer.country) {
    const auto& c = *r.reviewer.country;
    if (c.size() != 2 || !std::all_of(c.begin(), c.end(), [](char ch) { return ch >= 'A' && ch <= 'Z'; })) {
      throw invalid("country '" + c + "' is not an ISO alpha-2 code");
    }
  }
  if (r.stay) {
    if (r.stay->nights <= 0) throw invalid("nights must be positive");
    if (!r.stay->check_in.ok() || !r.stay->check_out.ok()) throw invalid("invalid stay dates");
    const int span = days_between(r.stay->check_in, r.stay->check_out);
    if (span <= 0) throw invalid("check_out must be after check_in");
    if (span != r.stay->nights) throw invalid("nights does not match check-in/check-out");
  }
}

bool default_order_less(const Review& a, const Review& b) {
  const auto da = std::chrono::sys_days(a.published_at);
  const auto db = std::chrono::sys_days(b.published_at);
  if (da != db) return da > db;
  return a.review_id < b.review_id;
}

void sort_default(std::vector<Review>& reviews) { std::sort(reviews.begin(), reviews.end(), default_order_less); }

const Review* ReviewCorpus::find(std::string_view review_id) const {
  for (const auto& r : reviews) {
    if (r.review_id == review_id) return &r;
  }
  return nullptr;
}

ReviewCorpus make_corpus(Listing listing, std::vector<Review> reviews, TimePoint fetched_at, std::string source) {
  std::unordered_set<std::string> seen;
  for (const auto& r : reviews) {
    if (!seen.insert(r.review_id).second) {
      throw Error(ErrorCode::InvalidReview, "duplicate review_id '" + r.review_id + "' in corpus");
    }
    if (r.listing_id != listing.listing_id) {
      throw Error(ErrorCode::InvalidReview, "review '" + r.review_id + "' belongs to listing '" + r.listing_id + "'");
    }
  }
  sort_default(reviews);
  return ReviewCorpus{std::move(listing), std::move(reviews), fetched_at, std::move(source)};
}

CorpusStats corpus_stats(const ReviewCorpus& corpus) {
  CorpusStats stats;
  stats.count = corpus.reviews.size();
  if (corpus.reviews.empty()) return stats;
  double sum = 0.0;
  for (const auto& r : corpus.reviews) {
    sum += r.score;
    const auto bucket = std::min<std::size_t>(9, static_cast<std::size_t>(std::floor(r.score)));
    ++stats.score_histogram[bucket];
    const auto day = std::chrono::sys_days(r.published_at);
    if (!stats.earliest || day < std::chrono::sys_days(*stats.earliest)) stats.earliest = r.published_at;
    if (!stats.latest || day > std::chrono::sys_days(*stats.latest)) stats.latest = r.published_at;
  }
  stats.mean_score = sum / static_cast<double>(corpus.reviews.size());
  return stats;
}

}  // namespace stayinsight
