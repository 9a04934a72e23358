#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "stayinsight/review.hpp"

namespace stayinsight {

/// Record shapes understood by normalize_review.
///
/// Native    field names exactly as Review (the corpus file format).
/// Arel      flat record: reviewId, reviewDate, rating, reviewTitle,
///           likedText, dislikedText, propertyResponse.
/// Caprolok  nested record: review_id, hotel_id, room_id, reviewer{...},
///           booking{nights, checkin, checkout}, review{published, score,
///           title, positive, negative, hotel_reply, likes, photos}.
enum class RecordSchema { Native, Arel, Caprolok };

std::string_view to_string(RecordSchema s) noexcept;
RecordSchema parse_record_schema(std::string_view name);

struct NormalizeOptions {
  std::string listing_id;
  Date today;
  // Upper bound of the provider's score scale; scores are rescaled to 0..10.
  double score_scale_max = 10.0;
};

/// Maps one provider record onto the unified Review. Absent, null and blank
/// optional fields become std::nullopt. Throws SchemaMismatch,
/// ScoreOutOfRange or InvalidReview.
Review normalize_review(const nlohmann::json& raw, RecordSchema schema, const NormalizeOptions& options);

/// Inverse of normalize_review for the fields the schema can carry.
nlohmann::json to_record(const Review& review, RecordSchema schema, double score_scale_max = 10.0);

nlohmann::json listing_to_json(const Listing& listing);
Listing listing_from_json(const nlohmann::json& j);

/// Line-delimited corpus document: a header line
/// {"listing":{...},"fetched_at":"...","source":"..."} followed by one native
/// review record per line. Output is byte-deterministic.
std::string serialize_corpus(const ReviewCorpus& corpus);
ReviewCorpus parse_corpus(std::string_view document);

void write_corpus_file(const std::filesystem::path& path, const ReviewCorpus& corpus);
ReviewCorpus read_corpus_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary sibling and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace stayinsight
