#include "stayinsight/records.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "stayinsight/error.hpp"
#include "stayinsight/text.hpp"

namespace stayinsight {

using nlohmann::json;

std::string_view to_string(RecordSchema s) noexcept {
  switch (s) {
    case RecordSchema::Native: return "native";
    case RecordSchema::Arel: return "arel";
    case RecordSchema::Caprolok: return "caprolok";
  }
  return "native";
}

RecordSchema parse_record_schema(std::string_view name) {
  if (name == "native") return RecordSchema::Native;
  if (name == "arel") return RecordSchema::Arel;
  if (name == "caprolok") return RecordSchema::Caprolok;
  throw Error(ErrorCode::UnknownProvider, "unknown record schema '" + std::string(name) + "'");
}

namespace {

Error mismatch(RecordSchema schema, const std::string& why) {
  return Error(ErrorCode::SchemaMismatch, std::string(to_string(schema)) + " record: " + why);
}

const json* child(const json& obj, std::string_view key) {
  if (!obj.is_object()) return nullptr;
  const auto it = obj.find(std::string(key));
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

const json& require_object(const json& obj, std::string_view key, RecordSchema schema) {
  const json* v = child(obj, key);
  if (v == nullptr || !v->is_object()) throw mismatch(schema, "missing object field '" + std::string(key) + "'");
  return *v;
}

std::optional<std::string> optional_text(const json& obj, std::string_view key, RecordSchema schema) {
  const json* v = child(obj, key);
  if (v == nullptr) return std::nullopt;
  if (!v->is_string()) throw mismatch(schema, "field '" + std::string(key) + "' must be a string");
  const std::string_view trimmed = text::trim(v->get_ref<const std::string&>());
  if (trimmed.empty()) return std::nullopt;
  return std::string(trimmed);
}

std::string required_id(const json& obj, std::string_view key, RecordSchema schema) {
  const json* v = child(obj, key);
  if (v == nullptr) throw mismatch(schema, "missing required field '" + std::string(key) + "'");
  if (v->is_number_integer()) return std::to_string(v->get<std::int64_t>());
  if (v->is_string() && !text::trim(v->get_ref<const std::string&>()).empty()) {
    return std::string(text::trim(v->get_ref<const std::string&>()));
  }
  throw mismatch(schema, "field '" + std::string(key) + "' must be a non-empty string or integer");
}

Date required_date(const json& obj, std::string_view key, RecordSchema schema) {
  const json* v = child(obj, key);
  if (v == nullptr || !v->is_string()) throw mismatch(schema, "missing date field '" + std::string(key) + "'");
  std::string_view s = v->get_ref<const std::string&>();
  // Providers sometimes ship full timestamps; the calendar date is what we keep.
  if (s.size() > 10 && s[10] == 'T') s = s.substr(0, 10);
  try {
    return parse_date(s);
  } catch (const Error&) {
    throw mismatch(schema, "field '" + std::string(key) + "' is not a YYYY-MM-DD date");
  }
}

double required_score(const json& obj, std::string_view key, RecordSchema schema, double scale_max) {
  const json* v = child(obj, key);
  double raw = 0.0;
  if (v != nullptr && v->is_number()) {
    raw = v->get<double>();
  } else if (v != nullptr && v->is_string()) {
    try {
      std::size_t used = 0;
      const std::string& s = v->get_ref<const std::string&>();
      raw = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw mismatch(schema, "field '" + std::string(key) + "' is not numeric");
    }
  } else {
    throw mismatch(schema, "missing score field '" + std::string(key) + "'");
  }
  if (!std::isfinite(raw) || raw < 0.0 || raw > scale_max) {
    throw Error(ErrorCode::ScoreOutOfRange, std::string(to_string(schema)) + " record: score " + v->dump() +
                                                " outside [0," + std::to_string(scale_max) + "]");
  }
  return scale_max == 10.0 ? raw : raw * 10.0 / scale_max;
}

std::int64_t optional_count(const json& obj, std::string_view key, RecordSchema schema) {
  const json* v = child(obj, key);
  if (v == nullptr) return 0;
  if (!v->is_number_integer() || v->get<std::int64_t>() < 0) {
    throw mismatch(schema, "field '" + std::string(key) + "' must be a non-negative integer");
  }
  return v->get<std::int64_t>();
}

std::vector<std::string> string_list(const json& obj, std::string_view key, RecordSchema schema) {
  std::vector<std::string> out;
  const json* v = child(obj, key);
  if (v == nullptr) return out;
  if (!v->is_array()) throw mismatch(schema, "field '" + std::string(key) + "' must be an array");
  for (const auto& item : *v) {
    if (!item.is_string()) throw mismatch(schema, "field '" + std::string(key) + "' must contain strings");
    if (!text::trim(item.get_ref<const std::string&>()).empty()) out.emplace_back(item.get<std::string>());
  }
  return out;
}

std::optional<std::string> country_code(const json& obj, std::string_view key, RecordSchema schema) {
  auto c = optional_text(obj, key, schema);
  if (c) {
    for (char& ch : *c) {
      if (ch >= 'a' && ch <= 'z') ch = static_cast<char>(ch - 'a' + 'A');
    }
  }
  return c;
}

void put_optional(json& j, const char* key, const std::optional<std::string>& v) {
  if (v) j[key] = *v;
}

double score_on_scale(double score, double scale_max) {
  return scale_max == 10.0 ? score : score * scale_max / 10.0;
}

Review normalize_native(const json& raw, const NormalizeOptions& opt) {
  constexpr auto S = RecordSchema::Native;
  Review r;
  r.review_id = required_id(raw, "review_id", S);
  r.listing_id = opt.listing_id.empty() ? required_id(raw, "listing_id", S) : opt.listing_id;
  r.published_at = required_date(raw, "published_at", S);
  r.score = required_score(raw, "score", S, opt.score_scale_max);
  r.title = optional_text(raw, "title", S);
  r.positive_text = optional_text(raw, "positive_text", S);
  r.negative_text = optional_text(raw, "negative_text", S);
  r.manager_reply = optional_text(raw, "manager_reply", S);
  if (const json* rv = child(raw, "reviewer")) {
    r.reviewer.username = optional_text(*rv, "username", S);
    r.reviewer.country = country_code(*rv, "country", S);
    if (auto t = optional_text(*rv, "reviewer_type", S)) r.reviewer.reviewer_type = parse_reviewer_type(*t);
  }
  if (const json* stay = child(raw, "stay")) {
    r.stay = StayInfo{static_cast<int>(optional_count(*stay, "nights", S)), required_date(*stay, "check_in", S),
                      required_date(*stay, "check_out", S)};
  }
  r.likes = optional_count(raw, "likes", S);
  r.photo_urls = string_list(raw, "photo_urls", S);
  r.language_hint = optional_text(raw, "language_hint", S);
  return r;
}

Review normalize_arel(const json& raw, const NormalizeOptions& opt) {
  constexpr auto S = RecordSchema::Arel;
  Review r;
  r.review_id = required_id(raw, "reviewId", S);
  r.listing_id = opt.listing_id;
  r.published_at = required_date(raw, "reviewDate", S);
  r.score = required_score(raw, "rating", S, opt.score_scale_max);
  r.title = optional_text(raw, "reviewTitle", S);
  r.positive_text = optional_text(raw, "likedText", S);
  r.negative_text = optional_text(raw, "dislikedText", S);
  r.manager_reply = optional_text(raw, "propertyResponse", S);
  return r;
}

Review normalize_caprolok(const json& raw, const NormalizeOptions& opt) {
  constexpr auto S = RecordSchema::Caprolok;
  const json& body = require_object(raw, "review", S);
  Review r;
  r.review_id = required_id(raw, "review_id", S);
  r.listing_id = opt.listing_id;
  r.published_at = required_date(body, "published", S);
  r.score = required_score(body, "score", S, opt.score_scale_max);
  r.title = optional_text(body, "title", S);
  r.positive_text = optional_text(body, "positive", S);
  r.negative_text = optional_text(body, "negative", S);
  r.manager_reply = optional_text(body, "hotel_reply", S);
  r.likes = optional_count(body, "likes", S);
  r.photo_urls = string_list(body, "photos", S);
  if (const json* rv = child(raw, "reviewer")) {
    r.reviewer.username = optional_text(*rv, "username", S);
    r.reviewer.country = country_code(*rv, "country", S);
    if (auto t = optional_text(*rv, "type", S)) r.reviewer.reviewer_type = parse_reviewer_type(*t);
    r.language_hint = optional_text(*rv, "language", S);
  }
  if (const json* booking = child(raw, "booking")) {
    const json* nights = child(*booking, "nights");
    if (nights == nullptr || !nights->is_number_integer()) throw mismatch(S, "booking.nights must be an integer");
    r.stay = StayInfo{nights->get<int>(), required_date(*booking, "checkin", S), required_date(*booking, "checkout", S)};
  }
  return r;
}

}  // namespace

Review normalize_review(const json& raw, RecordSchema schema, const NormalizeOptions& options) {
  if (!raw.is_object()) throw mismatch(schema, "record is not an object");
  if (!(options.score_scale_max > 0.0)) throw Error(ErrorCode::InvalidArgument, "score scale must be positive");
  Review r;
  switch (schema) {
    case RecordSchema::Native: r = normalize_native(raw, options); break;
    case RecordSchema::Arel: r = normalize_arel(raw, options); break;
    case RecordSchema::Caprolok: r = normalize_caprolok(raw, options); break;
  }
  validate_review(r, options.today);
  return r;
}

json to_record(const Review& r, RecordSchema schema, double scale_max) {
  json j = json::object();
  const double score = score_on_scale(r.score, scale_max);
  switch (schema) {
    case RecordSchema::Native: {
      j["review_id"] = r.review_id;
      j["listing_id"] = r.listing_id;
      j["published_at"] = format_date(r.published_at);
      j["score"] = score;
      put_optional(j, "title", r.title);
      put_optional(j, "positive_text", r.positive_text);
      put_optional(j, "negative_text", r.negative_text);
      put_optional(j, "manager_reply", r.manager_reply);
      json reviewer = json::object();
      put_optional(reviewer, "username", r.reviewer.username);
      put_optional(reviewer, "country", r.reviewer.country);
      if (r.reviewer.reviewer_type) reviewer["reviewer_type"] = std::string(to_string(*r.reviewer.reviewer_type));
      j["reviewer"] = reviewer;
      if (r.stay) {
        j["stay"] = {{"nights", r.stay->nights},
                     {"check_in", format_date(r.stay->check_in)},
                     {"check_out", format_date(r.stay->check_out)}};
      }
      j["likes"] = r.likes;
      j["photo_urls"] = r.photo_urls;
      put_optional(j, "language_hint", r.language_hint);
      break;
    }
    case RecordSchema::Arel: {
      j["reviewId"] = r.review_id;
      j["reviewDate"] = format_date(r.published_at);
      j["rating"] = score;
      put_optional(j, "reviewTitle", r.title);
      put_optional(j, "likedText", r.positive_text);
      put_optional(j, "dislikedText", r.negative_text);
      put_optional(j, "propertyResponse", r.manager_reply);
      break;
    }
    case RecordSchema::Caprolok: {
      j["review_id"] = r.review_id;
      json reviewer = json::object();
      put_optional(reviewer, "username", r.reviewer.username);
      put_optional(reviewer, "country", r.reviewer.country);
      if (r.reviewer.reviewer_type) reviewer["type"] = std::string(to_string(*r.reviewer.reviewer_type));
      put_optional(reviewer, "language", r.language_hint);
      j["reviewer"] = reviewer;
      if (r.stay) {
        j["booking"] = {{"nights", r.stay->nights},
                        {"checkin", format_date(r.stay->check_in)},
                        {"checkout", format_date(r.stay->check_out)}};
      }
      json body = json::object();
      body["published"] = format_date(r.published_at);
      body["score"] = score;
      put_optional(body, "title", r.title);
      put_optional(body, "positive", r.positive_text);
      put_optional(body, "negative", r.negative_text);
      put_optional(body, "hotel_reply", r.manager_reply);
      body["likes"] = r.likes;
      body["photos"] = r.photo_urls;
      j["review"] = body;
      break;
    }
  }
  return j;
}

json listing_to_json(const Listing& listing) {
  json j = {{"url", listing.url},
            {"listing_id", listing.listing_id},
            {"platform", std::string(to_string(listing.platform))}};
  if (listing.name) j["name"] = *listing.name;
  return j;
}

Listing listing_from_json(const json& j) {
  if (!j.is_object() || !j.contains("url")) throw mismatch(RecordSchema::Native, "listing header lacks url");
  Listing listing = validate_listing_url(j.at("url").get<std::string>());
  if (j.contains("listing_id") && j.at("listing_id").get<std::string>() != listing.listing_id) {
    throw mismatch(RecordSchema::Native, "listing_id does not match canonical url");
  }
  if (j.contains("name") && j.at("name").is_string()) listing.name = j.at("name").get<std::string>();
  return listing;
}

std::string serialize_corpus(const ReviewCorpus& corpus) {
  std::string out;
  json header = {{"listing", listing_to_json(corpus.listing)},
                 {"fetched_at", format_timestamp(corpus.fetched_at)},
                 {"source", corpus.source}};
  out += header.dump();
  out += '\n';
  for (const auto& r : corpus.reviews) {
    out += to_record(r, RecordSchema::Native).dump();
    out += '\n';
  }
  return out;
}

ReviewCorpus parse_corpus(std::string_view document) {
  std::istringstream in{std::string(document)};
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::SchemaMismatch, "corpus document is empty");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("corpus header is not JSON: ") + e.what());
  }
  if (!header.is_object() || !header.contains("listing") || !header.contains("fetched_at") ||
      !header.contains("source")) {
    throw Error(ErrorCode::SchemaMismatch, "corpus header needs listing, fetched_at and source");
  }
  Listing listing = listing_from_json(header.at("listing"));
  const TimePoint fetched_at = parse_timestamp(header.at("fetched_at").get<std::string>());
  NormalizeOptions opt{listing.listing_id, date_of(fetched_at), 10.0};
  std::vector<Review> reviews;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaMismatch, "corpus line " + std::to_string(line_no) + " is not JSON: " + e.what());
    }
    Review r = normalize_review(record, RecordSchema::Native, NormalizeOptions{"", opt.today, 10.0});
    if (r.listing_id != listing.listing_id) {
      throw Error(ErrorCode::SchemaMismatch, "corpus line " + std::to_string(line_no) + " has foreign listing_id");
    }
    reviews.push_back(std::move(r));
  }
  return make_corpus(std::move(listing), std::move(reviews), fetched_at, header.at("source").get<std::string>());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCode::Io, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_corpus_file(const std::filesystem::path& path, const ReviewCorpus& corpus) {
  write_file_atomic(path, serialize_corpus(corpus));
}

ReviewCorpus read_corpus_file(const std::filesystem::path& path) { return parse_corpus(read_file(path)); }

}  // namespace stayinsight
