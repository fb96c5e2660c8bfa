#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace tweetsat {

// Sentiment class id. Ordering is alphabetical and every downstream tie-break
// resolves to the lowest id.
using ClassId = int;
inline constexpr int kNumClasses = 3;
inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "negative", "neutral", "positive"};

// Header of the public airline-sentiment CSV, in file order.
inline const std::vector<std::string>& tweets_columns() {
  static const std::vector<std::string> columns = {
      "tweet_id",       "airline_sentiment",
      "airline_sentiment_confidence",
      "negativereason", "negativereason_confidence",
      "airline",        "airline_sentiment_gold",
      "name",           "negativereason_gold",
      "retweet_count",  "text",
      "tweet_coord",    "tweet_created",
      "tweet_location", "user_timezone"};
  return columns;
}

struct RawCorpus {
  std::vector<std::string> column_names;
  // Empty string is a null cell.
  std::vector<std::vector<std::string>> rows;

  std::size_t row_count() const { return rows.size(); }
  std::optional<std::size_t> column_index(std::string_view name) const;
  // Throws Error when the column is absent.
  std::size_t require_column(std::string_view name) const;
  const std::string& cell(std::size_t row, std::string_view column) const;
};

// Reads an RFC-4180 CSV with a header row. When expected_columns is
// non-empty the header must match it exactly (order included).
RawCorpus load_corpus(const std::filesystem::path& path,
                      std::span<const std::string> expected_columns = {});
RawCorpus parse_corpus(std::istream& in,
                       std::span<const std::string> expected_columns = {},
                       std::string_view source = "<stream>");

// Keeps only the named columns, in the given order.
RawCorpus project(const RawCorpus& corpus, std::span<const std::string> columns);

struct CorpusSummary {
  std::size_t row_count = 0;
  std::map<std::string, std::size_t> per_airline_counts;
  std::map<ClassId, std::size_t> per_class_counts;
  // Column order follows the corpus header.
  std::vector<std::pair<std::string, double>> null_fraction;

  double null_fraction_of(std::string_view column) const;
};

CorpusSummary corpus_summary(const RawCorpus& corpus);
nlohmann::ordered_json to_json(const CorpusSummary& summary);

ClassId encode_label(std::string_view sentiment);
std::string_view class_name(ClassId id);

struct Coordinate {
  double lat = 0.0;
  double lon = 0.0;
  bool operator==(const Coordinate&) const = default;
};

// Wall-clock fields as written in the dataset, e.g. "2015-02-24 11:35:52 -0800".
struct Timestamp {
  int year = 0, month = 0, day = 0;
  int hour = 0, minute = 0, second = 0;
  int utc_offset_minutes = 0;

  // 0 = Monday ... 6 = Sunday.
  int weekday() const;
  double hour_of_day() const { return hour + minute / 60.0 + second / 3600.0; }
  bool operator==(const Timestamp&) const = default;
};

std::optional<Timestamp> parse_timestamp(std::string_view text);
// Parses "[lat, lon]". Empty input yields nullopt; anything else malformed or
// out of range throws Error.
std::optional<Coordinate> parse_coordinate(std::string_view text);

struct TweetRecord {
  ClassId label = 0;
  std::string text_raw;
  std::string airline;
  std::string user_name;
  std::int64_t retweet_count = 0;
  std::optional<Coordinate> tweet_coord;
  std::optional<Timestamp> created_at;
  std::optional<std::string> location;
  std::optional<std::string> timezone;
};

struct PrunePolicy {
  // A column is dropped when its null fraction is strictly above this.
  double null_threshold = 0.8;
  std::set<std::string> keep_despite_null = {"tweet_coord"};
  // negativereason is only populated for negative tweets, so it encodes the
  // label and is dropped alongside the id and confidence columns.
  std::set<std::string> always_drop = {"tweet_id", "airline_sentiment_confidence",
                                       "negativereason_confidence", "negativereason"};
};

struct PrunedCorpus {
  std::vector<std::string> retained_columns;
  std::vector<TweetRecord> records;

  bool retains(std::string_view column) const;
};

// Decides which columns survive the policy.
std::vector<std::string> retained_columns(const RawCorpus& corpus,
                                          const PrunePolicy& policy);

// airline_sentiment and text must survive the policy. Typed fields whose
// column was dropped keep their defaults.
PrunedCorpus prune_columns(const RawCorpus& corpus, const PrunePolicy& policy = {});

}  // namespace tweetsat
