#include "tweetsat/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>

#include "tweetsat/csv.hpp"
#include "tweetsat/error.hpp"

namespace tweetsat {
namespace {

std::string join(std::span<const std::string> items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ", ";
    out += s;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && !s.empty();
}

void check_header(std::span<const std::string> header,
                  std::span<const std::string> expected, std::string_view source) {
  if (expected.empty()) return;
  if (std::equal(header.begin(), header.end(), expected.begin(), expected.end())) return;
  std::vector<std::string> missing, extra;
  for (const auto& e : expected) {
    if (std::find(header.begin(), header.end(), e) == header.end()) missing.push_back(e);
  }
  for (const auto& h : header) {
    if (std::find(expected.begin(), expected.end(), h) == expected.end()) extra.push_back(h);
  }
  std::string msg = std::string(source) + ": header mismatch";
  if (!missing.empty()) msg += "; missing columns: " + join(missing);
  if (!extra.empty()) msg += "; unexpected columns: " + join(extra);
  if (missing.empty() && extra.empty()) msg += "; column order differs";
  throw Error(msg);
}

}  // namespace

std::optional<std::size_t> RawCorpus::column_index(std::string_view name) const {
  auto it = std::find(column_names.begin(), column_names.end(), name);
  if (it == column_names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - column_names.begin());
}

std::size_t RawCorpus::require_column(std::string_view name) const {
  if (auto idx = column_index(name)) return *idx;
  throw Error("required column '" + std::string(name) + "' is absent");
}

const std::string& RawCorpus::cell(std::size_t row, std::string_view column) const {
  return rows.at(row).at(require_column(column));
}

RawCorpus parse_corpus(std::istream& in, std::span<const std::string> expected_columns,
                       std::string_view source) {
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header) throw Error(std::string(source) + ": missing header row");
  // Tolerate a UTF-8 byte-order mark on the first header cell.
  if (!header->empty() && header->front().starts_with("\xEF\xBB\xBF")) {
    header->front().erase(0, 3);
  }
  check_header(*header, expected_columns, source);

  RawCorpus corpus;
  corpus.column_names = std::move(*header);
  while (auto row = reader.next()) {
    // A blank trailing line parses as a single empty cell.
    if (row->size() == 1 && row->front().empty() && in.peek() == EOF) break;
    if (row->size() != corpus.column_names.size()) {
      throw Error(std::string(source) + ": ragged row at data row index " +
                  std::to_string(corpus.rows.size()) + " (line " +
                  std::to_string(reader.record_line()) + "): expected " +
                  std::to_string(corpus.column_names.size()) + " cells, found " +
                  std::to_string(row->size()));
    }
    corpus.rows.push_back(std::move(*row));
  }
  return corpus;
}

RawCorpus load_corpus(const std::filesystem::path& path,
                      std::span<const std::string> expected_columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corpus file: " + path.string());
  return parse_corpus(in, expected_columns, path.string());
}

RawCorpus project(const RawCorpus& corpus, std::span<const std::string> columns) {
  std::vector<std::size_t> idx;
  for (const auto& c : columns) idx.push_back(corpus.require_column(c));
  RawCorpus out;
  out.column_names.assign(columns.begin(), columns.end());
  out.rows.reserve(corpus.rows.size());
  for (const auto& row : corpus.rows) {
    std::vector<std::string> r;
    r.reserve(idx.size());
    for (auto i : idx) r.push_back(row[i]);
    out.rows.push_back(std::move(r));
  }
  return out;
}

double CorpusSummary::null_fraction_of(std::string_view column) const {
  for (const auto& [name, frac] : null_fraction) {
    if (name == column) return frac;
  }
  throw Error("no null fraction for column '" + std::string(column) + "'");
}

CorpusSummary corpus_summary(const RawCorpus& corpus) {
  const auto airline_col = corpus.require_column("airline");
  const auto label_col = corpus.require_column("airline_sentiment");

  CorpusSummary s;
  s.row_count = corpus.row_count();
  std::vector<std::size_t> nulls(corpus.column_names.size(), 0);
  for (std::size_t r = 0; r < corpus.rows.size(); ++r) {
    const auto& row = corpus.rows[r];
    ++s.per_airline_counts[row[airline_col]];
    try {
      ++s.per_class_counts[encode_label(row[label_col])];
    } catch (const Error& e) {
      throw Error("row " + std::to_string(r) + ": " + e.what());
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (row[c].empty()) ++nulls[c];
    }
  }
  for (std::size_t c = 0; c < corpus.column_names.size(); ++c) {
    const double frac =
        s.row_count == 0 ? 0.0 : static_cast<double>(nulls[c]) / s.row_count;
    s.null_fraction.emplace_back(corpus.column_names[c], frac);
  }
  return s;
}

nlohmann::ordered_json to_json(const CorpusSummary& summary) {
  nlohmann::ordered_json j;
  j["row_count"] = summary.row_count;
  auto& airlines = j["per_airline_counts"] = nlohmann::ordered_json::object();
  for (const auto& [name, n] : summary.per_airline_counts) airlines[name] = n;
  auto& classes = j["per_class_counts"] = nlohmann::ordered_json::object();
  for (const auto& [id, n] : summary.per_class_counts) {
    classes[std::string(class_name(id))] = n;
  }
  auto& nulls = j["null_fraction"] = nlohmann::ordered_json::object();
  for (const auto& [name, frac] : summary.null_fraction) nulls[name] = frac;
  return j;
}

ClassId encode_label(std::string_view sentiment) {
  std::string norm(trim(sentiment));
  std::transform(norm.begin(), norm.end(), norm.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (int id = 0; id < kNumClasses; ++id) {
    if (norm == kClassNames[id]) return id;
  }
  throw Error("unknown sentiment label '" + std::string(sentiment) + "'");
}

std::string_view class_name(ClassId id) {
  if (id < 0 || id >= kNumClasses) throw Error("class id out of range: " + std::to_string(id));
  return kClassNames[id];
}

int Timestamp::weekday() const {
  // days_from_civil (Howard Hinnant); 1970-01-01 was a Thursday.
  const int y = year - (month <= 2 ? 1 : 0);
  const int era = (y >= 0 ? y : y - 399) / 400;
  const int yoe = y - era * 400;
  const int mp = (month + 9) % 12;
  const int doy = (153 * mp + 2) / 5 + day - 1;
  const int doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  const long days = static_cast<long>(era) * 146097 + doe - 719468;
  const long wd = (days + 3) % 7;  // Monday = 0
  return static_cast<int>(wd < 0 ? wd + 7 : wd);
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  text = trim(text);
  // YYYY-MM-DD HH:MM:SS [+-]HHMM
  if (text.size() < 19) return std::nullopt;
  Timestamp t;
  auto field = [&](std::size_t pos, std::size_t len, int& out) {
    return parse_number(text.substr(pos, len), out);
  };
  if (!(field(0, 4, t.year) && text[4] == '-' && field(5, 2, t.month) && text[7] == '-' &&
        field(8, 2, t.day) && text[10] == ' ' && field(11, 2, t.hour) && text[13] == ':' &&
        field(14, 2, t.minute) && text[16] == ':' && field(17, 2, t.second))) {
    return std::nullopt;
  }
  if (t.month < 1 || t.month > 12 || t.day < 1 || t.day > 31 || t.hour > 23 ||
      t.minute > 59 || t.second > 60 || t.hour < 0 || t.minute < 0 || t.second < 0) {
    return std::nullopt;
  }
  auto rest = trim(text.substr(19));
  if (!rest.empty()) {
    if (rest.size() != 5 || (rest[0] != '+' && rest[0] != '-')) return std::nullopt;
    int hh = 0, mm = 0;
    if (!parse_number(rest.substr(1, 2), hh) || !parse_number(rest.substr(3, 2), mm)) {
      return std::nullopt;
    }
    t.utc_offset_minutes = (rest[0] == '-' ? -1 : 1) * (hh * 60 + mm);
  }
  return t;
}

std::optional<Coordinate> parse_coordinate(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  auto fail = [&]() -> Error {
    return Error("malformed coordinate '" + std::string(text) + "'");
  };
  if (text.front() != '[' || text.back() != ']') throw fail();
  auto body = text.substr(1, text.size() - 2);
  auto comma = body.find(',');
  if (comma == std::string_view::npos) throw fail();
  Coordinate c;
  if (!parse_number(body.substr(0, comma), c.lat) ||
      !parse_number(body.substr(comma + 1), c.lon)) {
    throw fail();
  }
  if (c.lat < -90.0 || c.lat > 90.0 || c.lon < -180.0 || c.lon > 180.0) {
    throw Error("coordinate out of range '" + std::string(text) + "'");
  }
  return c;
}

bool PrunedCorpus::retains(std::string_view column) const {
  return std::find(retained_columns.begin(), retained_columns.end(), column) !=
         retained_columns.end();
}

std::vector<std::string> retained_columns(const RawCorpus& corpus,
                                          const PrunePolicy& policy) {
  std::vector<std::size_t> nulls(corpus.column_names.size(), 0);
  for (const auto& row : corpus.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (row[c].empty()) ++nulls[c];
    }
  }
  std::vector<std::string> keep;
  for (std::size_t c = 0; c < corpus.column_names.size(); ++c) {
    const auto& name = corpus.column_names[c];
    if (policy.always_drop.contains(name)) continue;
    const double frac = corpus.rows.empty()
                            ? 0.0
                            : static_cast<double>(nulls[c]) / corpus.rows.size();
    if (frac > policy.null_threshold && !policy.keep_despite_null.contains(name)) continue;
    keep.push_back(name);
  }
  return keep;
}

PrunedCorpus prune_columns(const RawCorpus& corpus, const PrunePolicy& policy) {
  PrunedCorpus out;
  out.retained_columns = retained_columns(corpus, policy);
  for (const char* required : {"airline_sentiment", "text"}) {
    if (!out.retains(required)) {
      throw Error(std::string("prune policy drops required column '") + required + "'");
    }
  }

  auto idx = [&](std::string_view name) -> std::optional<std::size_t> {
    if (!out.retains(name)) return std::nullopt;
    return corpus.column_index(name);
  };
  const auto label_col = idx("airline_sentiment");
  const auto text_col = idx("text");
  const auto airline_col = idx("airline");
  const auto name_col = idx("name");
  const auto retweet_col = idx("retweet_count");
  const auto coord_col = idx("tweet_coord");
  const auto created_col = idx("tweet_created");
  const auto location_col = idx("tweet_location");
  const auto tz_col = idx("user_timezone");

  out.records.reserve(corpus.rows.size());
  for (std::size_t r = 0; r < corpus.rows.size(); ++r) {
    const auto& row = corpus.rows[r];
    auto bad = [&](std::string_view column, const std::string& why) {
      return Error("row " + std::to_string(r) + ", column '" + std::string(column) +
                   "': " + why);
    };
    TweetRecord rec;
    try {
      rec.label = encode_label(row[*label_col]);
    } catch (const Error& e) {
      throw bad("airline_sentiment", e.what());
    }
    rec.text_raw = row[*text_col];
    if (airline_col) rec.airline = row[*airline_col];
    if (name_col) rec.user_name = row[*name_col];
    if (retweet_col) {
      const auto& cell = row[*retweet_col];
      if (!cell.empty() && (!parse_number(cell, rec.retweet_count) || rec.retweet_count < 0)) {
        throw bad("retweet_count", "not a non-negative integer: '" + cell + "'");
      }
    }
    if (coord_col) {
      try {
        rec.tweet_coord = parse_coordinate(row[*coord_col]);
      } catch (const Error& e) {
        throw bad("tweet_coord", e.what());
      }
    }
    if (created_col) rec.created_at = parse_timestamp(row[*created_col]);
    if (location_col && !row[*location_col].empty()) rec.location = row[*location_col];
    if (tz_col && !row[*tz_col].empty()) rec.timezone = row[*tz_col];
    out.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace tweetsat
