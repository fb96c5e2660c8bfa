#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace tweetsat::csv {

using Row = std::vector<std::string>;

// Streaming RFC-4180 reader: quoted fields may contain separators, doubled
// quotes and line breaks. CRLF and LF line endings are both accepted.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  // Next record, or nullopt at end of input. Throws tweetsat::Error on an
  // unterminated quoted field.
  std::optional<Row> next();

  // 1-based physical line on which the last returned record started.
  std::size_t record_line() const { return record_line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
};

// Quotes a field only when it contains a separator, quote or line break.
std::string escape_field(std::string_view field);

void write_row(std::ostream& out, const Row& row);

}  // namespace tweetsat::csv
