#include "tweetsat/csv.hpp"

#include "tweetsat/error.hpp"

namespace tweetsat::csv {

std::optional<Row> Reader::next() {
  int c = in_.get();
  if (c == std::char_traits<char>::eof()) return std::nullopt;

  record_line_ = line_;
  Row row;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;

  for (;; c = in_.get()) {
    if (c == std::char_traits<char>::eof()) {
      if (in_quotes) {
        throw Error("csv: unterminated quoted field starting on line " +
                    std::to_string(record_line_));
      }
      row.push_back(std::move(field));
      return row;
    }
    const char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in_.peek() == '"') {
          in_.get();
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line_;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (field.empty() && !field_was_quoted) {
          in_quotes = true;
          field_was_quoted = true;
        } else {
          // Stray quote inside an unquoted field is kept as data.
          field.push_back(ch);
        }
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
        break;
      case '\r':
        if (in_.peek() == '\n') in_.get();
        ++line_;
        row.push_back(std::move(field));
        return row;
      case '\n':
        ++line_;
        row.push_back(std::move(field));
        return row;
      default:
        field.push_back(ch);
    }
  }
}

std::string escape_field(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const Row& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    out << escape_field(row[i]);
  }
  out << '\n';
}

}  // namespace tweetsat::csv
