#include "tweetsat/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "tweetsat/csv.hpp"
#include "tweetsat/error.hpp"
#include "toml.hpp"

namespace tweetsat {

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  namespace fs = std::filesystem;
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  if (!fs::is_directory(dir)) {
    throw Error("cannot write " + path.string() + ": directory does not exist");
  }
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error("write failed for " + path.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error("cannot replace " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json load_structured(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  const std::string text = read_file(path);
  if (ext == ".json") {
    try {
      return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(path.string() + ": " + e.what());
    }
  }
  if (ext == ".toml") {
    try {
      const toml::table table = toml::parse(text, path.string());
      std::ostringstream ss;
      ss << toml::json_formatter{table};
      return nlohmann::json::parse(ss.str());
    } catch (const toml::parse_error& e) {
      throw Error(path.string() + ": " + std::string(e.description()));
    }
  }
  throw Error(path.string() + ": unknown config format (expected .toml or .json)");
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

nlohmann::ordered_json wrap_model(std::string_view kind, nlohmann::ordered_json body) {
  nlohmann::ordered_json j;
  j["format"] = "tweetsat-model";
  j["format_version"] = kModelFormatVersion;
  j["model_kind"] = kind;
  j["model"] = std::move(body);
  return j;
}

std::pair<std::string, nlohmann::json> unwrap_model(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "tweetsat-model") {
    throw Error("not a tweetsat model file");
  }
  const int version = j.at("format_version").get<int>();
  if (version != kModelFormatVersion) {
    throw Error("model format version " + std::to_string(version) + " is not supported (expected " +
                std::to_string(kModelFormatVersion) + ")");
  }
  return {j.at("model_kind").get<std::string>(), j.at("model")};
}

std::string feature_matrix_csv(const FeatureMatrix& m, std::span<const ClassId> labels) {
  if (!labels.empty() && labels.size() != static_cast<std::size_t>(m.rows())) {
    throw Error("feature matrix: label count does not match rows");
  }
  std::ostringstream out;
  csv::Row header = m.column_names;
  if (!labels.empty()) header.push_back("label");
  csv::write_row(out, header);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    csv::Row row;
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(format_double(m.values(r, c)));
    if (!labels.empty()) row.push_back(std::to_string(labels[static_cast<std::size_t>(r)]));
    csv::write_row(out, row);
  }
  return out.str();
}

LabeledMatrix read_feature_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header) throw Error(path.string() + ": empty matrix file");
  LabeledMatrix out;
  const bool has_label = !header->empty() && header->back() == "label";
  out.column_names.assign(header->begin(), header->end() - (has_label ? 1 : 0));
  std::vector<double> values;
  std::size_t rows = 0;
  while (auto row = reader.next()) {
    if (row->size() != header->size()) {
      throw Error(path.string() + ":" + std::to_string(reader.record_line()) + ": expected " +
                  std::to_string(header->size()) + " fields, got " + std::to_string(row->size()));
    }
    for (std::size_t c = 0; c < out.column_names.size(); ++c) {
      const std::string& s = (*row)[c];
      double v = 0.0;
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw Error(path.string() + ":" + std::to_string(reader.record_line()) +
                    ": not a number: '" + s + "'");
      }
      values.push_back(v);
    }
    if (has_label) {
      const ClassId label = std::stoi(row->back());
      if (label < 0 || label >= kNumClasses) {
        throw Error(path.string() + ":" + std::to_string(reader.record_line()) + ": bad label");
      }
      out.labels.push_back(label);
    }
    ++rows;
  }
  const auto cols = static_cast<Eigen::Index>(out.column_names.size());
  out.values = Eigen::Map<const Matrix>(values.data(), static_cast<Eigen::Index>(rows), cols);
  return out;
}

}  // namespace tweetsat
