#include "tweetsat/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <set>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "tweetsat/error.hpp"
#include "tweetsat/rng.hpp"
#include "tweetsat/textclean.hpp"

namespace tweetsat {
namespace {

// Entries below this magnitude do not decide a component's sign.
constexpr double kSignEpsilon = 1e-12;

void check_finite(const Matrix& x, std::string_view what) {
  if (!x.allFinite()) throw Error(std::string(what) + ": matrix contains NaN or Inf");
}

}  // namespace

PcaModel pca_fit(const Matrix& x, int k) {
  const auto n = x.rows();
  const auto d = x.cols();
  if (n < 2) throw Error("pca_fit: need at least 2 rows, got " + std::to_string(n));
  if (k < 1 || k > d) {
    throw Error("pca_fit: k=" + std::to_string(k) + " out of range [1, " + std::to_string(d) + "]");
  }
  check_finite(x, "pca_fit");

  PcaModel model;
  model.mean = x.colwise().mean().transpose();
  const Matrix cov = covariance(x, model.mean);
  const auto eig = jacobi_eigen(cov);

  model.components.resize(k, d);
  model.eigenvalues.resize(k);
  for (int i = 0; i < k; ++i) {
    Vector c = eig.vectors.col(i);
    for (Eigen::Index j = 0; j < d; ++j) {
      if (std::abs(c(j)) > kSignEpsilon) {
        if (c(j) < 0.0) c = -c;
        break;
      }
    }
    model.components.row(i) = c.transpose();
    model.eigenvalues(i) = eig.values(i);
  }
  model.degenerate = cov.cwiseAbs().maxCoeff() == 0.0;
  if (model.degenerate) {
    spdlog::warn("pca_fit: all {} rows are identical; components are arbitrary, eigenvalues 0", n);
  }
  return model;
}

Matrix pca_transform(const PcaModel& model, const Matrix& x) {
  if (x.cols() != model.input_dim()) {
    throw Error("pca_transform: expected " + std::to_string(model.input_dim()) + " columns, got " +
                std::to_string(x.cols()));
  }
  return (x.rowwise() - model.mean.transpose()) * model.components.transpose();
}

Normalizer normalize_fit(const Matrix& x, NormalizationKind kind) {
  if (x.rows() == 0) throw Error("normalize_fit: empty matrix");
  check_finite(x, "normalize_fit");
  Normalizer nrm;
  nrm.kind = kind;
  nrm.min = x.colwise().minCoeff().transpose();
  nrm.max = x.colwise().maxCoeff().transpose();
  nrm.mean = x.colwise().mean().transpose();
  nrm.stddev = Vector::Zero(x.cols());
  if (x.rows() > 1) {
    const Matrix centered = x.rowwise() - nrm.mean.transpose();
    nrm.stddev = (centered.colwise().squaredNorm() / static_cast<double>(x.rows() - 1))
                     .cwiseSqrt()
                     .transpose();
  }
  return nrm;
}

Matrix normalize_apply(const Normalizer& nrm, const Matrix& x) {
  if (x.cols() != nrm.min.size()) {
    throw Error("normalize_apply: expected " + std::to_string(nrm.min.size()) +
                " columns, got " + std::to_string(x.cols()));
  }
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    if (nrm.kind == NormalizationKind::min_max) {
      const double range = nrm.max(c) - nrm.min(c);
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        out(r, c) = range > 0.0 ? std::clamp((x(r, c) - nrm.min(c)) / range, 0.0, 1.0) : 0.0;
      }
    } else {
      const double sd = nrm.stddev(c);
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        out(r, c) = sd > 0.0 ? (x(r, c) - nrm.mean(c)) / sd : 0.0;
      }
    }
  }
  return out;
}

ExtendedContext ExtendedContext::fit(std::span<const TweetRecord> train) {
  ExtendedContext ctx;
  std::set<std::string> airlines, timezones;
  std::map<std::string, std::pair<Coordinate, std::size_t>> coord_sums;
  for (const auto& r : train) {
    if (!r.airline.empty()) airlines.insert(r.airline);
    if (r.timezone) timezones.insert(*r.timezone);
    ++ctx.user_counts[r.user_name];
    if (r.timezone && r.tweet_coord) {
      auto& [sum, n] = coord_sums[*r.timezone];
      sum.lat += r.tweet_coord->lat;
      sum.lon += r.tweet_coord->lon;
      ++n;
    }
  }
  ctx.airlines.assign(airlines.begin(), airlines.end());
  ctx.timezones.assign(timezones.begin(), timezones.end());
  for (const auto& [tz, acc] : coord_sums) {
    const auto& [sum, n] = acc;
    ctx.timezone_centroids[tz] = {sum.lat / static_cast<double>(n), sum.lon / static_cast<double>(n)};
  }
  return ctx;
}

std::vector<std::string> ExtendedContext::column_names() const {
  std::vector<std::string> names;
  names.reserve(width());
  for (const auto& a : airlines) names.push_back("airline=" + a);
  for (const char* n : {"hour_sin", "hour_cos", "weekday_sin", "weekday_cos", "user_log_count"}) {
    names.emplace_back(n);
  }
  for (const auto& tz : timezones) names.push_back("timezone=" + tz);
  names.emplace_back("timezone=OTHER");
  for (const char* n : {"coord_lat", "coord_lon", "retweet_log_count"}) names.emplace_back(n);
  return names;
}

std::vector<double> encode_extended(const TweetRecord& record, const ExtendedContext& context) {
  std::vector<double> v;
  v.reserve(context.width());
  for (const auto& a : context.airlines) v.push_back(record.airline == a ? 1.0 : 0.0);

  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (record.created_at) {
    const double hour = record.created_at->hour_of_day();
    const double day = record.created_at->weekday();
    v.push_back(std::sin(two_pi * hour / 24.0));
    v.push_back(std::cos(two_pi * hour / 24.0));
    v.push_back(std::sin(two_pi * day / 7.0));
    v.push_back(std::cos(two_pi * day / 7.0));
  } else {
    v.insert(v.end(), 4, 0.0);
  }

  auto uc = context.user_counts.find(record.user_name);
  v.push_back(std::log1p(uc == context.user_counts.end() ? 0.0 : static_cast<double>(uc->second)));

  bool matched = false;
  for (const auto& tz : context.timezones) {
    const bool hit = record.timezone && *record.timezone == tz;
    matched = matched || hit;
    v.push_back(hit ? 1.0 : 0.0);
  }
  v.push_back(matched ? 0.0 : 1.0);

  Coordinate coord{0.0, 0.0};
  if (record.tweet_coord) {
    coord = *record.tweet_coord;
  } else if (record.timezone) {
    if (auto it = context.timezone_centroids.find(*record.timezone);
        it != context.timezone_centroids.end()) {
      coord = it->second;
    }
  }
  v.push_back(coord.lat);
  v.push_back(coord.lon);
  v.push_back(std::log1p(static_cast<double>(record.retweet_count)));
  return v;
}

Matrix encode_extended(std::span<const TweetRecord> records, const ExtendedContext& context) {
  Matrix m(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(context.width()));
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto row = encode_extended(records[r], context);
    for (std::size_t c = 0; c < row.size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
  }
  return m;
}

std::string_view feature_set_name(FeatureSet set) {
  return set == FeatureSet::text_only ? "TextOnly" : "Extended";
}

FeatureSet parse_feature_set(std::string_view name) {
  if (name == "TextOnly" || name == "text_only" || name == "text") return FeatureSet::text_only;
  if (name == "Extended" || name == "extended") return FeatureSet::extended;
  throw Error("unknown feature set '" + std::string(name) + "'");
}

FeatureMatrix assemble(const Matrix& text, std::span<const std::string> text_names,
                       const Matrix* extended, std::span<const std::string> extended_names,
                       FeatureSet mode) {
  if (static_cast<Eigen::Index>(text_names.size()) != text.cols()) {
    throw Error("assemble: text column names do not match text columns");
  }
  FeatureMatrix out;
  out.feature_set = mode;
  out.column_names.assign(text_names.begin(), text_names.end());
  if (mode == FeatureSet::text_only) {
    out.values = text;
  } else {
    if (extended == nullptr) throw Error("assemble: Extended mode requires extended features");
    if (extended->rows() != text.rows()) {
      throw Error("assemble: row mismatch (" + std::to_string(text.rows()) + " text rows vs " +
                  std::to_string(extended->rows()) + " extended rows)");
    }
    if (static_cast<Eigen::Index>(extended_names.size()) != extended->cols()) {
      throw Error("assemble: extended column names do not match extended columns");
    }
    out.values.resize(text.rows(), text.cols() + extended->cols());
    out.values << text, *extended;
    out.column_names.insert(out.column_names.end(), extended_names.begin(), extended_names.end());
  }
  std::unordered_set<std::string> seen;
  for (const auto& n : out.column_names) {
    if (!seen.insert(n).second) throw Error("assemble: duplicate column name '" + n + "'");
  }
  check_finite(out.values, "assemble");
  return out;
}

Matrix document_matrix(std::span<const std::string> texts, const EmbeddingTable& table) {
  Matrix m(static_cast<Eigen::Index>(texts.size()), static_cast<Eigen::Index>(table.dim()));
  for (std::size_t r = 0; r < texts.size(); ++r) {
    const auto v = doc_vector(tokenize(texts[r]), table);
    for (std::size_t c = 0; c < v.size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[c];
  }
  return m;
}

std::string_view text_source_name(TextSource source) {
  return source == TextSource::filtered ? "filtered" : "no_url";
}

TextSource parse_text_source(std::string_view name) {
  if (name == "filtered") return TextSource::filtered;
  if (name == "no_url") return TextSource::no_url;
  throw Error("unknown text source '" + std::string(name) + "'");
}

std::string record_text(const TweetRecord& record, TextSource source) {
  auto cleaned = clean_tweet(record.text_raw);
  return source == TextSource::filtered ? std::move(cleaned.filtered) : std::move(cleaned.no_url);
}

FeatureMatrix FeaturePipeline::raw(std::span<const TweetRecord> records) const {
  std::vector<std::string> texts;
  texts.reserve(records.size());
  for (const auto& r : records) texts.push_back(record_text(r, options_.text_source));
  Matrix text = document_matrix(texts, *table_);
  std::vector<std::string> text_names;
  if (pca_) {
    text = pca_transform(*pca_, text);
    for (Eigen::Index i = 0; i < text.cols(); ++i) text_names.push_back("pc" + std::to_string(i + 1));
  } else {
    for (Eigen::Index i = 0; i < text.cols(); ++i) text_names.push_back("emb" + std::to_string(i + 1));
  }
  if (mode_ == FeatureSet::text_only) return assemble(text, text_names, nullptr, {}, mode_);
  const Matrix ext = encode_extended(records, context_);
  const auto ext_names = context_.column_names();
  return assemble(text, text_names, &ext, ext_names, mode_);
}

void FeaturePipeline::fit(std::span<const TweetRecord> train) {
  pca_.reset();
  if (options_.use_pca) {
    std::vector<std::string> texts;
    texts.reserve(train.size());
    for (const auto& r : train) texts.push_back(record_text(r, options_.text_source));
    pca_ = pca_fit(document_matrix(texts, *table_), options_.pca_k);
  }
  context_ = mode_ == FeatureSet::extended ? ExtendedContext::fit(train) : ExtendedContext{};
  normalizer_ = normalize_fit(raw(train).values, options_.normalization);
  fitted_ = true;
}

FeatureMatrix FeaturePipeline::transform(std::span<const TweetRecord> records) const {
  if (!fitted_) throw Error("FeaturePipeline::transform called before fit");
  auto fm = raw(records);
  if (fm.rows() > 0) fm.values = normalize_apply(normalizer_, fm.values);
  return fm;
}

std::uint64_t FeaturePipeline::fit_digest() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_double = [&](double x) { h = mix64(h ^ std::bit_cast<std::uint64_t>(x)); };
  auto mix_vec = [&](const auto& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) mix_double(v.data()[i]);
  };
  auto mix_str = [&](std::string_view s) { h = mix64(h ^ fnv1a64(s)); };
  if (pca_) {
    mix_vec(pca_->mean);
    mix_vec(pca_->components);
    mix_vec(pca_->eigenvalues);
  }
  mix_vec(normalizer_.min);
  mix_vec(normalizer_.max);
  mix_vec(normalizer_.mean);
  mix_vec(normalizer_.stddev);
  for (const auto& a : context_.airlines) mix_str(a);
  for (const auto& t : context_.timezones) mix_str(t);
  std::vector<std::pair<std::string, std::size_t>> users(context_.user_counts.begin(),
                                                         context_.user_counts.end());
  std::sort(users.begin(), users.end());
  for (const auto& [u, n] : users) {
    mix_str(u);
    h = mix64(h ^ n);
  }
  for (const auto& [tz, c] : context_.timezone_centroids) {
    mix_str(tz);
    mix_double(c.lat);
    mix_double(c.lon);
  }
  return h;
}

}  // namespace tweetsat
