#include "synthetic.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

#include "tweetsat/csv.hpp"
#include "tweetsat/rng.hpp"

namespace tweetsat::testing {
namespace {

struct Airline {
  std::string_view name;
  std::string_view handle;
  std::size_t count;
  std::array<double, 3> prior;  // negative, neutral, positive
};

constexpr std::array<Airline, 6> kAirlines = {{
    {"United", "united", 3822, {0.69, 0.18, 0.13}},
    {"US Airways", "USAirways", 2913, {0.78, 0.13, 0.09}},
    {"American", "AmericanAir", 2759, {0.71, 0.17, 0.12}},
    {"Southwest", "SouthwestAir", 2420, {0.49, 0.27, 0.24}},
    {"Delta", "JetBlue", 2222, {0.43, 0.33, 0.24}},
    {"Virgin America", "VirginAmerica", 504, {0.36, 0.34, 0.30}},
}};

constexpr std::array<std::string_view, 25> kNegative = {
    "delayed", "cancelled", "rude",         "worst",        "terrible", "lost",     "hours",
    "waiting", "never",     "bad",          "awful",        "horrible", "disappointed", "stuck",
    "missed",  "broken",    "angry",        "fail",         "ridiculous", "unacceptable",
    "frustrated", "complaint", "refund",   "delay",        "nightmare"};
constexpr std::array<std::string_view, 25> kPositive = {
    "thanks",    "great",    "love",     "awesome",  "best",     "amazing", "helpful",
    "appreciate", "excellent", "wonderful", "happy",   "perfect",  "nice",    "fantastic",
    "friendly",  "smooth",   "enjoyed",  "glad",     "kudos",    "impressed", "pleasant",
    "superb",    "grateful", "thank",    "good"};
constexpr std::array<std::string_view, 25> kNeutral = {
    "flight", "tomorrow", "change", "question", "book",   "seat",     "ticket",
    "dm",     "know",     "please", "when",     "what",   "how",      "does",
    "flights", "schedule", "check", "gate",     "status", "info",     "today",
    "route",  "fare",     "boarding", "travel"};
constexpr std::array<std::string_view, 30> kFiller = {
    "the", "to",   "my",  "a",    "i",    "is",  "on",  "you", "for",  "and",
    "in",  "it",   "at",  "this", "with", "me",  "of",  "your", "from", "can",
    "be",  "just", "are", "was",  "have", "get", "an",  "we",  "so",   "but"};
constexpr std::array<std::string_view, 9> kReasons = {
    "Customer Service Issue", "Late Flight", "Can't Tell", "Cancelled Flight", "Lost Luggage",
    "Bad Flight", "Flight Booking Problems", "Flight Attendant Complaints", "longlines"};

struct Zone {
  std::string_view name;
  double lat, lon;
};
constexpr std::array<Zone, 8> kZones = {{
    {"Eastern Time (US & Canada)", 40.7, -74.0},
    {"Central Time (US & Canada)", 41.9, -87.6},
    {"Pacific Time (US & Canada)", 37.8, -122.4},
    {"Mountain Time (US & Canada)", 39.7, -105.0},
    {"Atlantic Time (Canada)", 44.6, -63.6},
    {"Quito", -0.2, -78.5},
    {"London", 51.5, -0.1},
    {"Arizona", 33.4, -112.1},
}};
constexpr std::array<std::string_view, 6> kLocations = {"NYC", "Boston, MA", "San Francisco",
                                                        "Chicago", "Washington, DC", "Texas"};

template <typename Array>
std::string_view pick(const Array& a, Rng& rng) {
  return a[rng.below(a.size())];
}

int sample_class(std::array<double, 3> p, Rng& rng) {
  const double total = p[0] + p[1] + p[2];
  double u = rng.uniform() * total;
  for (int c = 0; c < 3; ++c) {
    if (u < p[static_cast<std::size_t>(c)]) return c;
    u -= p[static_cast<std::size_t>(c)];
  }
  return 2;
}

std::string make_text(const Airline& airline, int label, Rng& rng) {
  std::string t = "@" + std::string(airline.handle);
  if (rng.bernoulli(0.15)) t += " @user" + std::to_string(rng.below(400));
  if (rng.bernoulli(0.06)) t += " @crew" + std::to_string(rng.below(50));
  const std::size_t words = 4 + rng.below(12);
  for (std::size_t w = 0; w < words; ++w) {
    const double u = rng.uniform();
    std::string_view word;
    if (u < 0.22) {
      word = label == 0 ? pick(kNegative, rng) : label == 2 ? pick(kPositive, rng) : pick(kNeutral, rng);
    } else if (u < 0.30) {
      const int other = static_cast<int>(rng.below(3));
      word = other == 0 ? pick(kNegative, rng) : other == 2 ? pick(kPositive, rng) : pick(kNeutral, rng);
    } else if (u < 0.50) {
      word = pick(kNeutral, rng);
    } else {
      word = pick(kFiller, rng);
    }
    t += rng.bernoulli(0.04) ? "  " : " ";
    t += word;
  }
  if (rng.bernoulli(0.1)) t += " #" + std::string(pick(kNeutral, rng)) + "fail";
  if (rng.bernoulli(0.12)) {
    static constexpr std::string_view alnum = "abcdefghijkmnopqrstuvwxyzABCDEFGHJKLMNPQRSTUVWXYZ0123456789";
    std::string slug;
    for (int i = 0; i < 10; ++i) slug += alnum[rng.below(alnum.size())];
    t += " http://t.co/" + slug;
  }
  if (rng.bernoulli(0.04)) t = "RT @fan" + std::to_string(rng.below(90)) + ": " + t;
  if (rng.bernoulli(0.02)) t += "\nsent from my phone";
  return t;
}

}  // namespace

std::string synthetic_corpus_csv(const SyntheticCorpusOptions& options) {
  Rng rng(derive_seed(options.seed, "synthetic-corpus"));
  std::ostringstream out;
  csv::write_row(out, {"tweet_id", "airline_sentiment", "airline_sentiment_confidence",
                       "negativereason", "negativereason_confidence", "airline",
                       "airline_sentiment_gold", "name", "negativereason_gold", "retweet_count",
                       "text", "tweet_coord", "tweet_created", "tweet_location", "user_timezone"});
  static constexpr std::array<std::string_view, 3> kLabels = {"negative", "neutral", "positive"};

  std::size_t total = 0;
  for (const auto& a : kAirlines) total += a.count;
  // Airline order cycles in proportion to the real counts.
  std::vector<std::size_t> airline_of;
  for (std::size_t i = 0; i < options.rows; ++i) {
    double u = rng.uniform() * static_cast<double>(total);
    std::size_t k = 0;
    while (k + 1 < kAirlines.size() && u >= static_cast<double>(kAirlines[k].count)) {
      u -= static_cast<double>(kAirlines[k].count);
      ++k;
    }
    airline_of.push_back(k);
  }
  if (options.rows == total) {
    airline_of.clear();
    for (std::size_t k = 0; k < kAirlines.size(); ++k) airline_of.insert(airline_of.end(), kAirlines[k].count, k);
    rng.shuffle(airline_of);
  }

  for (std::size_t i = 0; i < options.rows; ++i) {
    const Airline& airline = kAirlines[airline_of[i]];
    const bool heavy = rng.bernoulli(0.25);
    const std::string user = heavy ? "frequent_" + std::to_string(rng.below(300))
                                   : "traveler_" + std::to_string(rng.below(9000));
    const int hour = static_cast<int>(rng.below(24));
    const bool has_zone = rng.bernoulli(0.67);
    const std::size_t zone = rng.below(kZones.size());

    auto p = airline.prior;
    if (heavy) p[0] *= 2.5;
    if (hour < 6) p[0] *= 1.6;
    if (hour >= 9 && hour < 13) p[2] *= 1.5;
    if (has_zone && zone >= 5) p[1] *= 1.8;
    const int label = sample_class(p, rng);

    const std::size_t retweets = rng.bernoulli(label == 0 ? 0.09 : 0.03) ? 1 + rng.below(4) : 0;
    char created[40];
    std::snprintf(created, sizeof created, "2015-02-%02d %02d:%02d:%02d -0800",
                  16 + static_cast<int>(rng.below(9)), hour, static_cast<int>(rng.below(60)),
                  static_cast<int>(rng.below(60)));
    std::string coord;
    if (rng.bernoulli(0.07)) {
      char buf[64];
      const Zone& z = kZones[has_zone ? zone : rng.below(kZones.size())];
      std::snprintf(buf, sizeof buf, "[%.8f, %.8f]", z.lat + rng.uniform(-1.0, 1.0),
                    z.lon + rng.uniform(-1.0, 1.0));
      coord = buf;
    }
    std::string reason, reason_conf;
    if (label == 0) {
      reason = pick(kReasons, rng);
      char buf[16];
      std::snprintf(buf, sizeof buf, "%.4f", rng.uniform(0.3, 1.0));
      reason_conf = buf;
    } else if (rng.bernoulli(0.5)) {
      reason_conf = "0.0";
    }
    char conf[16];
    std::snprintf(conf, sizeof conf, "%.4f", rng.bernoulli(0.7) ? 1.0 : rng.uniform(0.33, 1.0));
    const std::string gold = rng.bernoulli(0.0027) ? std::string(kLabels[static_cast<std::size_t>(label)]) : "";
    const std::string reason_gold = label == 0 && rng.bernoulli(0.0035) ? reason : "";

    csv::write_row(out, {std::to_string(570306133677760513ULL + i),
                         std::string(kLabels[static_cast<std::size_t>(label)]), conf, reason,
                         reason_conf, std::string(airline.name), gold, user, reason_gold,
                         std::to_string(retweets), make_text(airline, label, rng), coord, created,
                         rng.bernoulli(0.68) ? std::string(pick(kLocations, rng)) : "",
                         has_zone ? std::string(kZones[zone].name) : ""});
  }
  return out.str();
}

std::string synthetic_embeddings(std::size_t dim, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "synthetic-embeddings"));
  auto unit = [&]() {
    std::vector<double> v(dim);
    double n = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      n += x * x;
    }
    for (auto& x : v) x /= std::sqrt(n);
    return v;
  };
  const auto sentiment = unit();
  const auto topic = unit();
  std::ostringstream out;
  auto emit = [&](std::string_view token, double s, double t, double noise) {
    out << token;
    char buf[32];
    for (std::size_t d = 0; d < dim; ++d) {
      const double x = s * 1.2 * sentiment[d] + t * topic[d] + noise * rng.normal() / std::sqrt(double(dim)) * 3.0;
      std::snprintf(buf, sizeof buf, " %.5f", x);
      out << buf;
    }
    out << "\n";
  };
  for (auto w : kFiller) emit(w, 0.0, 0.0, 0.25);
  for (auto w : kNeutral) emit(w, 0.0, 1.0, 0.35);
  for (auto w : kNegative) emit(w, -1.0, 0.0, 0.35);
  for (auto w : kPositive) emit(w, 1.0, 0.0, 0.35);
  for (const auto& a : kAirlines) {
    std::string lower(a.handle);
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    emit(lower, 0.0, 0.5, 0.3);
  }
  for (auto w : {"sent", "phone", "rt", "http", "t", "co"}) emit(w, 0.0, 0.0, 0.3);
  for (int i = 0; i < 3000; ++i) {
    char tok[16];
    std::snprintf(tok, sizeof tok, "zq%04d", i);
    emit(tok, 0.0, 0.0, 0.5);
  }
  return out.str();
}

SyntheticFiles write_synthetic_files(const std::filesystem::path& dir,
                                     const SyntheticCorpusOptions& options) {
  std::filesystem::create_directories(dir);
  SyntheticFiles f{dir / ("synthetic_tweets_" + std::to_string(options.rows) + "_" +
                          std::to_string(options.seed) + ".csv"),
                   dir / "synthetic_vectors_50d.txt"};
  if (!std::filesystem::exists(f.csv)) {
    std::ofstream(f.csv, std::ios::binary) << synthetic_corpus_csv(options);
  }
  if (!std::filesystem::exists(f.glove)) {
    std::ofstream(f.glove, std::ios::binary) << synthetic_embeddings(50);
  }
  return f;
}

}  // namespace tweetsat::testing
