#include "tweetsat/textclean.hpp"

#include <boost/regex.hpp>

namespace tweetsat {
namespace {

struct Patterns {
  boost::regex url{kUrlPattern.begin(), kUrlPattern.end(), boost::regex::perl};
  boost::regex retweet{kRetweetPattern.begin(), kRetweetPattern.end(), boost::regex::perl};
  boost::regex username{kUsernamePattern.begin(), kUsernamePattern.end(), boost::regex::perl};
  boost::regex hashtag{kHashtagPattern.begin(), kHashtagPattern.end(), boost::regex::perl};
};

const Patterns& patterns() {
  static const Patterns p;
  return p;
}

std::string substitute(const boost::regex& re, std::string_view text) {
  std::string out;
  out.reserve(text.size());
  boost::regex_replace(std::back_inserter(out), text.begin(), text.end(), re, "",
                       boost::format_all);
  return out;
}

}  // namespace

std::string remove_urls(std::string_view text) { return substitute(patterns().url, text); }
std::string remove_retweets(std::string_view text) { return substitute(patterns().retweet, text); }
std::string remove_usernames(std::string_view text) { return substitute(patterns().username, text); }
std::string remove_hashtags(std::string_view text) { return substitute(patterns().hashtag, text); }

bool contains_url(std::string_view text) {
  return boost::regex_search(text.begin(), text.end(), patterns().url);
}

std::string collapse_double_spaces(std::string_view text, CollapseMode mode) {
  std::string current(text);
  for (;;) {
    std::string next;
    next.reserve(current.size());
    bool replaced = false;
    for (std::size_t i = 0; i < current.size(); ++i) {
      if (current[i] == ' ' && i + 1 < current.size() && current[i + 1] == ' ') {
        next.push_back(' ');
        ++i;
        replaced = true;
      } else {
        next.push_back(current[i]);
      }
    }
    current = std::move(next);
    if (mode == CollapseMode::single_pass || !replaced) return current;
  }
}

CleanedTweet clean_tweet(std::string_view text, CollapseMode mode) {
  CleanedTweet out;
  out.no_url = remove_urls(text);
  std::string filtered = remove_retweets(out.no_url);
  filtered = remove_usernames(filtered);
  filtered = remove_hashtags(filtered);
  out.no_url = collapse_double_spaces(out.no_url, mode);
  out.filtered = collapse_double_spaces(filtered, mode);
  return out;
}

}  // namespace tweetsat
