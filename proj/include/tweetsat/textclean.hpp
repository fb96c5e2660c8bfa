#pragma once

#include <string>
#include <string_view>

namespace tweetsat {

struct CleanedTweet {
  std::string no_url;
  std::string filtered;
  bool operator==(const CleanedTweet&) const = default;
};

enum class CollapseMode {
  // One left-to-right pass replacing each non-overlapping "  " with " ".
  single_pass,
  // Repeat until no "  " remains.
  fixpoint,
};

// Regex sources, kept exactly as the cleaning algorithm states them.
// "\w" is spelled out as ASCII [A-Za-z0-9_] and "." as [^\n].
inline constexpr std::string_view kUrlPattern =
    R"([(http(s)?):\/\/(www\.)?a-zA-Z0-9@:%._\+~#=]{2,256}\.[a-z\/A-Z0-9=@:%_+.~#?&]{2,256})";
inline constexpr std::string_view kRetweetPattern = R"(RT @[^\n]+)";
inline constexpr std::string_view kUsernamePattern = R"(@[A-Za-z0-9_]+)";
inline constexpr std::string_view kHashtagPattern = R"(#[A-Za-z0-9_]+)";

std::string remove_urls(std::string_view text);
std::string remove_retweets(std::string_view text);
std::string remove_usernames(std::string_view text);
std::string remove_hashtags(std::string_view text);

bool contains_url(std::string_view text);

std::string collapse_double_spaces(std::string_view text,
                                   CollapseMode mode = CollapseMode::single_pass);

// URL removal, then retweet, username and hashtag removal for the filtered
// text, then one collapse over both outputs. Leading and trailing spaces are
// kept.
CleanedTweet clean_tweet(std::string_view text,
                         CollapseMode mode = CollapseMode::single_pass);

}  // namespace tweetsat
