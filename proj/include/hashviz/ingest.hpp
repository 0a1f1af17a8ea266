#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hashviz {

struct RawTweet {
  std::string id;
  std::string text;

  bool operator==(const RawTweet&) const = default;
};

// Normalized token sequence of one tweet. Hashtags keep their '#' prefix.
struct CleanTweet {
  std::vector<std::string> tokens;

  bool operator==(const CleanTweet&) const = default;
};

struct CorpusReaderOptions {
  // Lines longer than this are skipped as malformed without being buffered.
  std::size_t max_line_bytes = std::size_t{1} << 20;
};

/// Streams tweets from a newline-delimited JSON file, plain or gzip.
///
/// Each line must be a JSON object carrying the tweet text in `full_text`,
/// `extended_tweet.full_text` or `text`. Lines that fail to parse, or that
/// lack a text field, are skipped and counted. Memory use is bounded by
/// `max_line_bytes` regardless of file size.
class CorpusReader {
 public:
  explicit CorpusReader(const std::filesystem::path& path,
                        CorpusReaderOptions options = {});
  ~CorpusReader();
  CorpusReader(CorpusReader&&) noexcept;
  CorpusReader& operator=(CorpusReader&&) noexcept;

  // Returns the next well-formed tweet, or nullopt at end of file.
  std::optional<RawTweet> next();

  std::uint64_t skipped() const { return skipped_; }
  std::uint64_t kept() const { return kept_; }

 private:
  bool read_line(std::string& line);

  struct Handle;
  std::unique_ptr<Handle> handle_;
  CorpusReaderOptions options_;
  std::uint64_t skipped_ = 0;
  std::uint64_t kept_ = 0;
};

// Parses one corpus line; nullopt when malformed.
std::optional<RawTweet> parse_tweet_line(std::string_view line);

/// Lowercased, NFC-normalized tokens with URLs, mentions and the retweet
/// marker removed. Every token matches `[a-z0-9_]+` or `#[a-z0-9_]+`.
CleanTweet normalize(std::string_view text);

std::vector<std::string> extract_hashtags(const CleanTweet& tweet);

inline bool is_hashtag(std::string_view token) {
  return token.size() > 1 && token.front() == '#';
}

// Token file: one tweet per line, tokens separated by single spaces.
void write_token_line(std::ostream& out, const CleanTweet& tweet);
CleanTweet parse_token_line(std::string_view line);

struct IngestStats {
  std::uint64_t kept = 0;
  std::uint64_t skipped = 0;
};

// Runs load_corpus + normalize over a whole file and writes the token file.
IngestStats ingest_file(const std::filesystem::path& input,
                        const std::filesystem::path& output);

}  // namespace hashviz
