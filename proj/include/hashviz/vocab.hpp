#pragma once

#include "hashviz/ingest.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hashviz {

inline constexpr std::uint64_t kDefaultMinCount = 5;
inline constexpr double kDefaultSubsampleThreshold = 1e-4;
inline constexpr std::size_t kNegativeTableSize = 10'000'000;
inline constexpr double kNegativePower = 0.75;

struct SubwordConfig {
  int minn = 3;
  int maxn = 6;
  std::uint32_t bucket = 2'000'000;

  void validate() const;
  bool operator==(const SubwordConfig&) const = default;
};

struct VocabEntry {
  std::string token;
  std::uint64_t count = 0;

  bool operator==(const VocabEntry&) const = default;
};

/// Token vocabulary with dense ids, subsampling probabilities and the
/// negative-sampling table.
///
/// Ids are ordered by descending count, ties broken lexicographically, so two
/// vocabularies built from the same corpus are identical.
class Vocabulary {
 public:
  // `entries` must already satisfy the ordering invariant.
  Vocabulary(std::vector<VocabEntry> entries, std::uint64_t total_tokens,
             std::uint64_t min_count,
             double subsample_t = kDefaultSubsampleThreshold,
             std::size_t negative_table_size = kNegativeTableSize);

  std::size_t size() const { return entries_.size(); }
  const VocabEntry& entry(std::int32_t id) const { return entries_[id]; }
  const std::string& token(std::int32_t id) const { return entries_[id].token; }
  std::uint64_t count(std::int32_t id) const { return entries_[id].count; }
  std::span<const VocabEntry> entries() const { return entries_; }

  std::optional<std::int32_t> find(std::string_view token) const;

  std::uint64_t total_tokens() const { return total_tokens_; }
  std::uint64_t min_count() const { return min_count_; }
  double subsample_threshold() const { return subsample_t_; }
  double discard_prob(std::int32_t id) const { return discard_prob_[id]; }
  std::span<const std::int32_t> negative_table() const { return neg_table_; }

  // `#vocab v1 <V> <total_tokens> <min_count>` then `token\tcount` lines.
  std::string to_tsv() const;
  static Vocabulary from_tsv(std::string_view tsv,
                             double subsample_t = kDefaultSubsampleThreshold);

  bool operator==(const Vocabulary& other) const {
    return entries_ == other.entries_ && total_tokens_ == other.total_tokens_ &&
           min_count_ == other.min_count_;
  }

 private:
  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const {
      return std::hash<std::string_view>{}(s);
    }
  };

  std::vector<VocabEntry> entries_;
  std::unordered_map<std::string, std::int32_t, StringHash, std::equal_to<>>
      index_;
  std::uint64_t total_tokens_;
  std::uint64_t min_count_;
  double subsample_t_;
  std::vector<double> discard_prob_;
  std::vector<std::int32_t> neg_table_;
};

// Counting pass over a tweet stream.
class VocabularyBuilder {
 public:
  void add(const CleanTweet& tweet);
  void add_token(std::string_view token);
  std::uint64_t total_tokens() const { return total_; }

  // Throws Error("empty vocabulary") when nothing survives pruning.
  Vocabulary finish(std::uint64_t min_count = kDefaultMinCount,
                    double subsample_t = kDefaultSubsampleThreshold,
                    std::size_t negative_table_size = kNegativeTableSize) const;

 private:
  std::unordered_map<std::string, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

Vocabulary build_vocab(std::span<const CleanTweet> corpus,
                       std::uint64_t min_count = kDefaultMinCount,
                       double subsample_t = kDefaultSubsampleThreshold);

// Builds from a token file written by the ingest step.
Vocabulary build_vocab_from_file(const std::filesystem::path& token_file,
                                 std::uint64_t min_count = kDefaultMinCount,
                                 double subsample_t = kDefaultSubsampleThreshold);

std::uint32_t fnv1a_32(std::string_view bytes);

// Character n-grams (UTF-8 code points) of "<token>" with lengths minn..maxn,
// excluding the full wrapped token. Order of first appearance.
std::vector<std::string> subword_strings(std::string_view token,
                                         const SubwordConfig& cfg);

// Bucket ids of subword_strings, sorted and deduplicated.
std::vector<std::uint32_t> subword_ngrams(std::string_view token,
                                          const SubwordConfig& cfg);

// Draws an id with probability proportional to count^0.75.
inline std::int32_t draw_negative(std::span<const std::int32_t> table,
                                  std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, table.size() - 1);
  return table[pick(rng)];
}

}  // namespace hashviz
