#include "hashviz/vocab.hpp"

#include "hashviz/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hashviz {

void SubwordConfig::validate() const {
  if (minn <= 0 || maxn < minn) {
    throw std::invalid_argument("subword config requires 0 < minn <= maxn");
  }
  if (bucket < 1) throw std::invalid_argument("subword bucket must be >= 1");
}

Vocabulary::Vocabulary(std::vector<VocabEntry> entries,
                       std::uint64_t total_tokens, std::uint64_t min_count,
                       double subsample_t, std::size_t negative_table_size)
    : entries_(std::move(entries)),
      total_tokens_(total_tokens),
      min_count_(min_count),
      subsample_t_(subsample_t) {
  if (entries_.empty()) throw Error("empty vocabulary");
  if (!(subsample_t > 0.0 && subsample_t <= 1.0)) {
    throw std::invalid_argument("subsampling threshold must be in (0, 1]");
  }

  std::uint64_t retained = 0;
  index_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.count < min_count_ || e.count == 0) {
      throw std::invalid_argument("vocabulary entry below min_count: " + e.token);
    }
    if (i > 0) {
      const auto& prev = entries_[i - 1];
      if (prev.count < e.count || (prev.count == e.count && prev.token >= e.token)) {
        throw std::invalid_argument("vocabulary entries out of order at " + e.token);
      }
    }
    index_.emplace(e.token, static_cast<std::int32_t>(i));
    retained += e.count;
  }
  if (retained > total_tokens_) {
    throw std::invalid_argument("retained counts exceed total_tokens");
  }

  discard_prob_.reserve(entries_.size());
  for (const auto& e : entries_) {
    double f = static_cast<double>(e.count) / static_cast<double>(total_tokens_);
    discard_prob_.push_back(std::max(0.0, 1.0 - std::sqrt(subsample_t_ / f)));
  }

  // Position j holds the id whose cumulative-weight interval contains the
  // midpoint (j + 0.5) / size.
  std::size_t table_size = std::max(entries_.size(), negative_table_size);
  std::vector<double> weights;
  weights.reserve(entries_.size());
  double z = 0.0;
  for (const auto& e : entries_) {
    weights.push_back(std::pow(static_cast<double>(e.count), kNegativePower));
    z += weights.back();
  }
  neg_table_.resize(table_size);
  std::size_t id = 0;
  double cumulative = weights[0] / z;
  for (std::size_t j = 0; j < table_size; ++j) {
    double target = (static_cast<double>(j) + 0.5) / static_cast<double>(table_size);
    while (target >= cumulative && id + 1 < entries_.size()) {
      ++id;
      cumulative += weights[id] / z;
    }
    neg_table_[j] = static_cast<std::int32_t>(id);
  }
}

std::optional<std::int32_t> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string Vocabulary::to_tsv() const {
  std::ostringstream out;
  out << "#vocab v1 " << entries_.size() << ' ' << total_tokens_ << ' '
      << min_count_ << '\n';
  for (const auto& e : entries_) out << e.token << '\t' << e.count << '\n';
  return out.str();
}

namespace {

template <typename Int>
Int parse_uint(std::string_view s, std::string_view what) {
  Int value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error("vocabulary: bad " + std::string(what) + " '" + std::string(s) + "'");
  }
  return value;
}

}  // namespace

Vocabulary Vocabulary::from_tsv(std::string_view tsv, double subsample_t) {
  auto next_line = [&tsv]() -> std::optional<std::string_view> {
    if (tsv.empty()) return std::nullopt;
    auto nl = tsv.find('\n');
    auto line = tsv.substr(0, nl);
    tsv = nl == std::string_view::npos ? std::string_view{} : tsv.substr(nl + 1);
    return line;
  };

  auto header = next_line();
  constexpr std::string_view kMagic = "#vocab v1 ";
  if (!header || header->substr(0, kMagic.size()) != kMagic) {
    throw Error("vocabulary: missing '#vocab v1' header");
  }
  std::vector<std::string_view> fields;
  for (auto rest = header->substr(kMagic.size()); !rest.empty();) {
    auto sp = rest.find(' ');
    fields.push_back(rest.substr(0, sp));
    rest = sp == std::string_view::npos ? std::string_view{} : rest.substr(sp + 1);
  }
  if (fields.size() != 3) throw Error("vocabulary: malformed header");
  auto size = parse_uint<std::size_t>(fields[0], "size");
  auto total = parse_uint<std::uint64_t>(fields[1], "total_tokens");
  auto min_count = parse_uint<std::uint64_t>(fields[2], "min_count");

  std::vector<VocabEntry> entries;
  entries.reserve(size);
  while (auto line = next_line()) {
    auto tab = line->find('\t');
    if (tab == std::string_view::npos) {
      throw Error("vocabulary: line " + std::to_string(entries.size() + 2) +
                  " lacks a tab");
    }
    entries.push_back({std::string(line->substr(0, tab)),
                       parse_uint<std::uint64_t>(line->substr(tab + 1), "count")});
  }
  if (entries.size() != size) {
    throw Error("vocabulary: header declares " + std::to_string(size) +
                " entries, found " + std::to_string(entries.size()));
  }
  try {
    return Vocabulary(std::move(entries), total, min_count, subsample_t);
  } catch (const std::invalid_argument& e) {
    throw Error(std::string("vocabulary: ") + e.what());
  }
}

void VocabularyBuilder::add(const CleanTweet& tweet) {
  for (const auto& t : tweet.tokens) add_token(t);
}

void VocabularyBuilder::add_token(std::string_view token) {
  if (token.empty()) return;
  ++counts_[std::string(token)];
  ++total_;
}

Vocabulary VocabularyBuilder::finish(std::uint64_t min_count,
                                     double subsample_t,
                                     std::size_t negative_table_size) const {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
  std::vector<VocabEntry> entries;
  for (const auto& [token, count] : counts_) {
    if (count >= min_count) entries.push_back({token, count});
  }
  if (entries.empty()) throw Error("empty vocabulary");
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.count != b.count ? a.count > b.count : a.token < b.token;
  });
  return Vocabulary(std::move(entries), total_, min_count, subsample_t,
                    negative_table_size);
}

Vocabulary build_vocab(std::span<const CleanTweet> corpus,
                       std::uint64_t min_count, double subsample_t) {
  VocabularyBuilder builder;
  for (const auto& tweet : corpus) builder.add(tweet);
  return builder.finish(min_count, subsample_t);
}

Vocabulary build_vocab_from_file(const std::filesystem::path& token_file,
                                 std::uint64_t min_count, double subsample_t) {
  std::ifstream in(token_file, std::ios::binary);
  if (!in) throw Error("cannot read token file '" + token_file.string() + "'");
  VocabularyBuilder builder;
  std::string line;
  while (std::getline(in, line)) builder.add(parse_token_line(line));
  return builder.finish(min_count, subsample_t);
}

std::uint32_t fnv1a_32(std::string_view bytes) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

std::vector<std::string> subword_strings(std::string_view token,
                                         const SubwordConfig& cfg) {
  std::string wrapped;
  wrapped.reserve(token.size() + 2);
  wrapped.push_back('<');
  wrapped.append(token);
  wrapped.push_back('>');

  // Byte offsets of code point starts, plus the end.
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < wrapped.size(); ++i) {
    if ((static_cast<unsigned char>(wrapped[i]) & 0xC0) != 0x80) starts.push_back(i);
  }
  const std::size_t chars = starts.size();
  starts.push_back(wrapped.size());

  std::vector<std::string> grams;
  for (std::size_t i = 0; i < chars; ++i) {
    for (std::size_t n = cfg.minn; n <= static_cast<std::size_t>(cfg.maxn); ++n) {
      if (i + n > chars) break;
      if (n == chars) continue;  // the whole wrapped token
      grams.emplace_back(wrapped.substr(starts[i], starts[i + n] - starts[i]));
    }
  }
  return grams;
}

std::vector<std::uint32_t> subword_ngrams(std::string_view token,
                                          const SubwordConfig& cfg) {
  std::vector<std::uint32_t> ids;
  for (const auto& g : subword_strings(token, cfg)) {
    ids.push_back(fnv1a_32(g) % cfg.bucket);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

}  // namespace hashviz
