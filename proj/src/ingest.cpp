#include "hashviz/ingest.hpp"

#include "hashviz/error.hpp"
#include "json.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <zlib.h>

#include <cstring>
#include <fstream>
#include <ostream>

namespace hashviz {

namespace {

constexpr int kReadChunk = 64 * 1024;

bool is_word_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

std::string to_valid_utf8(std::string_view bytes) {
  // fromUTF8 substitutes U+FFFD for ill-formed sequences.
  std::string out;
  icu::UnicodeString::fromUTF8(
      icu::StringPiece(bytes.data(), static_cast<int32_t>(bytes.size())))
      .toUTF8String(out);
  return out;
}

const nlohmann::json* find_string(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) return nullptr;
  return &*it;
}

// Reduces a whitespace-free, lowercased token to the allowed alphabet.
std::string clean_token(std::string_view raw) {
  std::string kept;
  kept.reserve(raw.size());
  for (char c : raw) {
    if (is_word_char(c) || c == '#') kept.push_back(c);
  }
  if (kept.find('#') == std::string::npos) return kept;

  for (auto pos = kept.find('#'); pos != std::string::npos;
       pos = kept.find('#', pos + 1)) {
    auto end = pos + 1;
    while (end < kept.size() && is_word_char(kept[end])) ++end;
    if (end > pos + 1) return kept.substr(pos, end - pos);
  }
  std::erase(kept, '#');
  return kept;
}

}  // namespace

struct CorpusReader::Handle {
  gzFile file = nullptr;
  ~Handle() {
    if (file) gzclose(file);
  }
};

CorpusReader::CorpusReader(const std::filesystem::path& path,
                           CorpusReaderOptions options)
    : handle_(std::make_unique<Handle>()), options_(options) {
  if (!std::filesystem::is_regular_file(path)) {
    throw Error("cannot read corpus '" + path.string() +
                "': not a readable file");
  }
  handle_->file = gzopen(path.c_str(), "rb");
  if (!handle_->file) {
    throw Error("cannot open corpus '" + path.string() +
                "': " + std::strerror(errno));
  }
  gzbuffer(handle_->file, kReadChunk);
}

CorpusReader::~CorpusReader() = default;
CorpusReader::CorpusReader(CorpusReader&&) noexcept = default;
CorpusReader& CorpusReader::operator=(CorpusReader&&) noexcept = default;

// Reads one line without its terminator. Overlong lines are drained and
// reported as malformed by clearing `line` and returning true with the
// skipped counter already bumped.
bool CorpusReader::read_line(std::string& line) {
  line.clear();
  char buf[4096];
  bool overlong = false;
  bool got_any = false;
  while (gzgets(handle_->file, buf, sizeof buf) != nullptr) {
    got_any = true;
    std::size_t n = std::strlen(buf);
    bool done = n > 0 && buf[n - 1] == '\n';
    if (done) --n;
    if (!overlong) {
      if (line.size() + n > options_.max_line_bytes) {
        overlong = true;
        line.clear();
        line.shrink_to_fit();
      } else {
        line.append(buf, n);
      }
    }
    if (done) break;
  }
  if (!got_any) {
    int err = 0;
    const char* msg = gzerror(handle_->file, &err);
    if (err != Z_OK && err != Z_STREAM_END) {
      throw Error(std::string("corpus read error: ") + msg);
    }
    return false;
  }
  if (overlong) {
    ++skipped_;
    line.clear();
  }
  return true;
}

std::optional<RawTweet> CorpusReader::next() {
  std::string line;
  while (read_line(line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (auto tweet = parse_tweet_line(line)) {
      ++kept_;
      return tweet;
    }
    ++skipped_;
  }
  return std::nullopt;
}

std::optional<RawTweet> parse_tweet_line(std::string_view line) {
  auto doc = nlohmann::json::parse(to_valid_utf8(line), nullptr,
                                   /*allow_exceptions=*/false);
  if (!doc.is_object()) return std::nullopt;

  const nlohmann::json* text = find_string(doc, "full_text");
  if (!text) {
    auto ext = doc.find("extended_tweet");
    if (ext != doc.end() && ext->is_object()) text = find_string(*ext, "full_text");
  }
  if (!text) text = find_string(doc, "text");
  if (!text) return std::nullopt;

  RawTweet tweet;
  tweet.text = text->get<std::string>();
  if (auto s = find_string(doc, "id_str")) {
    tweet.id = s->get<std::string>();
  } else if (auto it = doc.find("id"); it != doc.end()) {
    tweet.id = it->is_string() ? it->get<std::string>() : it->dump();
  }
  return tweet;
}

CleanTweet normalize(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");

  icu::UnicodeString input = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString folded = nfc->normalize(input, status);
  if (U_FAILURE(status)) throw Error("NFC normalization failed");
  folded.toLower(icu::Locale::getRoot());

  std::vector<std::string> raw_tokens;
  std::string current;
  for (int32_t i = 0; i < folded.length();) {
    UChar32 cp = folded.char32At(i);
    i += U16_LENGTH(cp);
    if (u_isUWhiteSpace(cp)) {
      if (!current.empty()) raw_tokens.push_back(std::move(current));
      current.clear();
    } else {
      icu::UnicodeString(cp).toUTF8String(current);
    }
  }
  if (!current.empty()) raw_tokens.push_back(std::move(current));

  CleanTweet out;
  for (const auto& raw : raw_tokens) {
    if (starts_with(raw, "http://") || starts_with(raw, "https://")) continue;
    if (starts_with(raw, "@")) continue;
    auto token = clean_token(raw);
    if (!token.empty()) out.tokens.push_back(std::move(token));
  }
  auto first = out.tokens.begin();
  while (first != out.tokens.end() && *first == "rt") ++first;
  out.tokens.erase(out.tokens.begin(), first);
  return out;
}

std::vector<std::string> extract_hashtags(const CleanTweet& tweet) {
  std::vector<std::string> tags;
  for (const auto& t : tweet.tokens) {
    if (is_hashtag(t)) tags.push_back(t);
  }
  return tags;
}

void write_token_line(std::ostream& out, const CleanTweet& tweet) {
  for (std::size_t i = 0; i < tweet.tokens.size(); ++i) {
    if (i) out << ' ';
    out << tweet.tokens[i];
  }
  out << '\n';
}

CleanTweet parse_token_line(std::string_view line) {
  CleanTweet tweet;
  std::size_t pos = 0;
  while (pos < line.size()) {
    auto start = line.find_first_not_of(" \t\r", pos);
    if (start == std::string_view::npos) break;
    auto end = line.find_first_of(" \t\r", start);
    if (end == std::string_view::npos) end = line.size();
    tweet.tokens.emplace_back(line.substr(start, end - start));
    pos = end;
  }
  return tweet;
}

IngestStats ingest_file(const std::filesystem::path& input,
                        const std::filesystem::path& output) {
  CorpusReader reader(input);
  std::ofstream out(output, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write token file '" + output.string() + "'");
  while (auto tweet = reader.next()) {
    write_token_line(out, normalize(tweet->text));
  }
  out.flush();
  if (!out) throw Error("write failed for '" + output.string() + "'");
  return {reader.kept(), reader.skipped()};
}

}  // namespace hashviz
