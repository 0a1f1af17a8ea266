#include "hashviz/atlas.hpp"

#include "hashviz/error.hpp"
#include "hashviz/ingest.hpp"
#include "hashviz/knn.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <type_traits>

namespace hashviz {

HashtagAtlas::HashtagAtlas(std::vector<std::string> tags, Matrix<float> vectors,
                           Matrix<float> coords)
    : tags_(std::move(tags)), vectors_(std::move(vectors)), coords_(std::move(coords)) {
  const std::size_t n = tags_.size();
  if (vectors_.rows() != n || coords_.rows() != n || coords_.cols() != 2) {
    throw std::invalid_argument("atlas rows of tags, vectors and coords disagree");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_hashtag(tags_[i])) {
      throw std::invalid_argument("atlas tag '" + tags_[i] + "' is not a hashtag");
    }
    if (i > 0 && !(tags_[i - 1] < tags_[i])) {
      throw std::invalid_argument("atlas tags must be unique and sorted");
    }
  }
  for (float c : coords_.data()) {
    if (!std::isfinite(c)) throw std::invalid_argument("atlas coordinates must be finite");
  }
  norms_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    norms_.push_back(std::sqrt(dot(vectors_.row(i), vectors_.row(i))));
  }
}

std::optional<std::size_t> HashtagAtlas::find(std::string_view tag) const {
  auto it = std::lower_bound(tags_.begin(), tags_.end(), tag);
  if (it == tags_.end() || *it != tag) return std::nullopt;
  return static_cast<std::size_t>(it - tags_.begin());
}

HashtagAtlas build_atlas(const EmbeddingModel& model, const TsneConfig& config,
                         AtlasReport* report) {
  std::vector<std::pair<std::string, std::int32_t>> hashtags;
  for (std::size_t id = 0; id < model.vocab_size(); ++id) {
    const auto& token = model.vocab.token(static_cast<std::int32_t>(id));
    if (is_hashtag(token)) hashtags.emplace_back(token, static_cast<std::int32_t>(id));
  }
  if (hashtags.size() < 3) {
    throw Error("too few hashtags to project (" + std::to_string(hashtags.size()) +
                " in vocabulary, need at least 3)");
  }
  std::sort(hashtags.begin(), hashtags.end());

  const std::size_t n = hashtags.size();
  Matrix<float> vectors(n, model.dim);
  Matrix<double> high(n, model.dim);
  std::vector<std::string> tags;
  tags.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    tags.push_back(hashtags[i].first);
    compose_input_vector<float>(model, hashtags[i].second, vectors.row(i));
    std::copy_n(vectors.row(i).begin(), model.dim, high.row(i).begin());
  }

  TsneResult tsne = run_tsne(high, config);
  Matrix<float> coords(n, 2);
  for (std::size_t k = 0; k < coords.data().size(); ++k) {
    coords.data()[k] = static_cast<float>(tsne.coords.data()[k]);
  }
  if (report) {
    *report = {tsne.initial_kl, tsne.final_kl, tsne.perplexity, tsne.perplexity_clamped};
  }
  return HashtagAtlas(std::move(tags), std::move(vectors), std::move(coords));
}

std::string format_real(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

void write_atlas(std::ostream& out, const HashtagAtlas& atlas) {
  out << "#atlas v1 " << atlas.size() << ' ' << atlas.dim() << '\n';
  for (std::size_t i = 0; i < atlas.size(); ++i) {
    out << atlas.tags()[i] << '\t' << format_real(atlas.coords()(i, 0)) << '\t'
        << format_real(atlas.coords()(i, 1)) << '\t';
    auto v = atlas.vectors().row(i);
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (k) out << ',';
      out << format_real(v[k]);
    }
    out << '\n';
  }
}

void save_atlas(const HashtagAtlas& atlas, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write atlas '" + path.string() + "'");
  write_atlas(out, atlas);
  out.flush();
  if (!out) throw Error("write failed for atlas '" + path.string() + "'");
}

namespace {

[[noreturn]] void atlas_error(std::size_t line, const std::string& what) {
  throw Error("atlas line " + std::to_string(line) + ": " + what);
}

template <typename T>
T parse_number(std::string_view s, std::size_t line, const char* what) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    atlas_error(line, std::string("bad ") + what + " '" + std::string(s) + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) atlas_error(line, std::string("non-finite ") + what);
  }
  return value;
}

}  // namespace

HashtagAtlas read_atlas(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) atlas_error(1, "empty file");
  constexpr std::string_view kMagic = "#atlas v1 ";
  std::string_view header = line;
  if (header.substr(0, kMagic.size()) != kMagic) atlas_error(1, "missing '#atlas v1' header");
  header.remove_prefix(kMagic.size());
  const auto sp = header.find(' ');
  if (sp == std::string_view::npos) atlas_error(1, "header must be '#atlas v1 <N> <dim>'");
  const auto n = parse_number<std::size_t>(header.substr(0, sp), 1, "N");
  const auto dim = parse_number<std::size_t>(header.substr(sp + 1), 1, "dim");
  if (dim == 0) atlas_error(1, "dim must be >= 1");

  std::vector<std::string> tags;
  Matrix<float> vectors(n, dim);
  Matrix<float> coords(n, 2);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::size_t row = tags.size();
    if (row >= n) atlas_error(lineno, "more rows than the header's N=" + std::to_string(n));

    std::string_view rest = line;
    std::string_view fields[4];
    for (int f = 0; f < 4; ++f) {
      const auto tab = rest.find('\t');
      if (f < 3 && tab == std::string_view::npos) atlas_error(lineno, "expected 4 tab-separated fields");
      fields[f] = rest.substr(0, tab);
      rest = tab == std::string_view::npos ? std::string_view{} : rest.substr(tab + 1);
    }
    if (!rest.empty()) atlas_error(lineno, "trailing fields");
    if (!is_hashtag(fields[0])) atlas_error(lineno, "tag '" + std::string(fields[0]) + "' is not a hashtag");
    tags.emplace_back(fields[0]);
    coords(row, 0) = parse_number<float>(fields[1], lineno, "x");
    coords(row, 1) = parse_number<float>(fields[2], lineno, "y");

    std::string_view values = fields[3];
    for (std::size_t k = 0; k < dim; ++k) {
      const auto comma = values.find(',');
      if ((k + 1 < dim) == (comma == std::string_view::npos)) {
        atlas_error(lineno, "expected " + std::to_string(dim) + " vector components");
      }
      vectors(row, k) = parse_number<float>(values.substr(0, comma), lineno, "vector component");
      values = comma == std::string_view::npos ? std::string_view{} : values.substr(comma + 1);
    }
  }
  if (tags.size() != n) {
    atlas_error(lineno, "header declares " + std::to_string(n) + " rows, found " +
                            std::to_string(tags.size()));
  }
  try {
    return HashtagAtlas(std::move(tags), std::move(vectors), std::move(coords));
  } catch (const std::invalid_argument& e) {
    throw Error(std::string("atlas: ") + e.what());
  }
}

HashtagAtlas load_atlas(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read atlas '" + path.string() + "'");
  try {
    return read_atlas(in);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace hashviz
