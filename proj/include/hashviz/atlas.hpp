#pragma once

#include "hashviz/embed.hpp"
#include "hashviz/matrix.hpp"
#include "hashviz/tsne.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hashviz {

/// Every hashtag of a model with its embedding vector and 2-D coordinate.
/// Rows are sorted by tag. Immutable once constructed.
class HashtagAtlas {
 public:
  HashtagAtlas(std::vector<std::string> tags, Matrix<float> vectors,
               Matrix<float> coords);

  std::size_t size() const { return tags_.size(); }
  std::size_t dim() const { return vectors_.cols(); }
  const std::vector<std::string>& tags() const { return tags_; }
  const Matrix<float>& vectors() const { return vectors_; }
  const Matrix<float>& coords() const { return coords_; }
  // Euclidean norm of each vector row, as computed by knn's dot().
  const std::vector<double>& norms() const { return norms_; }

  std::optional<std::size_t> find(std::string_view tag) const;

  bool operator==(const HashtagAtlas& other) const {
    return tags_ == other.tags_ && vectors_ == other.vectors_ &&
           coords_ == other.coords_;
  }

 private:
  std::vector<std::string> tags_;
  Matrix<float> vectors_;
  Matrix<float> coords_;
  std::vector<double> norms_;
};

struct AtlasReport {
  double initial_kl = 0.0;
  double final_kl = 0.0;
  double perplexity = 0.0;
  bool perplexity_clamped = false;
};

// Throws Error("too few hashtags to project") below 3 hashtags.
HashtagAtlas build_atlas(const EmbeddingModel& model, const TsneConfig& config,
                         AtlasReport* report = nullptr);

// `%.9g` rendering used by every text output of atlas reals.
std::string format_real(double value);

// TSV: `#atlas v1 <N> <dim>` then `tag\tx\ty\tv1,...,vdim` per row.
void write_atlas(std::ostream& out, const HashtagAtlas& atlas);
void save_atlas(const HashtagAtlas& atlas, const std::filesystem::path& path);
HashtagAtlas read_atlas(std::istream& in);
HashtagAtlas load_atlas(const std::filesystem::path& path);

}  // namespace hashviz
