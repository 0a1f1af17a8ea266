#pragma once

#include "hashviz/matrix.hpp"
#include "hashviz/vocab.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace hashviz {

struct TrainConfig {
  int dim = 100;
  int window = 5;
  int epochs = 5;
  double lr0 = 0.05;
  int neg = 5;
  std::uint64_t seed = 1;
  int workers = 1;
  double subsample_t = kDefaultSubsampleThreshold;
  // Refuse to allocate matrices larger than this.
  std::size_t max_bytes = std::size_t{4} << 30;

  void validate() const;
};

// Row indices composing a token's input vector: its own row followed by the
// (sorted, deduplicated) subword bucket rows at offset V.
class CompositionIndex {
 public:
  CompositionIndex() = default;
  CompositionIndex(const Vocabulary& vocab, const SubwordConfig& subword);

  std::span<const std::uint32_t> rows(std::int32_t id) const {
    return {rows_.data() + offsets_[id], offsets_[id + 1] - offsets_[id]};
  }

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<std::uint32_t> rows_;
};

/// Skip-gram embedding model with hashed subword rows.
///
/// `input` has V + bucket rows: token rows first, bucket rows after.
/// `output` has V rows.
template <typename Real>
struct BasicEmbeddingModel {
  BasicEmbeddingModel(Vocabulary vocab, SubwordConfig subword, std::size_t dim);

  Vocabulary vocab;
  SubwordConfig subword;
  std::size_t dim;
  Matrix<Real> input;
  Matrix<Real> output;
  CompositionIndex composition;

  std::size_t vocab_size() const { return vocab.size(); }
};

using EmbeddingModel = BasicEmbeddingModel<float>;

// Input rows uniform in [-1/(2 dim), 1/(2 dim)), output rows zero.
EmbeddingModel init_model(Vocabulary vocab, const SubwordConfig& subword,
                          const TrainConfig& config);

template <typename Real>
void compose_input_vector(const BasicEmbeddingModel<Real>& model,
                          std::int32_t id, std::span<Real> out);

template <typename Real>
std::vector<Real> compose_input_vector(const BasicEmbeddingModel<Real>& model,
                                       std::int32_t id);

// Logistic function with the argument clamped to [-8, 8].
double sigmoid(double x);

/// One SGNS step on (center, context, label). Updates the context's output
/// row and every row composing the center's input vector, then returns the
/// logistic loss evaluated before the update.
template <typename Real>
double train_pair(BasicEmbeddingModel<Real>& model, std::int32_t center,
                  std::int32_t context, int label, Real lr);

struct TrainResult {
  EmbeddingModel model;
  std::vector<double> epoch_mean_loss;
  std::uint64_t pairs = 0;
};

/// Trains on a token file (one tweet per line). Tokens missing from `vocab`
/// are skipped. Bit-for-bit reproducible when `workers == 1`.
TrainResult train(const std::filesystem::path& token_file, Vocabulary vocab,
                  const SubwordConfig& subword, const TrainConfig& config);

// Composed vector of a known token; nullopt for tokens not in the vocabulary.
std::optional<std::vector<float>> token_vector(const EmbeddingModel& model,
                                               std::string_view token);

// Binary "HVEC1" model format.
void save_model(const EmbeddingModel& model, const std::filesystem::path& path);
EmbeddingModel load_model(const std::filesystem::path& path);

}  // namespace hashviz
