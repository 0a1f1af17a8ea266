#include "hashviz/embed.hpp"

#include "hashviz/error.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

namespace hashviz {

namespace {

constexpr char kModelMagic[5] = {'H', 'V', 'E', 'C', '1'};
constexpr double kSigmoidClamp = 8.0;
constexpr double kFinalLrFraction = 1e-4;
constexpr int kMaxNegativeRetries = 10;

}  // namespace

void TrainConfig::validate() const {
  if (dim < 1 || window < 1 || epochs < 0 || neg < 1 || workers < 1) {
    throw std::invalid_argument(
        "train config requires dim, window, neg, workers >= 1 and epochs >= 0");
  }
  if (!(lr0 > 0.0)) throw std::invalid_argument("lr0 must be > 0");
  if (!(subsample_t > 0.0 && subsample_t <= 1.0)) {
    throw std::invalid_argument("subsample_t must be in (0, 1]");
  }
}

CompositionIndex::CompositionIndex(const Vocabulary& vocab,
                                   const SubwordConfig& subword) {
  const auto v = static_cast<std::uint32_t>(vocab.size());
  offsets_.reserve(vocab.size() + 1);
  for (std::size_t id = 0; id < vocab.size(); ++id) {
    rows_.push_back(static_cast<std::uint32_t>(id));
    for (auto b : subword_ngrams(vocab.token(static_cast<std::int32_t>(id)), subword)) {
      rows_.push_back(v + b);
    }
    offsets_.push_back(rows_.size());
  }
}

template <typename Real>
BasicEmbeddingModel<Real>::BasicEmbeddingModel(Vocabulary vocab_,
                                               SubwordConfig subword_,
                                               std::size_t dim_)
    : vocab(std::move(vocab_)),
      subword(subword_),
      dim(dim_),
      input(vocab.size() + subword.bucket, dim_),
      output(vocab.size(), dim_),
      composition(vocab, subword) {}

EmbeddingModel init_model(Vocabulary vocab, const SubwordConfig& subword,
                          const TrainConfig& config) {
  config.validate();
  subword.validate();
  const std::size_t v = vocab.size();
  const std::size_t dim = static_cast<std::size_t>(config.dim);
  const double bytes =
      (static_cast<double>(v + subword.bucket) + static_cast<double>(v)) *
      static_cast<double>(dim) * sizeof(float);
  if (bytes > static_cast<double>(config.max_bytes)) {
    throw Error("model of (" + std::to_string(v) + " + " +
                std::to_string(subword.bucket) + ") x " + std::to_string(dim) +
                " input rows needs " + std::to_string(bytes / (1 << 20)) +
                " MiB, above the configured cap of " +
                std::to_string(config.max_bytes >> 20) +
                " MiB; lower --bucket or --dim");
  }

  EmbeddingModel model(std::move(vocab), subword, dim);
  const double bound = 1.0 / (2.0 * static_cast<double>(dim));
  const float upper = static_cast<float>(bound);
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> uniform(-bound, bound);
  for (auto& x : model.input.data()) {
    auto f = static_cast<float>(uniform(rng));
    x = f < upper ? f : std::nextafter(upper, 0.0f);
  }
  return model;
}

template <typename Real>
void compose_input_vector(const BasicEmbeddingModel<Real>& model,
                          std::int32_t id, std::span<Real> out) {
  auto rows = model.composition.rows(id);
  std::copy_n(model.input.row(rows[0]).begin(), model.dim, out.begin());
  if (rows.size() == 1) return;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    auto row = model.input.row(rows[r]);
    for (std::size_t k = 0; k < model.dim; ++k) out[k] += row[k];
  }
  const Real inv = Real(1) / static_cast<Real>(rows.size());
  for (auto& x : out) x *= inv;
}

template <typename Real>
std::vector<Real> compose_input_vector(const BasicEmbeddingModel<Real>& model,
                                       std::int32_t id) {
  std::vector<Real> v(model.dim);
  compose_input_vector<Real>(model, id, v);
  return v;
}

double sigmoid(double x) {
  x = std::clamp(x, -kSigmoidClamp, kSigmoidClamp);
  return 1.0 / (1.0 + std::exp(-x));
}

namespace {

// Shared SGNS kernel. `v` is the center's composed input vector and is kept
// equal to the mean of `rows` as they move; `saved_u` is scratch of size dim.
template <typename Real>
double sgns_update(BasicEmbeddingModel<Real>& model,
                   std::span<const std::uint32_t> rows, std::span<Real> v,
                   std::int32_t context, int label, Real lr,
                   std::span<Real> saved_u) {
  const std::size_t dim = model.dim;
  auto u = model.output.row(static_cast<std::size_t>(context));
  double score = 0.0;
  for (std::size_t k = 0; k < dim; ++k) score += static_cast<double>(u[k]) * v[k];
  const double s = sigmoid(score);
  const double loss = label ? -std::log(s) : -std::log(1.0 - s);
  const Real g = static_cast<Real>(label - s);

  std::copy_n(u.begin(), dim, saved_u.begin());
  const Real out_step = lr * g;
  for (std::size_t k = 0; k < dim; ++k) u[k] += out_step * v[k];

  const Real in_step = lr * g / static_cast<Real>(rows.size());
  for (auto r : rows) {
    auto row = model.input.row(r);
    for (std::size_t k = 0; k < dim; ++k) row[k] += in_step * saved_u[k];
  }
  for (std::size_t k = 0; k < dim; ++k) v[k] += in_step * saved_u[k];
  return loss;
}

}  // namespace

template <typename Real>
double train_pair(BasicEmbeddingModel<Real>& model, std::int32_t center,
                  std::int32_t context, int label, Real lr) {
  if (center < 0 || context < 0 ||
      static_cast<std::size_t>(center) >= model.vocab_size() ||
      static_cast<std::size_t>(context) >= model.vocab_size()) {
    throw std::out_of_range("train_pair: id out of range");
  }
  std::vector<Real> v(model.dim), scratch(model.dim);
  compose_input_vector<Real>(model, center, v);
  return sgns_update<Real>(model, model.composition.rows(center), v, context,
                           label, lr, scratch);
}

namespace {

bool all_finite(std::span<const float> values) {
  return std::all_of(values.begin(), values.end(),
                     [](float x) { return std::isfinite(x); });
}

struct ByteRange {
  std::uint64_t begin = 0;
  std::uint64_t end = 0;
};

// Splits the file into `parts` ranges aligned to line starts.
std::vector<ByteRange> split_lines(const std::filesystem::path& path, int parts) {
  const std::uint64_t size = std::filesystem::file_size(path);
  std::vector<std::uint64_t> cuts{0};
  std::ifstream in(path, std::ios::binary);
  for (int p = 1; p < parts; ++p) {
    std::uint64_t pos = size * static_cast<std::uint64_t>(p) / parts;
    pos = std::max(pos, cuts.back());
    if (pos > 0 && pos < size) {
      in.clear();
      in.seekg(static_cast<std::streamoff>(pos - 1));
      std::string rest;
      std::getline(in, rest);
      pos = in ? static_cast<std::uint64_t>(in.tellg()) : size;
    }
    cuts.push_back(std::min(pos, size));
  }
  cuts.push_back(size);
  std::vector<ByteRange> ranges;
  for (int p = 0; p < parts; ++p) ranges.push_back({cuts[p], cuts[p + 1]});
  return ranges;
}

struct WorkerTotals {
  double loss = 0.0;
  std::uint64_t pairs = 0;
};

class Trainer {
 public:
  Trainer(EmbeddingModel& model, const TrainConfig& config,
          std::uint64_t scheduled_tokens)
      : model_(model), config_(config), scheduled_(scheduled_tokens) {}

  WorkerTotals run_range(const std::filesystem::path& path, ByteRange range,
                         std::mt19937_64& rng) {
    WorkerTotals totals;
    std::ifstream in(path, std::ios::binary);
    in.seekg(static_cast<std::streamoff>(range.begin));
    std::uint64_t pos = range.begin;
    std::string line;
    std::vector<std::int32_t> ids;
    std::vector<float> v(model_.dim), scratch(model_.dim);
    while (pos < range.end && std::getline(in, line)) {
      pos += line.size() + 1;
      ids.clear();
      for (const auto& token : parse_token_line(line).tokens) {
        if (auto id = model_.vocab.find(token)) ids.push_back(*id);
      }
      const auto in_vocab = ids.size();
      const double progress =
          std::min(1.0, static_cast<double>(processed_.load(std::memory_order_relaxed)) /
                            static_cast<double>(std::max<std::uint64_t>(scheduled_, 1)));
      const auto lr = static_cast<float>(config_.lr0 *
                                         (1.0 - progress * (1.0 - kFinalLrFraction)));
      train_line(ids, lr, rng, v, scratch, totals);
      processed_.fetch_add(in_vocab, std::memory_order_relaxed);
    }
    return totals;
  }

 private:
  void train_line(std::vector<std::int32_t>& ids, float lr, std::mt19937_64& rng,
                  std::vector<float>& v, std::vector<float>& scratch,
                  WorkerTotals& totals) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::erase_if(ids, [&](std::int32_t id) {
      return coin(rng) < model_.vocab.discard_prob(id);
    });
    const auto n = static_cast<std::ptrdiff_t>(ids.size());
    std::uniform_int_distribution<int> radius(1, config_.window);
    const auto table = model_.vocab.negative_table();
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto b = static_cast<std::ptrdiff_t>(radius(rng));
      const auto center = ids[i];
      const auto rows = model_.composition.rows(center);
      compose_input_vector<float>(model_, center, v);
      for (auto j = std::max<std::ptrdiff_t>(0, i - b);
           j <= std::min<std::ptrdiff_t>(n - 1, i + b); ++j) {
        if (j == i) continue;
        const auto context = ids[j];
        totals.loss += sgns_update<float>(model_, rows, v, context, 1, lr, scratch);
        ++totals.pairs;
        for (int k = 0; k < config_.neg; ++k) {
          std::int32_t negative = context;
          for (int attempt = 0; attempt < kMaxNegativeRetries && negative == context;
               ++attempt) {
            negative = draw_negative(table, rng);
          }
          if (negative == context) continue;
          totals.loss += sgns_update<float>(model_, rows, v, negative, 0, lr, scratch);
          ++totals.pairs;
        }
      }
    }
  }

  EmbeddingModel& model_;
  const TrainConfig& config_;
  std::uint64_t scheduled_;
  std::atomic<std::uint64_t> processed_{0};
};

}  // namespace

TrainResult train(const std::filesystem::path& token_file, Vocabulary vocab,
                  const SubwordConfig& subword, const TrainConfig& config) {
  if (!std::filesystem::is_regular_file(token_file)) {
    throw Error("cannot read token file '" + token_file.string() + "'");
  }
  std::uint64_t retained = 0;
  for (const auto& e : vocab.entries()) retained += e.count;
  if (vocab.subsample_threshold() != config.subsample_t) {
    std::vector<VocabEntry> entries(vocab.entries().begin(), vocab.entries().end());
    vocab = Vocabulary(std::move(entries), vocab.total_tokens(), vocab.min_count(),
                       config.subsample_t);
  }

  TrainResult result{init_model(std::move(vocab), subword, config), {}, 0};
  Trainer trainer(result.model, config,
                  retained * static_cast<std::uint64_t>(config.epochs));

  const auto ranges = split_lines(token_file, config.workers);
  std::vector<std::mt19937_64> rngs;
  for (int w = 0; w < config.workers; ++w) {
    std::seed_seq seq{config.seed, static_cast<std::uint64_t>(w), std::uint64_t{0x5eed}};
    rngs.emplace_back(seq);
  }

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<WorkerTotals> totals(config.workers);
    if (config.workers == 1) {
      totals[0] = trainer.run_range(token_file, ranges[0], rngs[0]);
    } else {
      std::vector<std::jthread> threads;
      for (int w = 0; w < config.workers; ++w) {
        threads.emplace_back([&, w] {
          totals[w] = trainer.run_range(token_file, ranges[w], rngs[w]);
        });
      }
    }
    WorkerTotals sum;
    for (const auto& t : totals) {
      sum.loss += t.loss;
      sum.pairs += t.pairs;
    }
    if (!all_finite(result.model.input.data()) || !all_finite(result.model.output.data())) {
      throw Error("non-finite model parameters after epoch " + std::to_string(epoch + 1));
    }
    result.epoch_mean_loss.push_back(sum.pairs ? sum.loss / static_cast<double>(sum.pairs)
                                               : 0.0);
    result.pairs += sum.pairs;
  }
  return result;
}

std::optional<std::vector<float>> token_vector(const EmbeddingModel& model,
                                               std::string_view token) {
  auto id = model.vocab.find(token);
  if (!id) return std::nullopt;
  return compose_input_vector<float>(model, *id);
}

namespace {

void put_u32(std::string& out, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(const unsigned char* p, int bytes) {
  std::uint64_t x = 0;
  for (int i = 0; i < bytes; ++i) x |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return x;
}

void write_floats(std::ofstream& out, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size_bytes()));
  } else {
    std::string buf;
    for (float f : values) put_u32(buf, std::bit_cast<std::uint32_t>(f));
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
}

void read_floats(std::ifstream& in, std::span<float> values) {
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size_bytes()));
  if constexpr (std::endian::native != std::endian::little) {
    for (auto& f : values) {
      auto bytes = std::bit_cast<std::array<unsigned char, 4>>(f);
      f = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(bytes.data(), 4)));
    }
  }
}

constexpr std::size_t kHeaderBytes = sizeof kModelMagic + 5 * 4 + 8;

}  // namespace

void save_model(const EmbeddingModel& model, const std::filesystem::path& path) {
  const std::string vocab_tsv = model.vocab.to_tsv();
  std::string header(kModelMagic, sizeof kModelMagic);
  put_u32(header, static_cast<std::uint32_t>(model.vocab_size()));
  put_u32(header, model.subword.bucket);
  put_u32(header, static_cast<std::uint32_t>(model.dim));
  put_u32(header, static_cast<std::uint32_t>(model.subword.minn));
  put_u32(header, static_cast<std::uint32_t>(model.subword.maxn));
  put_u64(header, vocab_tsv.size());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write model '" + path.string() + "'");
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(vocab_tsv.data(), static_cast<std::streamsize>(vocab_tsv.size()));
  write_floats(out, model.input.data());
  write_floats(out, model.output.data());
  out.flush();
  if (!out) throw Error("write failed for model '" + path.string() + "'");
}

EmbeddingModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read model '" + path.string() + "'");
  const std::uint64_t file_size = std::filesystem::file_size(path);

  std::array<unsigned char, kHeaderBytes> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  if (!in || std::memcmp(header.data(), kModelMagic, sizeof kModelMagic) != 0) {
    throw Error("'" + path.string() + "' is not an HVEC1 model file");
  }
  const unsigned char* p = header.data() + sizeof kModelMagic;
  const auto v = static_cast<std::uint32_t>(get_le(p, 4));
  SubwordConfig subword;
  subword.bucket = static_cast<std::uint32_t>(get_le(p + 4, 4));
  const auto dim = static_cast<std::uint32_t>(get_le(p + 8, 4));
  subword.minn = static_cast<int>(get_le(p + 12, 4));
  subword.maxn = static_cast<int>(get_le(p + 16, 4));
  const std::uint64_t vocab_bytes = get_le(p + 20, 8);

  const std::uint64_t expected =
      kHeaderBytes + vocab_bytes +
      (static_cast<std::uint64_t>(v) * 2 + subword.bucket) * dim * sizeof(float);
  if (dim == 0 || file_size != expected) {
    throw Error("model '" + path.string() + "' has " + std::to_string(file_size) +
                " bytes, header implies " + std::to_string(expected));
  }
  try {
    subword.validate();
  } catch (const std::invalid_argument& e) {
    throw Error("model '" + path.string() + "': " + e.what());
  }

  std::string tsv(vocab_bytes, '\0');
  in.read(tsv.data(), static_cast<std::streamsize>(vocab_bytes));
  Vocabulary vocab = Vocabulary::from_tsv(tsv);
  if (vocab.size() != v) {
    throw Error("model '" + path.string() + "': vocabulary size mismatch");
  }
  EmbeddingModel model(std::move(vocab), subword, dim);
  read_floats(in, model.input.data());
  read_floats(in, model.output.data());
  if (!in) throw Error("model '" + path.string() + "': truncated matrix data");
  return model;
}

template struct BasicEmbeddingModel<float>;
template struct BasicEmbeddingModel<double>;
template void compose_input_vector<float>(const BasicEmbeddingModel<float>&,
                                          std::int32_t, std::span<float>);
template void compose_input_vector<double>(const BasicEmbeddingModel<double>&,
                                           std::int32_t, std::span<double>);
template std::vector<float> compose_input_vector<float>(const BasicEmbeddingModel<float>&,
                                                       std::int32_t);
template std::vector<double> compose_input_vector<double>(
    const BasicEmbeddingModel<double>&, std::int32_t);
template double train_pair<float>(BasicEmbeddingModel<float>&, std::int32_t,
                                  std::int32_t, int, float);
template double train_pair<double>(BasicEmbeddingModel<double>&, std::int32_t,
                                   std::int32_t, int, double);

}  // namespace hashviz
