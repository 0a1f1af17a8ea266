// Acceptance run: one PASS/FAIL line per criterion. Exit status 1 if any fail.

#include "hashviz/atlas.hpp"
#include "hashviz/embed.hpp"
#include "hashviz/ingest.hpp"
#include "hashviz/knn.hpp"
#include "hashviz/service.hpp"
#include "hashviz/tsne.hpp"
#include "hashviz/vocab.hpp"
#include "httplib.h"
#include "json.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

using namespace hashviz;
using hashviz::testing::quote;
using hashviz::testing::read_file;
using hashviz::testing::run_command;
using hashviz::testing::TempDir;
using hashviz::testing::write_file;
using nlohmann::json;

namespace {

const std::string kBinary = HASHVIZ_BINARY;
const std::filesystem::path kSampleCorpus =
    std::filesystem::path(HASHVIZ_SOURCE_DIR) / "data" / "sample_tweets.jsonl.gz";

using Clock = std::chrono::steady_clock;

// Subsampling threshold for the ~13k-token corpus of the semantic check. The
// default 1e-4 is sized for corpora of millions of tokens and discards most of
// this one; roughly 100 / total tokens keeps the frequent-word damping.
constexpr double kSemanticSubsample = 1e-2;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------- knn

HashtagAtlas random_atlas(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  std::vector<std::string> tags;
  tags.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    char name[16];
    std::snprintf(name, sizeof name, "#h%06zu", i);
    tags.emplace_back(name);
  }
  Matrix<float> vectors(n, dim), coords(n, 2);
  for (auto& v : vectors.data()) v = g(rng);
  for (auto& v : coords.data()) v = g(rng);
  // A few exact duplicates so that ties actually occur.
  for (std::size_t i = 0; i + 1 < n; i += 97) {
    std::copy_n(vectors.row(i).begin(), dim, vectors.row(i + 1).begin());
  }
  return HashtagAtlas(std::move(tags), std::move(vectors), std::move(coords));
}

Outcome knn_oracle() {
  const auto start = Clock::now();
  std::size_t queries = 0;
  long double worst = 0;
  for (std::uint64_t a = 0; a < 50; ++a) {
    const auto atlas = random_atlas(1000, 25, 1000 + a);
    std::mt19937 rng(static_cast<unsigned>(a));
    for (int trial = 0; trial < 10; ++trial) {
      const std::size_t q = rng() % atlas.size();
      const std::size_t k = trial == 0 ? atlas.size() : kDefaultNeighbors;
      const auto got = top_k(atlas, atlas.tags()[q], k);
      ++queries;

      // Oracle: score every other row, full sort by (similarity desc, tag asc).
      std::vector<std::pair<double, std::string>> all;
      for (std::size_t i = 0; i < atlas.size(); ++i) {
        if (i == q) continue;
        all.emplace_back(cosine(atlas.vectors().row(q), atlas.vectors().row(i)), atlas.tags()[i]);
      }
      std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) {
        return x.first != y.first ? x.first > y.first : x.second < y.second;
      });
      all.resize(std::min(k, all.size()));
      if (!got || got->neighbors.size() != all.size()) {
        return {false, "size mismatch on atlas " + std::to_string(a)};
      }
      for (std::size_t i = 0; i < all.size(); ++i) {
        const auto& n = got->neighbors[i];
        if (n.tag != all[i].second || n.similarity != all[i].first) {
          return {false, "mismatch at rank " + std::to_string(i + 1) + " on atlas " +
                             std::to_string(a)};
        }
        // Cross-check the shared similarity against an extended-precision sum.
        const auto u = atlas.vectors().row(q);
        const auto v = atlas.vectors().row(*atlas.find(n.tag));
        long double uv = 0, uu = 0, vv = 0;
        for (std::size_t d = 0; d < u.size(); ++d) {
          uv += static_cast<long double>(u[d]) * v[d];
          uu += static_cast<long double>(u[d]) * u[d];
          vv += static_cast<long double>(v[d]) * v[d];
        }
        worst = std::max(worst, std::abs(uv / std::sqrt(uu * vv) - n.similarity));
      }
    }
  }
  const double elapsed = seconds_since(start);
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu queries on 50 atlases N=1000 dim=25, max |sim - long double| = %.2Le, %.2f s",
                queries, worst, elapsed);
  return {elapsed < 10.0 && worst < 1e-12L, buf};
}

// ---------------------------------------------------------------- SGNS

double toy_loss(const BasicEmbeddingModel<double>& m, std::int32_t center, std::int32_t context,
                int label) {
  const auto rows = m.composition.rows(center);
  double score = 0.0;
  for (std::size_t k = 0; k < m.dim; ++k) {
    double mean = 0.0;
    for (auto r : rows) mean += m.input(r, k);
    score += mean / static_cast<double>(rows.size()) * m.output(static_cast<std::size_t>(context), k);
  }
  const double s = 1.0 / (1.0 + std::exp(-score));
  return label ? -std::log(s) : -std::log(1.0 - s);
}

Outcome sgns_gradient() {
  const char* words[] = {"#storm", "flood", "#relief", "rain", "ab", "z", "#x1", "levee"};
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t v = 2 + seed % 5;
    std::vector<VocabEntry> entries;
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < v; ++i) {
      entries.push_back({words[i], v - i});
      total += v - i;
    }
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
      return a.count != b.count ? a.count > b.count : a.token < b.token;
    });
    const SubwordConfig sub{1 + static_cast<int>(seed % 3), 3 + static_cast<int>(seed % 3),
                            static_cast<std::uint32_t>(3 + seed % 11)};
    BasicEmbeddingModel<double> m(Vocabulary(entries, total, 1, 1e-4, 64), sub, 1 + seed % 5);
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    for (auto& x : m.input.data()) x = u(rng);
    for (auto& x : m.output.data()) x = u(rng);

    const auto center = static_cast<std::int32_t>(rng() % v);
    const auto context = static_cast<std::int32_t>(rng() % v);
    const int label = static_cast<int>(rng() % 2);
    const double lr = 0.01;
    const double h = 1e-6;

    auto probe = m;
    std::vector<double> fd;
    for (auto params : {probe.input.data(), probe.output.data()}) {
      for (auto& p : params) {
        const double keep = p;
        p = keep + h;
        const double up = toy_loss(probe, center, context, label);
        p = keep - h;
        const double down = toy_loss(probe, center, context, label);
        p = keep;
        fd.push_back((up - down) / (2 * h));
      }
    }
    auto stepped = m;
    train_pair<double>(stepped, center, context, label, lr);
    std::vector<double> analytic;
    for (auto [after, before] : {std::pair{stepped.input.data(), m.input.data()},
                                 std::pair{stepped.output.data(), m.output.data()}}) {
      for (std::size_t i = 0; i < after.size(); ++i) analytic.push_back(-(after[i] - before[i]) / lr);
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < fd.size(); ++i) {
      num += (analytic[i] - fd[i]) * (analytic[i] - fd[i]);
      den += fd[i] * fd[i];
    }
    if (den == 0.0) return {false, "zero gradient in toy model " + std::to_string(seed)};
    worst = std::max(worst, std::sqrt(num / den));
  }
  char buf[120];
  std::snprintf(buf, sizeof buf, "100 toy models dim<=5, worst relative error %.2e", worst);
  return {worst < 1e-4, buf};
}

// ---------------------------------------------------------------- t-SNE

Matrix<double> gaussian(std::size_t n, std::size_t d, std::mt19937_64& rng, double sd = 1.0) {
  Matrix<double> x(n, d);
  std::normal_distribution<double> g(0.0, sd);
  for (auto& v : x.data()) v = g(rng);
  return x;
}

Outcome tsne_calibration() {
  double worst_bits = 0.0, worst_sum = 0.0;
  bool symmetric = true;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 10 + rng() % 191;
    const std::size_t d = 2 + rng() % 30;
    auto x = gaussian(n, d, rng, 0.5 + static_cast<double>(rng() % 10));
    const double max_perp = std::min(50.0, static_cast<double>(n - 1) / 3.0);
    const double perp = 2.0 + std::uniform_real_distribution<double>(0.0, max_perp - 2.0)(rng);
    const auto a = calibrate_affinities(x, perp);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double entropy = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double p = a.conditional(i, j);
        if (p > 0.0) entropy -= p * std::log2(p);
        total += a.joint(i, j);
        symmetric = symmetric && a.joint(i, j) == a.joint(j, i);
      }
      worst_bits = std::max(worst_bits, std::abs(entropy - std::log2(perp)));
    }
    worst_sum = std::max(worst_sum, std::abs(total - 1.0));
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "20 sets N<=200: worst |log2 perp error| %.2e, worst |sum P - 1| %.2e, symmetric=%s",
                worst_bits, worst_sum, symmetric ? "yes" : "no");
  return {worst_bits < 1e-5 && worst_sum < 1e-6 && symmetric, buf};
}

double kl_oracle(const Matrix<double>& p, const Matrix<double>& y) {
  const std::size_t n = y.rows();
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) z += 1.0 / (1.0 + std::pow(y(i, 0) - y(j, 0), 2) + std::pow(y(i, 1) - y(j, 1), 2));
    }
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double q =
          1.0 / (1.0 + std::pow(y(i, 0) - y(j, 0), 2) + std::pow(y(i, 1) - y(j, 1), 2)) / z;
      kl += p(i, j) * std::log(p(i, j) / q);
    }
  }
  return kl;
}

Outcome tsne_gradient() {
  const auto start = Clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 4 + rng() % 17;
    auto x = gaussian(n, 5, rng);
    const auto p = calibrate_affinities(x, std::max(1.1, static_cast<double>(n - 1) / 3.0)).joint;
    auto y = gaussian(n, 2, rng);
    const auto g = kl_gradient(p, y);
    const double h = 1e-6;
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < y.data().size(); ++k) {
      const double keep = y.data()[k];
      y.data()[k] = keep + h;
      const double up = kl_oracle(p, y);
      y.data()[k] = keep - h;
      const double down = kl_oracle(p, y);
      y.data()[k] = keep;
      const double fd = (up - down) / (2 * h);
      num += (g.data()[k] - fd) * (g.data()[k] - fd);
      den += fd * fd;
    }
    worst = std::max(worst, std::sqrt(num / den));
  }

  // 100-point mixture of four Gaussians.
  std::mt19937_64 rng(77);
  auto x = gaussian(100, 10, rng);
  for (std::size_t i = 0; i < 100; ++i) x(i, i % 4) += 8.0;
  TsneConfig cfg;
  const auto r = run_tsne(x, cfg);
  const double elapsed = seconds_since(start);
  char buf[200];
  std::snprintf(buf, sizeof buf, "20 layouts N<=20: worst relative error %.2e; mixture KL %.4f -> %.4f; %.2f s",
                worst, r.initial_kl, r.final_kl, elapsed);
  return {worst < 1e-3 && r.final_kl < r.initial_kl && elapsed < 30.0, buf};
}

Outcome cluster_preservation() {
  int passed = 0;
  std::ostringstream ratios;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    auto x = gaussian(100, 10, rng);
    // Intra-spread: mean distance of a point from its cluster centroid.
    double spread = 0.0;
    for (std::size_t base : {0, 50}) {
      std::vector<double> mean(10, 0.0);
      for (std::size_t i = base; i < base + 50; ++i) {
        for (std::size_t d = 0; d < 10; ++d) mean[d] += x(i, d) / 50.0;
      }
      for (std::size_t i = base; i < base + 50; ++i) {
        double r2 = 0.0;
        for (std::size_t d = 0; d < 10; ++d) r2 += (x(i, d) - mean[d]) * (x(i, d) - mean[d]);
        spread += std::sqrt(r2) / 100.0;
      }
    }
    for (std::size_t i = 50; i < 100; ++i) x(i, 0) += 10.0 * spread;
    TsneConfig cfg;
    cfg.seed = seed;
    const auto y = run_tsne(x, cfg).coords;
    double c[2][2] = {};
    for (std::size_t i = 0; i < 100; ++i) {
      c[i / 50][0] += y(i, 0) / 50.0;
      c[i / 50][1] += y(i, 1) / 50.0;
    }
    double radius = 0.0;
    for (std::size_t i = 0; i < 100; ++i) {
      radius += std::hypot(y(i, 0) - c[i / 50][0], y(i, 1) - c[i / 50][1]) / 100.0;
    }
    const double ratio = std::hypot(c[0][0] - c[1][0], c[0][1] - c[1][1]) / radius;
    passed += ratio > 2.0;
    ratios << (seed ? " " : "") << std::lround(ratio * 10) / 10.0;
  }
  return {passed >= 9, std::to_string(passed) + "/10 seeds with separation > 2x radius (ratios " +
                           ratios.str() + ")"};
}

// ---------------------------------------------------------------- semantics

// Pseudo-words of random letters so topics share no subword structure by design.
std::vector<std::string> pseudo_words(std::size_t count, std::mt19937_64& rng,
                                      std::set<std::string>& used) {
  std::vector<std::string> out;
  std::uniform_int_distribution<int> len(4, 8), letter('a', 'z');
  while (out.size() < count) {
    std::string w;
    for (int i = len(rng); i > 0; --i) w.push_back(static_cast<char>(letter(rng)));
    if (used.insert(w).second) out.push_back(w);
  }
  return out;
}

double mean_cosine(const EmbeddingModel& m, const std::vector<std::string>& a,
                   const std::vector<std::string>& b, bool distinct_pairs) {
  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = distinct_pairs ? i + 1 : 0; j < b.size(); ++j) {
      sum += cosine(*token_vector(m, a[i]), *token_vector(m, b[j]));
      ++count;
    }
  }
  return sum / count;
}

Outcome semantic_check() {
  const auto start = Clock::now();
  int passed = 0;
  std::ostringstream gaps;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::set<std::string> used;
    const auto shared = pseudo_words(20, rng, used);
    std::vector<std::string> words[2], tags[2];
    for (int t = 0; t < 2; ++t) {
      words[t] = pseudo_words(50, rng, used);
      for (const auto& w : pseudo_words(3, rng, used)) tags[t].push_back("#" + w);
    }
    std::string corpus;
    for (int i = 0; i < 1000; ++i) {
      const int t = i % 2;
      std::vector<std::string> tokens;
      for (int k = 0; k < 8; ++k) tokens.push_back(words[t][rng() % 50]);
      for (int k = 0; k < 4; ++k) tokens.push_back(shared[rng() % 20]);
      for (int k = 0, n = 1 + static_cast<int>(rng() % 2); k < n; ++k) {
        tokens.push_back(tags[t][rng() % 3]);
      }
      std::shuffle(tokens.begin(), tokens.end(), rng);
      for (std::size_t k = 0; k < tokens.size(); ++k) corpus += (k ? " " : "") + tokens[k];
      corpus += '\n';
    }
    TempDir dir;
    write_file(dir / "tokens.txt", corpus);
    TrainConfig cfg;
    cfg.dim = 25;
    cfg.epochs = 5;
    cfg.workers = 1;
    cfg.seed = seed + 1;
    cfg.subsample_t = kSemanticSubsample;
    auto vocab = build_vocab_from_file(dir / "tokens.txt", kDefaultMinCount, cfg.subsample_t);
    const auto model = train(dir / "tokens.txt", std::move(vocab), SubwordConfig{}, cfg).model;
    const double intra = (mean_cosine(model, tags[0], tags[0], true) +
                          mean_cosine(model, tags[1], tags[1], true)) / 2.0;
    const double inter = mean_cosine(model, tags[0], tags[1], false);
    passed += intra - inter > 0.1;
    char buf[16];
    std::snprintf(buf, sizeof buf, "%s%.3f", seed ? " " : "", intra - inter);
    gaps << buf;
  }
  const double elapsed = seconds_since(start);
  char buf[64];
  std::snprintf(buf, sizeof buf, "; %.1f s", elapsed);
  return {passed >= 9 && elapsed < 60.0,
          std::to_string(passed) + "/10 seeds with intra - inter > 0.1 (gaps " + gaps.str() + ")" + buf};
}

// ---------------------------------------------------------------- pipeline

struct PipelineRun {
  TempDir dir;
  bool ok = false;
  std::string failure;
  double seconds = 0.0;
  std::vector<std::string> responses;  // every API body fetched
};

std::string cli_step(PipelineRun& run, const std::string& args) {
  const auto r = run_command(quote(kBinary) + " " + args, run.dir.path());
  if (r.exit_code != 0) {
    return "`hashviz " + args.substr(0, args.find(' ')) + "` exited " +
           std::to_string(r.exit_code) + ": " + r.err;
  }
  return "";
}

void run_pipeline(PipelineRun& run, Outcome& e2e) {
  const auto start = Clock::now();
  const auto& d = run.dir;
  for (const std::string& args :
       {"ingest --input " + quote(kSampleCorpus) + " --output " + quote(d / "tokens.txt") +
            " --manifest " + quote(d / "manifest.json"),
        "train --tokens " + quote(d / "tokens.txt") + " --model-out " + quote(d / "model.bin") +
            " --workers 1 --seed 7 --manifest " + quote(d / "manifest.json"),
        "project --model " + quote(d / "model.bin") + " --atlas-out " + quote(d / "atlas.tsv") +
            " --seed 7 --manifest " + quote(d / "manifest.json")}) {
    if (auto err = cli_step(run, args); !err.empty()) {
      e2e = {false, err};
      return;
    }
  }
  const auto atlas = load_atlas(d / "atlas.tsv");

  hashviz::testing::ServeProcess serve(kBinary, d, "--host 127.0.0.1 --port 0 --atlas " +
                                                       quote(d / "atlas.tsv"));
  const int port = serve.wait_for_port();
  if (port < 0) {
    e2e = {false, "serve did not start: " + serve.log()};
    return;
  }
  httplib::Client client("127.0.0.1", port);
  auto get = [&](const std::string& path) {
    auto res = client.Get(path);
    if (res) run.responses.push_back(res->body);
    return res;
  };
  const auto health = get("/api/health");
  const auto known = get("/api/neighbors?tag=lasvegasmassacre");
  const auto unknown = get("/api/neighbors?tag=notarealtagatall");
  for (const auto& tag : atlas.tags()) get("/api/neighbors?tag=" + tag.substr(1));
  get("/api/neighbors?tag=mandalaybayattack&k=1000");

  serve.signal(SIGINT);
  const int serve_exit = serve.wait_exit();
  run.seconds = seconds_since(start);

  const std::size_t expected = std::min<std::size_t>(100, atlas.size() - 1);
  std::ostringstream detail;
  bool ok = health && health->status == 200 && known && known->status == 200 && unknown &&
            unknown->status == 404 && serve_exit == 0;
  if (ok) {
    const auto doc = json::parse(known->body);
    const auto missing = json::parse(unknown->body);
    const auto self = atlas.find("#lasvegasmassacre");
    ok = doc["query"] == "#lasvegasmassacre" && doc["neighbors"].size() == expected && self &&
         doc["x"].get<double>() == std::stod(format_real(atlas.coords()(*self, 0))) &&
         doc["y"].get<double>() == std::stod(format_real(atlas.coords()(*self, 1))) &&
         missing["error"] == "unknown-hashtag";
    detail << "N=" << atlas.size() << " hashtags, #lasvegasmassacre -> " << doc["neighbors"].size()
           << " neighbors (expected " << expected << "), unknown -> 404 " << missing["error"];
  } else {
    detail << "health/known/unknown/serve-exit check failed: " << serve.log();
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "; pipeline %.1f s", run.seconds);
  detail << buf;
  run.ok = ok && run.seconds < 300.0;
  e2e = {run.ok, detail.str()};
}

// Streams bytes and flags any word, or four consecutive space-separated
// words, that belongs to the secret sets. Words are runs of [a-z0-9_#] and
// UTF-8 bytes; anything else separates.
class LeakScanner {
 public:
  LeakScanner(const std::unordered_set<std::string>& words,
              const std::unordered_set<std::string>& phrases)
      : words_(words), phrases_(phrases) {}

  void feed(std::string_view bytes) {
    for (char ch : bytes) {
      const auto c = static_cast<unsigned char>(std::tolower(static_cast<unsigned char>(ch)));
      if (std::isalnum(c) || c == '_' || c == '#' || c >= 0x80) {
        word_.push_back(static_cast<char>(c));
        continue;
      }
      end_word();
      if (c != ' ') window_.clear();
    }
  }

  void finish() {
    end_word();
    window_.clear();
  }

  const std::optional<std::string>& leak() const { return leak_; }

 private:
  void end_word() {
    if (word_.empty()) return;
    if (!leak_ && words_.count(word_)) leak_ = word_;
    window_.push_back(std::move(word_));
    word_.clear();
    if (window_.size() > 4) window_.erase(window_.begin());
    if (window_.size() == 4 && !leak_) {
      const auto phrase = window_[0] + " " + window_[1] + " " + window_[2] + " " + window_[3];
      if (phrases_.count(phrase)) leak_ = phrase;
    }
  }

  const std::unordered_set<std::string>& words_;
  const std::unordered_set<std::string>& phrases_;
  std::string word_;
  std::vector<std::string> window_;
  std::optional<std::string> leak_;
};

std::optional<std::string> scan_file(const std::filesystem::path& p, LeakScanner scanner) {
  std::ifstream in(p, std::ios::binary);
  std::vector<char> buf(1 << 20);
  while (in.read(buf.data(), static_cast<std::streamsize>(buf.size())) || in.gcount() > 0) {
    scanner.feed({buf.data(), static_cast<std::size_t>(in.gcount())});
  }
  scanner.finish();
  return scanner.leak();
}

Outcome privacy(const PipelineRun& run) {
  if (!run.ok) return {false, "pipeline run failed; nothing to scan"};
  // Secrets: every tweet id, every handle that appears in the corpus and each
  // tweet's text as four or more consecutive normalized tokens.
  std::unordered_set<std::string> ids, handles, phrases;
  CorpusReader reader(kSampleCorpus);
  const std::regex mention(R"(@([A-Za-z0-9_]+))");
  while (auto tweet = reader.next()) {
    if (!tweet->id.empty()) ids.insert(tweet->id);
    for (std::sregex_iterator it(tweet->text.begin(), tweet->text.end(), mention), end; it != end; ++it) {
      handles.insert((*it)[1]);
    }
    const auto tokens = normalize(tweet->text).tokens;
    if (tokens.size() >= 4) {
      phrases.insert(tokens[0] + " " + tokens[1] + " " + tokens[2] + " " + tokens[3]);
    }
  }
  for (int u = 0; u < 900; ++u) {  // screen names of every synthetic author
    char h[32];
    std::snprintf(h, sizeof h, "hvz_user%04d", u);
    handles.insert(h);
  }

  std::unordered_set<std::string> words = ids;
  for (const auto& h : handles) {
    std::string lower = h;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    words.insert(lower);
  }
  const LeakScanner scanner(words, phrases);
  for (const char* name : {"model.bin", "atlas.tsv"}) {
    if (auto leak = scan_file(run.dir / name, scanner)) {
      return {false, std::string(name) + " contains '" + *leak + "'"};
    }
  }
  for (const auto& body : run.responses) {
    auto api = scanner;
    api.feed(body);
    api.finish();
    if (api.leak()) return {false, "API response contains '" + *api.leak() + "'"};
  }
  std::ostringstream detail;
  detail << ids.size() << " ids, " << handles.size() << " handles, " << phrases.size()
         << " text fragments absent from model, atlas and " << run.responses.size()
         << " API responses";
  return {ids.size() >= 10000 && !handles.empty() && !phrases.empty(), detail.str()};
}

bool same_file(const std::filesystem::path& a, const std::filesystem::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb || std::filesystem::file_size(a) != std::filesystem::file_size(b)) return false;
  std::vector<char> ba(1 << 20), bb(1 << 20);
  while (fa && fb) {
    fa.read(ba.data(), static_cast<std::streamsize>(ba.size()));
    fb.read(bb.data(), static_cast<std::streamsize>(bb.size()));
    if (fa.gcount() != fb.gcount() ||
        !std::equal(ba.begin(), ba.begin() + fa.gcount(), bb.begin())) {
      return false;
    }
  }
  return true;
}

Outcome determinism(PipelineRun& run) {
  if (!run.ok) return {false, "pipeline run failed; nothing to compare"};
  const auto& d = run.dir;
  if (auto err = cli_step(run, "train --tokens " + quote(d / "tokens.txt") + " --model-out " +
                                   quote(d / "model2.bin") + " --workers 1 --seed 7");
      !err.empty()) {
    return {false, err};
  }
  if (auto err = cli_step(run, "project --model " + quote(d / "model2.bin") + " --atlas-out " +
                                   quote(d / "atlas2.tsv") + " --seed 7");
      !err.empty()) {
    return {false, err};
  }
  const bool model_same = same_file(d / "model.bin", d / "model2.bin");
  const bool atlas_same = same_file(d / "atlas.tsv", d / "atlas2.tsv");
  std::ostringstream detail;
  detail << "model " << std::filesystem::file_size(d / "model.bin") << " bytes "
         << (model_same ? "identical" : "DIFFERENT") << ", atlas "
         << (atlas_same ? "identical" : "DIFFERENT");
  return {model_same && atlas_same, detail.str()};
}

// ---------------------------------------------------------------- latency

Outcome latency() {
  auto atlas = std::make_shared<const HashtagAtlas>(random_atlas(50'000, 100, 5));
  ServiceConfig cfg;
  cfg.host = "127.0.0.1";
  cfg.port = 0;
  Service service(cfg);
  service.set_atlas(atlas);
  const int port = service.bind();
  if (port < 0) return {false, "bind failed"};
  std::thread server([&] { service.listen(); });
  while (!service.running()) std::this_thread::sleep_for(std::chrono::milliseconds(5));

  constexpr int kClients = 32;
  constexpr int kPerClient = 20;
  std::vector<std::vector<double>> samples(kClients);
  std::atomic<int> failures{0};
  std::vector<std::thread> clients;
  const auto start = Clock::now();
  for (int c = 0; c < kClients; ++c) {
    clients.emplace_back([&, c] {
      httplib::Client client("127.0.0.1", port);
      client.set_read_timeout(std::chrono::seconds(30));
      std::mt19937 rng(static_cast<unsigned>(c));
      for (int i = 0; i < kPerClient; ++i) {
        const auto& tag = atlas->tags()[rng() % atlas->size()];
        const auto t0 = Clock::now();
        auto res = client.Get("/api/neighbors?tag=" + tag.substr(1));
        samples[c].push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
        if (!res || res->status != 200) ++failures;
      }
    });
  }
  for (auto& t : clients) t.join();
  const double wall = seconds_since(start);
  service.stop();
  server.join();

  std::vector<double> all;
  for (const auto& s : samples) all.insert(all.end(), s.begin(), s.end());
  std::sort(all.begin(), all.end());
  const double p50 = all[all.size() / 2];
  const double p95 = all[static_cast<std::size_t>(std::ceil(0.95 * all.size())) - 1];
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "N=50000 dim=100, %d clients x %d requests on %u core(s): p50 %.1f ms, p95 %.1f ms, "
                "%.0f req/s, %d failures",
                kClients, kPerClient, std::thread::hardware_concurrency(), p50, p95,
                static_cast<double>(all.size()) / wall, failures.load());
  return {p95 < 100.0 && failures == 0, buf};
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](const std::string& name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << std::endl;
  };

  report("knn oracle equivalence", knn_oracle);
  report("sgns gradient check", sgns_gradient);
  report("t-sne calibration", tsne_calibration);
  report("t-sne gradient check", tsne_gradient);
  report("cluster preservation", cluster_preservation);
  report("semantic embedding check", semantic_check);

  PipelineRun run;
  report("end-to-end pipeline", [&] {
    Outcome o;
    run_pipeline(run, o);
    return o;
  });
  report("real-time latency", latency);
  report("privacy scan", [&] { return privacy(run); });
  report("determinism", [&] { return determinism(run); });

  std::cout << (failed ? std::to_string(failed) + " criteria failed" : "all criteria passed")
            << std::endl;
  return failed ? 1 : 0;
}
