// hashviz: corpus -> tokens -> embeddings -> hashtag atlas -> neighbor queries.

#include "CLI11.hpp"
#include "hashviz/atlas.hpp"
#include "hashviz/embed.hpp"
#include "hashviz/error.hpp"
#include "hashviz/ingest.hpp"
#include "hashviz/knn.hpp"
#include "hashviz/service.hpp"
#include "hashviz/vocab.hpp"
#include "json.hpp"

#include <chrono>
#include <csignal>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <pthread.h>
#include <signal.h>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Merges one stage's record into the manifest file, creating it if needed.
void update_manifest(const std::string& path, const std::string& stage, json record,
                     const json& paths) {
  if (path.empty()) return;
  json doc = json::object();
  if (std::ifstream in(path); in) {
    doc = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (!doc.is_object()) doc = json::object();
  }
  doc["format"] = "hashviz-manifest v1";
  for (const auto& [key, value] : paths.items()) doc["paths"][key] = value;
  record["finished_at"] = utc_now();
  doc["stages"][stage] = std::move(record);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw hashviz::Error("cannot write manifest '" + path + "'");
  out << doc.dump(2) << '\n';
}

std::string absolute(const std::string& p) { return fs::absolute(p).lexically_normal().string(); }

struct IngestArgs {
  std::string input, output, manifest;
};

int run_ingest(const IngestArgs& args) {
  const auto stats = hashviz::ingest_file(args.input, args.output);
  std::cout << "kept=" << stats.kept << " skipped=" << stats.skipped << '\n';
  update_manifest(args.manifest, "ingest",
                  {{"kept", stats.kept}, {"skipped", stats.skipped}},
                  {{"corpus", absolute(args.input)}, {"tokens", absolute(args.output)}});
  return 0;
}

struct TrainArgs {
  std::string tokens, model_out, manifest;
  hashviz::TrainConfig train;
  hashviz::SubwordConfig subword;
  std::uint64_t min_count = hashviz::kDefaultMinCount;
  std::size_t max_mem_mb = 4096;
};

int run_train(TrainArgs args) {
  args.train.max_bytes = args.max_mem_mb << 20;
  args.train.validate();
  args.subword.validate();
  auto vocab = hashviz::build_vocab_from_file(args.tokens, args.min_count, args.train.subsample_t);
  std::size_t hashtags = 0;
  for (const auto& e : vocab.entries()) hashtags += hashviz::is_hashtag(e.token);

  auto result = hashviz::train(args.tokens, std::move(vocab), args.subword, args.train);
  hashviz::save_model(result.model, args.model_out);

  const double final_loss =
      result.epoch_mean_loss.empty() ? 0.0 : result.epoch_mean_loss.back();
  std::cout << "vocab=" << result.model.vocab_size() << " hashtags=" << hashtags
            << " final_mean_loss=" << hashviz::format_real(final_loss) << '\n';

  const auto& t = args.train;
  update_manifest(args.manifest, "train",
                  {{"vocab_size", result.model.vocab_size()},
                   {"hashtags", hashtags},
                   {"pairs", result.pairs},
                   {"epoch_mean_loss", result.epoch_mean_loss},
                   {"config",
                    {{"dim", t.dim}, {"window", t.window}, {"epochs", t.epochs},
                     {"lr0", t.lr0}, {"neg", t.neg}, {"seed", t.seed},
                     {"workers", t.workers}, {"subsample_t", t.subsample_t},
                     {"min_count", args.min_count}}},
                   {"subword",
                    {{"minn", args.subword.minn}, {"maxn", args.subword.maxn},
                     {"bucket", args.subword.bucket}}}},
                  {{"tokens", absolute(args.tokens)}, {"model", absolute(args.model_out)}});
  return 0;
}

struct ProjectArgs {
  std::string model, atlas_out, manifest;
  hashviz::TsneConfig tsne;
};

int run_project(const ProjectArgs& args) {
  args.tsne.validate();
  const auto model = hashviz::load_model(args.model);
  hashviz::AtlasReport report;
  const auto atlas = hashviz::build_atlas(model, args.tsne, &report);
  if (report.perplexity_clamped) {
    std::cerr << "warning: perplexity " << args.tsne.perplexity << " too large for "
              << atlas.size() << " hashtags; clamped to "
              << hashviz::format_real(report.perplexity) << '\n';
  }
  hashviz::save_atlas(atlas, args.atlas_out);
  std::cout << "hashtags=" << atlas.size()
            << " final_kl=" << hashviz::format_real(report.final_kl) << '\n';

  const auto& t = args.tsne;
  update_manifest(args.manifest, "project",
                  {{"hashtags", atlas.size()},
                   {"initial_kl", report.initial_kl},
                   {"final_kl", report.final_kl},
                   {"perplexity_used", report.perplexity},
                   {"config",
                    {{"perplexity", t.perplexity}, {"iters", t.iters},
                     {"exaggeration", t.exaggeration},
                     {"exaggeration_iters", t.exaggeration_iters}, {"eta", t.eta},
                     {"pca_dim", t.pca_dim}, {"seed", t.seed}}}},
                  {{"model", absolute(args.model)}, {"atlas", absolute(args.atlas_out)}});
  return 0;
}

struct ServeArgs {
  hashviz::ServiceConfig service;
  std::string assets;
};

int run_serve(ServeArgs args) {
  if (!args.assets.empty()) args.service.assets_dir = args.assets;
  auto atlas = std::make_shared<const hashviz::HashtagAtlas>(
      hashviz::load_atlas(args.service.atlas_path));

  // Block termination signals in every thread; one thread waits for them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  hashviz::Service service(args.service);
  service.set_atlas(atlas);
  const int port = service.bind();
  if (port < 0) {
    std::cerr << "error: cannot bind " << args.service.host << ':' << args.service.port
              << '\n';
    return kExitData;
  }
  std::cerr << "serving " << atlas->size() << " hashtags on http://" << args.service.host
            << ':' << port << '\n';

  std::atomic<bool> interrupted{false};
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    interrupted = true;
    service.stop();
  });
  const bool ok = service.listen();
  if (!interrupted) pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  if (!interrupted && !ok) {
    std::cerr << "error: listener stopped unexpectedly\n";
    return kExitData;
  }
  std::cerr << "shut down\n";
  return 0;
}

struct QueryArgs {
  std::string atlas, tag;
  std::size_t k = hashviz::kDefaultNeighbors;
};

int run_query(const QueryArgs& args) {
  const auto atlas = hashviz::load_atlas(args.atlas);
  const auto result = hashviz::top_k(atlas, args.tag, args.k);
  if (!result) {
    std::cerr << "unknown-hashtag: " << hashviz::normalize_query(args.tag) << '\n';
    return kExitData;
  }
  std::size_t rank = 0;
  for (const auto& n : result->neighbors) {
    char sim[32];
    std::snprintf(sim, sizeof sim, "%.6f", n.similarity);
    std::cout << ++rank << '\t' << n.tag << '\t' << sim << '\t' << hashviz::format_real(n.x)
              << '\t' << hashviz::format_real(n.y) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hashviz: hashtag embedding, projection and neighbor search"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "normalize a tweet corpus into a token file");
  ingest_cmd->add_option("--input", ingest.input, "newline-delimited JSON tweets (optionally gzip)")
      ->required();
  ingest_cmd->add_option("--output", ingest.output, "token file to write")->required();
  ingest_cmd->add_option("--manifest", ingest.manifest, "pipeline manifest JSON to update");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "train skip-gram subword embeddings");
  train_cmd->add_option("--tokens", train.tokens, "token file from ingest")->required();
  train_cmd->add_option("--model-out", train.model_out, "model file to write")->required();
  train_cmd->add_option("--dim", train.train.dim, "embedding dimension")->capture_default_str();
  train_cmd->add_option("--window", train.train.window, "max context radius")->capture_default_str();
  train_cmd->add_option("--epochs", train.train.epochs)->capture_default_str();
  train_cmd->add_option("--lr", train.train.lr0, "initial learning rate")->capture_default_str();
  train_cmd->add_option("--neg", train.train.neg, "negatives per positive")->capture_default_str();
  train_cmd->add_option("--seed", train.train.seed)->capture_default_str();
  train_cmd->add_option("--workers", train.train.workers)->capture_default_str();
  train_cmd->add_option("--subsample", train.train.subsample_t, "subsampling threshold t")
      ->capture_default_str();
  train_cmd->add_option("--min-count", train.min_count)->capture_default_str();
  train_cmd->add_option("--minn", train.subword.minn, "min subword length")->capture_default_str();
  train_cmd->add_option("--maxn", train.subword.maxn, "max subword length")->capture_default_str();
  train_cmd->add_option("--bucket", train.subword.bucket, "subword hash buckets")
      ->capture_default_str();
  train_cmd->add_option("--max-mem-mb", train.max_mem_mb, "refuse larger models")
      ->capture_default_str();
  train_cmd->add_option("--manifest", train.manifest, "pipeline manifest JSON to update");

  ProjectArgs project;
  auto* project_cmd = app.add_subcommand("project", "t-SNE projection of all hashtags to 2D");
  project_cmd->add_option("--model", project.model, "model file from train")->required();
  project_cmd->add_option("--atlas-out", project.atlas_out, "atlas TSV to write")->required();
  project_cmd->add_option("--perplexity", project.tsne.perplexity)->capture_default_str();
  project_cmd->add_option("--iters", project.tsne.iters)->capture_default_str();
  project_cmd->add_option("--exaggeration", project.tsne.exaggeration)->capture_default_str();
  project_cmd->add_option("--exaggeration-iters", project.tsne.exaggeration_iters)
      ->capture_default_str();
  project_cmd->add_option("--eta", project.tsne.eta, "learning rate")->capture_default_str();
  project_cmd->add_option("--pca-dim", project.tsne.pca_dim)->capture_default_str();
  project_cmd->add_option("--seed", project.tsne.seed)->capture_default_str();
  project_cmd->add_option("--manifest", project.manifest, "pipeline manifest JSON to update");

  ServeArgs serve;
  std::string serve_atlas;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP neighbor service over an atlas");
  serve_cmd->add_option("--atlas", serve_atlas, "atlas TSV")->required()->envname("HASHVIZ_ATLAS");
  serve_cmd->add_option("--port", serve.service.port, "0 picks a free port")
      ->capture_default_str()
      ->envname("HASHVIZ_PORT");
  serve_cmd->add_option("--host", serve.service.host)->capture_default_str();
  serve_cmd->add_option("--default-k", serve.service.default_k)->capture_default_str();
  serve_cmd->add_option("--max-k", serve.service.max_k)->capture_default_str();
  serve_cmd->add_option("--threads", serve.service.threads, "request worker threads")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  serve_cmd->add_option("--assets", serve.assets, "serve UI files from this directory");

  QueryArgs query;
  auto* query_cmd = app.add_subcommand("query", "offline nearest-neighbor query");
  query_cmd->add_option("--atlas", query.atlas, "atlas TSV")->required();
  query_cmd->add_option("--tag", query.tag, "hashtag, with or without '#'")->required();
  query_cmd->add_option("--k", query.k)->capture_default_str()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*ingest_cmd) return run_ingest(ingest);
    if (*train_cmd) return run_train(train);
    if (*project_cmd) return run_project(project);
    if (*serve_cmd) {
      serve.service.atlas_path = serve_atlas;
      return run_serve(serve);
    }
    if (*query_cmd) return run_query(query);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
