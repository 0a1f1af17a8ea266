#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hashviz/atlas.hpp"
#include "hashviz/embed.hpp"
#include "hashviz/error.hpp"
#include "hashviz/ingest.hpp"
#include "hashviz/knn.hpp"
#include "hashviz/tsne.hpp"
#include "hashviz/vocab.hpp"

namespace py = pybind11;
using namespace hashviz;

namespace {

template <typename T>
Matrix<T> to_matrix(const py::array_t<T, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
  Matrix<T> m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy_n(a.data(), m.data().size(), m.data().begin());
  return m;
}

template <typename T>
py::array_t<T> to_array(const Matrix<T>& m) {
  py::array_t<T> a({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), a.mutable_data());
  return a;
}

std::vector<float> to_vector(const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
  return {a.data(), a.data() + a.size()};
}

py::dict result_dict(const NeighborResult& r) {
  py::list neighbors;
  for (const auto& n : r.neighbors) {
    py::dict d;
    d["tag"] = n.tag;
    d["similarity"] = n.similarity;
    d["x"] = n.x;
    d["y"] = n.y;
    neighbors.append(d);
  }
  py::dict out;
  out["query"] = r.query;
  out["x"] = r.x;
  out["y"] = r.y;
  out["neighbors"] = neighbors;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "hashviz core: tweet normalization, subword embeddings, t-SNE, neighbor search";
  py::register_exception<Error>(m, "HashvizError", PyExc_RuntimeError);

  m.def("normalize", [](std::string_view text) { return normalize(text).tokens; },
        py::arg("text"));
  m.def("extract_hashtags",
        [](std::vector<std::string> tokens) { return extract_hashtags(CleanTweet{std::move(tokens)}); },
        py::arg("tokens"));
  m.def("ingest",
        [](const std::filesystem::path& input, const std::filesystem::path& output) {
          auto s = ingest_file(input, output);
          return py::make_tuple(s.kept, s.skipped);
        },
        py::arg("input"), py::arg("output"), "Returns (kept, skipped).");
  m.def("fnv1a_32", [](py::bytes b) { return fnv1a_32(std::string(b)); }, py::arg("data"));
  m.def("subword_ngrams",
        [](std::string_view token, int minn, int maxn, std::uint32_t bucket) {
          SubwordConfig cfg{minn, maxn, bucket};
          cfg.validate();
          return subword_ngrams(token, cfg);
        },
        py::arg("token"), py::arg("minn") = 3, py::arg("maxn") = 6,
        py::arg("bucket") = 2'000'000u);

  py::class_<Vocabulary>(m, "Vocabulary")
      .def("__len__", &Vocabulary::size)
      .def("find", &Vocabulary::find)
      .def("token", &Vocabulary::token)
      .def("count", &Vocabulary::count)
      .def("discard_prob", &Vocabulary::discard_prob)
      .def_property_readonly("total_tokens", &Vocabulary::total_tokens)
      .def("to_tsv", &Vocabulary::to_tsv);
  m.def("build_vocab",
        [](const std::vector<std::vector<std::string>>& corpus, std::uint64_t min_count,
           double t) {
          VocabularyBuilder builder;
          for (const auto& tokens : corpus) {
            for (const auto& tok : tokens) builder.add_token(tok);
          }
          return builder.finish(min_count, t);
        },
        py::arg("corpus"), py::arg("min_count") = kDefaultMinCount,
        py::arg("t") = kDefaultSubsampleThreshold);

  py::class_<EmbeddingModel>(m, "Model")
      .def_property_readonly("dim", [](const EmbeddingModel& mdl) { return mdl.dim; })
      .def_property_readonly(
          "vocab", [](const EmbeddingModel& mdl) -> const Vocabulary& { return mdl.vocab; },
          py::return_value_policy::reference_internal)
      .def("token_vector",
           [](const EmbeddingModel& mdl, std::string_view token) -> py::object {
             auto v = token_vector(mdl, token);
             if (!v) return py::none();
             return py::array_t<float>(static_cast<py::ssize_t>(v->size()), v->data());
           },
           py::arg("token"))
      .def("save", [](const EmbeddingModel& mdl, const std::filesystem::path& p) { save_model(mdl, p); });
  m.def("load_model", &load_model, py::arg("path"));
  m.def("train",
        [](const std::filesystem::path& tokens, int dim, int window, int epochs, double lr,
           int neg, std::uint64_t seed, int workers, std::uint64_t min_count, double t,
           int minn, int maxn, std::uint32_t bucket) {
          TrainConfig cfg;
          cfg.dim = dim;
          cfg.window = window;
          cfg.epochs = epochs;
          cfg.lr0 = lr;
          cfg.neg = neg;
          cfg.seed = seed;
          cfg.workers = workers;
          cfg.subsample_t = t;
          SubwordConfig sub{minn, maxn, bucket};
          py::gil_scoped_release release;
          auto vocab = build_vocab_from_file(tokens, min_count, t);
          auto result = train(tokens, std::move(vocab), sub, cfg);
          return std::move(result.model);
        },
        py::arg("tokens"), py::arg("dim") = 100, py::arg("window") = 5, py::arg("epochs") = 5,
        py::arg("lr") = 0.05, py::arg("neg") = 5, py::arg("seed") = 1, py::arg("workers") = 1,
        py::arg("min_count") = kDefaultMinCount, py::arg("t") = kDefaultSubsampleThreshold,
        py::arg("minn") = 3, py::arg("maxn") = 6, py::arg("bucket") = 2'000'000u);

  m.def("cosine",
        [](const py::array_t<float, py::array::c_style | py::array::forcecast>& u,
           const py::array_t<float, py::array::c_style | py::array::forcecast>& v) {
          return cosine(to_vector(u), to_vector(v));
        },
        py::arg("u"), py::arg("v"));
  m.def("normalize_query", &normalize_query, py::arg("tag"));

  m.def("pca_reduce",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x, std::size_t d) {
          return to_array(pca_reduce(to_matrix(x), d));
        },
        py::arg("x"), py::arg("d"));
  m.def("calibrate_affinities",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x, double perplexity) {
          auto a = calibrate_affinities(to_matrix(x), perplexity);
          return py::make_tuple(to_array(a.joint), a.perplexity, a.clamped);
        },
        py::arg("x"), py::arg("perplexity"), "Returns (P, perplexity_used, clamped).");
  m.def("run_tsne",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x, double perplexity,
           int iters, std::uint64_t seed, int pca_dim) {
          TsneConfig cfg;
          cfg.perplexity = perplexity;
          cfg.iters = iters;
          cfg.seed = seed;
          cfg.pca_dim = pca_dim;
          auto input = to_matrix(x);
          TsneResult r;
          {
            py::gil_scoped_release release;
            r = run_tsne(input, cfg);
          }
          return to_array(r.coords);
        },
        py::arg("x"), py::arg("perplexity") = 30.0, py::arg("iters") = 1000,
        py::arg("seed") = 1, py::arg("pca_dim") = 50);

  py::class_<HashtagAtlas>(m, "Atlas")
      .def("__len__", &HashtagAtlas::size)
      .def_property_readonly("dim", &HashtagAtlas::dim)
      .def_property_readonly("tags", &HashtagAtlas::tags)
      .def_property_readonly("coords", [](const HashtagAtlas& a) { return to_array(a.coords()); })
      .def_property_readonly("vectors", [](const HashtagAtlas& a) { return to_array(a.vectors()); })
      .def("top_k",
           [](const HashtagAtlas& a, std::string_view tag, std::size_t k) -> py::object {
             auto r = top_k(a, tag, k);
             if (!r) return py::none();
             return result_dict(*r);
           },
           py::arg("tag"), py::arg("k") = kDefaultNeighbors)
      .def("save", [](const HashtagAtlas& a, const std::filesystem::path& p) { save_atlas(a, p); });
  m.def("load_atlas", &load_atlas, py::arg("path"));
  m.def("build_atlas",
        [](const EmbeddingModel& model, double perplexity, int iters, std::uint64_t seed) {
          TsneConfig cfg;
          cfg.perplexity = perplexity;
          cfg.iters = iters;
          cfg.seed = seed;
          py::gil_scoped_release release;
          return build_atlas(model, cfg);
        },
        py::arg("model"), py::arg("perplexity") = 30.0, py::arg("iters") = 1000,
        py::arg("seed") = 1);
}
