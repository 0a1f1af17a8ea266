#include "hashviz/knn.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace hashviz {

namespace {

double cosine_from(double uv, double norm_u, double norm_v) {
  if (norm_u == 0.0 || norm_v == 0.0) return 0.0;
  return std::clamp(uv / (norm_u * norm_v), -1.0, 1.0);
}

}  // namespace

// The AVX2 clone keeps the lane order, so results match the baseline bit for bit.
#if defined(__x86_64__) && defined(__GNUC__) && defined(__linux__)
__attribute__((target_clones("avx2", "default")))
#endif
double dot(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) throw std::invalid_argument("dot: dimension mismatch");
  double lanes[8] = {};
  const std::size_t n = u.size();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    for (std::size_t l = 0; l < 8; ++l) {
      lanes[l] += static_cast<double>(u[k + l]) * static_cast<double>(v[k + l]);
    }
  }
  for (std::size_t l = 0; k < n; ++k, ++l) {
    lanes[l] += static_cast<double>(u[k]) * static_cast<double>(v[k]);
  }
  return ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
         ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
}

double cosine(std::span<const float> u, std::span<const float> v) {
  return cosine_from(dot(u, v), std::sqrt(dot(u, u)), std::sqrt(dot(v, v)));
}

std::string normalize_query(std::string_view tag) {
  if (tag.starts_with('#')) {
    tag.remove_prefix(1);
  } else if (tag.size() >= 3 && tag[0] == '%' && tag[1] == '2' && tag[2] == '3') {
    tag.remove_prefix(3);
  }
  std::string out = "#";
  for (char c : tag) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

std::optional<NeighborResult> top_k(const HashtagAtlas& atlas, std::string_view query,
                                    std::size_t k) {
  if (k < 1) throw std::invalid_argument("top_k requires k >= 1");
  NeighborResult result;
  result.query = normalize_query(query);
  const auto self = atlas.find(result.query);
  if (!self) return std::nullopt;
  result.x = atlas.coords()(*self, 0);
  result.y = atlas.coords()(*self, 1);

  const auto q = atlas.vectors().row(*self);
  const double q_norm = atlas.norms()[*self];
  struct Scored {
    double similarity;
    std::size_t row;
  };
  // Rows are in tag order, so row index breaks ties lexicographically.
  const auto better = [](const Scored& a, const Scored& b) {
    return a.similarity != b.similarity ? a.similarity > b.similarity : a.row < b.row;
  };
  // Bounded heap of the best `take` so far; front is the worst of them.
  const std::size_t take = std::min(k, atlas.size() - 1);
  std::vector<Scored> best;
  best.reserve(take + 1);
  for (std::size_t i = 0; i < atlas.size(); ++i) {
    if (i == *self) continue;
    const Scored s{cosine_from(dot(q, atlas.vectors().row(i)), q_norm, atlas.norms()[i]), i};
    if (best.size() < take) {
      best.push_back(s);
      std::push_heap(best.begin(), best.end(), better);
    } else if (take > 0 && better(s, best.front())) {
      std::pop_heap(best.begin(), best.end(), better);
      best.back() = s;
      std::push_heap(best.begin(), best.end(), better);
    }
  }
  std::sort_heap(best.begin(), best.end(), better);

  result.neighbors.reserve(best.size());
  for (const auto& [similarity, row] : best) {
    result.neighbors.push_back({atlas.tags()[row], similarity, atlas.coords()(row, 0),
                                atlas.coords()(row, 1)});
  }
  return result;
}

}  // namespace hashviz
