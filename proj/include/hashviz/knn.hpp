#pragma once

#include "hashviz/atlas.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hashviz {

inline constexpr std::size_t kDefaultNeighbors = 100;

// Dot product accumulated in double over eight fixed-order lanes.
double dot(std::span<const float> u, std::span<const float> v);

// u.v / (|u| |v|); 0 when either norm is 0.
double cosine(std::span<const float> u, std::span<const float> v);

struct Neighbor {
  std::string tag;
  double similarity = 0.0;
  float x = 0.0f;
  float y = 0.0f;
};

struct NeighborResult {
  std::string query;
  float x = 0.0f;
  float y = 0.0f;
  std::vector<Neighbor> neighbors;
};

// Strips one leading '#' (or literal "%23"), lowercases, re-prefixes '#'.
std::string normalize_query(std::string_view tag);

/// Exact top-k hashtags by cosine similarity, excluding the query itself.
/// Sorted by descending similarity, ties by tag. nullopt when the query is
/// not in the atlas.
std::optional<NeighborResult> top_k(const HashtagAtlas& atlas,
                                    std::string_view query,
                                    std::size_t k = kDefaultNeighbors);

}  // namespace hashviz
