#pragma once

#include <span>
#include <string_view>

namespace hashviz {

struct StaticAsset {
  std::string_view path;
  std::string_view content_type;
  std::string_view content;
};

// UI files compiled into the binary from web/.
std::span<const StaticAsset> bundled_assets();

}  // namespace hashviz
