#include "tailfit/catalog.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <string>

namespace tailfit {

namespace {

const std::array<GpuSpec, 3> kCatalog = {{
    {"titan-v", 80, 14.9e12, 1.0, BlockPerFilter{}, 0.0},
    {"p6000", 30, 12.0e12, 1.0, BlockPerFilter{}, 0.0},
    {"jetson-nano", 1, 0.24e12, 1.0, BlockPerFilter{}, 0.0},
}};

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::span<const GpuSpec> gpu_catalog() { return kCatalog; }

std::optional<GpuSpec> find_catalog_gpu(std::string_view key) {
  const std::string wanted = lower(key);
  for (const auto& gpu : kCatalog) {
    if (gpu.name == wanted) return gpu;
  }
  return std::nullopt;
}

}  // namespace tailfit
