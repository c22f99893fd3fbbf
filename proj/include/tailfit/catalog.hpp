#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "tailfit/gpu_model.hpp"

namespace tailfit {

/// Bundled GPUs: Titan-V (80 SMs, 14.9 TFLOP/s), Quadro P6000 (30 SMs,
/// 12.0 TFLOP/s) and Jetson Nano (one 128-core unit, 0.24 TFLOP/s).
std::span<const GpuSpec> gpu_catalog();

/// Case-insensitive lookup by catalog key ("titan-v", "p6000", "jetson-nano").
std::optional<GpuSpec> find_catalog_gpu(std::string_view key);

}  // namespace tailfit
