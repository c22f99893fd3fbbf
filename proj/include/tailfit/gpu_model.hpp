#pragma once

// Analytical wave model of a convolutional layer on a GPU.
//
// A layer's output is computed by one thread per spatial output cell (per
// sample). Threads are grouped into blocks, blocks are dealt to streaming
// multiprocessors (SMs) in waves, and every wave costs one full processing
// cycle no matter how many SMs it actually keeps busy:
//
//   latency = cycle_time * ceil(blocks / sm_count)
//
// which yields the piecewise-constant "latency staircase" in the filter
// count. All functions here are pure.

#include <cstdint>
#include <string>
#include <variant>

namespace tailfit {

using Width = std::int64_t;

/// One thread block per filter; the block holds every output cell of it.
struct BlockPerFilter {
  friend bool operator==(const BlockPerFilter&, const BlockPerFilter&) = default;
};

/// Blocks of a fixed thread count; the total thread pool of the layer is
/// cut into ceil(threads / threads_per_block) blocks.
struct FixedThreadsPerBlock {
  std::int64_t threads_per_block = 1024;
  friend bool operator==(const FixedThreadsPerBlock&, const FixedThreadsPerBlock&) = default;
};

using MappingPolicy = std::variant<BlockPerFilter, FixedThreadsPerBlock>;

struct GpuSpec {
  std::string name;
  std::int64_t sm_count = 1;
  double peak_flops = 1.0;  // whole-GPU FLOP/s
  double efficiency = 1.0;  // calibration scalar in (0, 1]
  MappingPolicy mapping_policy = BlockPerFilter{};
  // Fixed per-layer cost added to every prediction (kernel launch and
  // scheduling). Zero keeps the pure wave model.
  double launch_overhead_s = 0.0;

  double peak_flops_per_sm() const { return peak_flops / static_cast<double>(sm_count); }

  friend bool operator==(const GpuSpec&, const GpuSpec&) = default;
};

enum class FilterStyle { Dense, Depthwise };

struct LayerSpec {
  std::string layer_id;
  std::int64_t filters = 1;
  std::int64_t kernel_h = 1;
  std::int64_t kernel_w = 1;
  std::int64_t in_depth = 1;
  std::int64_t in_h = 1;
  std::int64_t in_w = 1;
  std::int64_t batch = 1;
  FilterStyle filter_style = FilterStyle::Dense;

  /// Same geometry with a different number of active filters.
  LayerSpec with_filters(Width width) const {
    LayerSpec copy = *this;
    copy.filters = width;
    return copy;
  }

  /// Kernel depth seen by one thread: 1 for depthwise filters.
  std::int64_t effective_depth() const {
    return filter_style == FilterStyle::Depthwise ? 1 : in_depth;
  }

  /// Weights held by one filter.
  std::int64_t params_per_filter() const { return kernel_h * kernel_w * effective_depth(); }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct ThreadMapping {
  std::int64_t threads_per_filter = 1;
  std::int64_t threads_per_block = 1;
  std::int64_t blocks = 1;
  std::int64_t waves = 1;
  double cycle_time = 0.0;  // seconds per wave
};

// Throw Error(ErrorKind::Spec) naming the offending field.
void validate(const GpuSpec& gpu);
void validate(const LayerSpec& layer);

/// ceil(numerator / denominator) for positive integers.
constexpr std::int64_t ceil_div(std::int64_t numerator, std::int64_t denominator) {
  return (numerator + denominator - 1) / denominator;
}

std::int64_t threads_per_filter(const LayerSpec& layer);
double per_thread_flops(const LayerSpec& layer);
double layer_flops(const LayerSpec& layer);

std::int64_t block_count(const LayerSpec& layer, const GpuSpec& gpu);
double per_block_cycle(const LayerSpec& layer, const GpuSpec& gpu);
ThreadMapping map_to_blocks(const LayerSpec& layer, const GpuSpec& gpu);

double predict_latency(const LayerSpec& layer, const GpuSpec& gpu);
double predict_utilization(const LayerSpec& layer, const GpuSpec& gpu);
double predict_throughput(const LayerSpec& layer, const GpuSpec& gpu);

/// All predictions for one layer in a single pass.
struct LayerPrediction {
  ThreadMapping mapping;
  double flops = 0.0;
  double latency = 0.0;
  double utilization = 0.0;
  double throughput = 0.0;
};

LayerPrediction predict(const LayerSpec& layer, const GpuSpec& gpu);

}  // namespace tailfit
