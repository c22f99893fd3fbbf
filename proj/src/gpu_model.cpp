#include "tailfit/gpu_model.hpp"

#include <cmath>
#include <string>

#include "tailfit/error.hpp"

namespace tailfit {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::Spec, what);
}

}  // namespace

void validate(const GpuSpec& gpu) {
  require(gpu.sm_count >= 1, "gpu field 'sm_count' must be >= 1");
  require(std::isfinite(gpu.peak_flops) && gpu.peak_flops > 0.0,
          "gpu field 'peak_flops' must be > 0");
  require(std::isfinite(gpu.efficiency) && gpu.efficiency > 0.0 && gpu.efficiency <= 1.0,
          "gpu field 'efficiency' must lie in (0, 1]");
  require(std::isfinite(gpu.launch_overhead_s) && gpu.launch_overhead_s >= 0.0,
          "gpu field 'launch_overhead_s' must be >= 0");
  if (const auto* fixed = std::get_if<FixedThreadsPerBlock>(&gpu.mapping_policy)) {
    require(fixed->threads_per_block >= 1,
            "gpu field 'mapping_policy.threads_per_block' must be >= 1");
  }
}

void validate(const LayerSpec& layer) {
  const std::string prefix = "layer '" + layer.layer_id + "' field '";
  require(layer.filters >= 1, prefix + "filters' must be >= 1");
  require(layer.kernel_h >= 1, prefix + "kernel_h' must be >= 1");
  require(layer.kernel_w >= 1, prefix + "kernel_w' must be >= 1");
  require(layer.in_depth >= 1, prefix + "in_depth' must be >= 1");
  require(layer.in_h >= 1, prefix + "in_h' must be >= 1");
  require(layer.in_w >= 1, prefix + "in_w' must be >= 1");
  require(layer.batch >= 1, prefix + "batch' must be >= 1");
}

std::int64_t threads_per_filter(const LayerSpec& layer) {
  // Batch folds into the per-filter thread pool, so it lengthens the cycle
  // rather than adding blocks.
  return layer.in_h * layer.in_w * layer.batch;
}

double per_thread_flops(const LayerSpec& layer) {
  return 2.0 * static_cast<double>(layer.kernel_h * layer.kernel_w * layer.effective_depth());
}

double layer_flops(const LayerSpec& layer) {
  return static_cast<double>(threads_per_filter(layer)) * static_cast<double>(layer.filters) *
         per_thread_flops(layer);
}

namespace {

std::int64_t threads_per_block_for(const LayerSpec& layer, const GpuSpec& gpu) {
  if (const auto* fixed = std::get_if<FixedThreadsPerBlock>(&gpu.mapping_policy)) {
    return fixed->threads_per_block;
  }
  return threads_per_filter(layer);
}

}  // namespace

std::int64_t block_count(const LayerSpec& layer, const GpuSpec& gpu) {
  if (const auto* fixed = std::get_if<FixedThreadsPerBlock>(&gpu.mapping_policy)) {
    return ceil_div(threads_per_filter(layer) * layer.filters, fixed->threads_per_block);
  }
  return layer.filters;
}

double per_block_cycle(const LayerSpec& layer, const GpuSpec& gpu) {
  const double block_flops =
      static_cast<double>(threads_per_block_for(layer, gpu)) * per_thread_flops(layer);
  return block_flops / (gpu.peak_flops_per_sm() * gpu.efficiency);
}

ThreadMapping map_to_blocks(const LayerSpec& layer, const GpuSpec& gpu) {
  ThreadMapping mapping;
  mapping.threads_per_filter = threads_per_filter(layer);
  mapping.threads_per_block = threads_per_block_for(layer, gpu);
  mapping.blocks = block_count(layer, gpu);
  mapping.waves = ceil_div(mapping.blocks, gpu.sm_count);
  mapping.cycle_time = per_block_cycle(layer, gpu);
  return mapping;
}

namespace {

double latency_of(const ThreadMapping& mapping, const GpuSpec& gpu) {
  return mapping.cycle_time * static_cast<double>(mapping.waves) + gpu.launch_overhead_s;
}

double utilization_of(const ThreadMapping& mapping, const GpuSpec& gpu) {
  return static_cast<double>(mapping.blocks) /
         static_cast<double>(mapping.waves * gpu.sm_count);
}

}  // namespace

double predict_latency(const LayerSpec& layer, const GpuSpec& gpu) {
  return latency_of(map_to_blocks(layer, gpu), gpu);
}

double predict_utilization(const LayerSpec& layer, const GpuSpec& gpu) {
  return utilization_of(map_to_blocks(layer, gpu), gpu);
}

double predict_throughput(const LayerSpec& layer, const GpuSpec& gpu) {
  return layer_flops(layer) / predict_latency(layer, gpu);
}

LayerPrediction predict(const LayerSpec& layer, const GpuSpec& gpu) {
  LayerPrediction out;
  out.mapping = map_to_blocks(layer, gpu);
  out.flops = layer_flops(layer);
  out.latency = latency_of(out.mapping, gpu);
  out.utilization = utilization_of(out.mapping, gpu);
  out.throughput = out.flops / out.latency;
  return out;
}

}  // namespace tailfit
