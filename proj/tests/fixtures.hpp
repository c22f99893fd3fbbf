#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tailfit/catalog.hpp"
#include "tailfit/gpu_model.hpp"
#include "tailfit/optimizer.hpp"
#include "tailfit/profile.hpp"

namespace tailfit::testing {

/// 1x1x1 filter on a 1x1 input: one thread doing 2 FLOPs per filter.
inline LayerSpec unit_layer(const std::string& id, std::int64_t filters) {
  return LayerSpec{id, filters, 1, 1, 1, 1, 1, 1, FilterStyle::Dense};
}

/// Peak of 2 FLOP/s per SM, so a unit_layer block takes exactly 1 s.
inline GpuSpec unit_cycle_gpu(std::int64_t sms) {
  return GpuSpec{"unit", sms, 2.0 * static_cast<double>(sms), 1.0, BlockPerFilter{}, 0.0};
}

inline GpuSpec titan_v() { return *find_catalog_gpu("titan-v"); }

/// VGG16 on 32x32 inputs, batch 128, with pruned widths: conv3/conv4 sit a
/// few filters past a wave boundary (tail), conv5..conv13 sit just short of
/// one (nearly full last wave).
inline ModelConfig vgg16_cifar_pruned() {
  struct Row {
    const char* id;
    std::int64_t hw, depth, filters, width;
  };
  const std::array<Row, 13> rows{{
      {"conv1", 32, 3, 64, 64},     {"conv2", 32, 64, 64, 64},     {"conv3", 16, 64, 128, 90},
      {"conv4", 16, 128, 128, 90},  {"conv5", 8, 128, 256, 78},    {"conv6", 8, 256, 256, 78},
      {"conv7", 8, 256, 256, 158},  {"conv8", 4, 256, 512, 158},   {"conv9", 4, 512, 512, 158},
      {"conv10", 4, 512, 512, 158}, {"conv11", 2, 512, 512, 158},  {"conv12", 2, 512, 512, 158},
      {"conv13", 2, 512, 512, 158},
  }};
  ModelConfig model;
  model.name = "vgg16-cifar-pruned";
  for (const auto& r : rows) {
    model.layers.push_back(
        {LayerSpec{r.id, r.filters, 3, 3, r.depth, r.hw, r.hw, 128, FilterStyle::Dense}, r.width});
  }
  return model;
}

inline std::vector<LayerSpec> specs_of(const ModelConfig& model) {
  std::vector<LayerSpec> out;
  for (const auto& layer : model.layers) out.push_back(layer.spec);
  return out;
}

/// Measured-looking sweep with five steps of 100 filters: utilization and
/// throughput dip at each step's left edge and recover toward its right
/// edge, with a little deterministic jitter. Widths 20..520 step 20.
inline ProfileTable five_step_table() {
  std::vector<ProfileRow> rows;
  for (Width w = 20; w <= 520; w += 20) {
    const auto waves = static_cast<double>((w + 99) / 100);
    const double jitter = 1.0 + 0.002 * std::sin(static_cast<double>(w));
    ProfileRow row;
    row.width = w;
    row.latency = 1.0e-3 * waves * jitter;
    row.flops = 2.0e7 * static_cast<double>(w);
    row.throughput = row.flops / row.latency;
    const double occupancy = static_cast<double>(w) / (waves * 100.0);
    row.utilization = std::min(1.0, 0.2 + 0.73 * occupancy + 0.001 * std::cos(static_cast<double>(w)));
    rows.push_back(row);
  }
  return ProfileTable("steps", std::move(rows), ProfileSource::Empirical);
}

struct Instance {
  ModelConfig model;
  GpuSpec gpu;
  std::vector<ProfileTable> tables;
  double tau = 1.0;
};

/// Random analytical instance: `layers` layers with varied kernel depth and
/// filter count, widths anywhere in [1, filters], a GPU with S in [1, 96]
/// sized so each layer sees at most about `max_waves` candidate widths.
inline Instance random_instance(std::mt19937_64& rng, int layers, std::int64_t max_waves = 5) {
  auto pick = [&](std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
  };
  Instance inst;
  const std::int64_t sms = pick(1, 96);
  inst.gpu = GpuSpec{"rand", sms, 1.0e12 * static_cast<double>(sms), 1.0, BlockPerFilter{}, 0.0};
  inst.model.name = "random";
  for (int l = 0; l < layers; ++l) {
    const std::int64_t filters = pick(1, sms * max_waves);
    const std::int64_t depth = pick(1, 64);
    const std::int64_t hw = pick(1, 16);
    LayerSpec spec{"l" + std::to_string(l), filters, 3, 3, depth, hw, hw, pick(1, 4),
                   FilterStyle::Dense};
    inst.model.layers.push_back({spec, pick(1, filters)});
  }
  inst.tables = generate_full_profiles(specs_of(inst.model), inst.gpu);
  // Band from a few filters' worth of parameters up to several waves' worth.
  const double unit = static_cast<double>(inst.model.layers[0].spec.params_per_filter());
  inst.tau = unit * static_cast<double>(pick(1, 4 * sms));
  return inst;
}

}  // namespace tailfit::testing
