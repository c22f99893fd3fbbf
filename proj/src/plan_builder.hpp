#pragma once

// Internal helpers shared by the greedy optimizer and the brute-force oracle.

#include <span>
#include <vector>

#include "tailfit/optimizer.hpp"

namespace tailfit::detail {

struct LayerContext {
  const ModelLayer* layer = nullptr;
  const ProfileTable* table = nullptr;
  CandidateSet candidates;  // restricted to widths <= the layer's filters
};

/// Resolve each layer's table, check it covers the current width, and
/// extract its candidates. Throws Error(Config) on gaps.
std::vector<LayerContext> prepare(const ModelConfig& model, std::span<const ProfileTable> tables,
                                  std::size_t m);

/// Fill per-layer gains, totals and latencies for a width assignment.
OptimizationPlan assemble(const ModelConfig& model, std::span<const LayerContext> contexts,
                          std::span<const Width> widths, GainMetric metric, PlanMode mode);

}  // namespace tailfit::detail
