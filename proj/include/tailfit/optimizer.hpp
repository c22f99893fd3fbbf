#pragma once

// Layer-width optimization against per-layer latency profiles.
//
// Every move is a jump to a neighbouring tail-free candidate width: down to
// the closest candidate below the current width (drops the last, partially
// filled wave) or up to the closest candidate above (fills the tail of the
// current wave). Latency gain LG and parameter gain PG of a move are
//
//   LG = L[r_old] - L[r_new]          (seconds, positive when faster)
//   PG = (r_new - r_old) * unit       (negative when scaling down)
//
// where unit is 1 (WidthDelta) or the weights per filter (ParamCount).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tailfit/gpu_model.hpp"
#include "tailfit/profile.hpp"

namespace tailfit {

enum class GainMetric { WidthDelta, ParamCount };

struct ModelLayer {
  LayerSpec spec;  // spec.filters is the declared maximum width
  Width width = 1;

  friend bool operator==(const ModelLayer&, const ModelLayer&) = default;
};

struct ModelConfig {
  std::string name;
  std::vector<ModelLayer> layers;
};

/// Throws Error(Spec) unless every layer is valid and 1 <= width <= filters.
void validate(const ModelConfig& model);

double latency_gain(const ProfileTable& table, Width r_old, Width r_new);
double parameter_gain(const LayerSpec& layer, Width r_old, Width r_new, GainMetric metric);

/// Largest candidate strictly below r_old.
std::optional<Width> scale_down(const CandidateSet& candidates, Width r_old);
/// Smallest candidate strictly above r_old.
std::optional<Width> scale_up(const CandidateSet& candidates, Width r_old);

enum class PlanAction { Down, Up, Keep };
enum class PlanMode { Latency, Accuracy, Oracle };

struct PlanLayer {
  std::string layer_id;
  Width r_old = 0;
  Width r_new = 0;
  double lg = 0.0;
  double pg = 0.0;
  double pg_unit = 1.0;  // PG per filter under the plan's metric
  PlanAction action = PlanAction::Keep;

  friend bool operator==(const PlanLayer&, const PlanLayer&) = default;
};

struct OptimizationPlan {
  std::string model_name;
  PlanMode mode = PlanMode::Latency;
  GainMetric metric = GainMetric::ParamCount;
  std::vector<PlanLayer> layers;
  double total_lg = 0.0;
  double total_pg = 0.0;
  double latency_old = 0.0;
  double latency_new = 0.0;
  std::optional<double> tau_final;  // absent in accuracy mode
  double delta_target = 1.0;
  int tau_doublings = 0;
  bool feasible = false;
  std::vector<std::string> notes;
  // Steps for an external pipeline (training / accuracy evaluation).
  std::vector<std::string> next_steps;

  std::vector<Width> new_widths() const;

  friend bool operator==(const OptimizationPlan&, const OptimizationPlan&) = default;
};

struct LatencyOptions {
  std::size_t m = 5;
  double tau = 0.0;
  double delta = 0.85;
  int max_retries = 8;
  GainMetric metric = GainMetric::ParamCount;
};

/// Greedy balanced scale-down / scale-up with tau doubling on a missed
/// latency target. Tables are matched to layers by layer_id.
OptimizationPlan optimize_latency(const ModelConfig& model, std::span<const ProfileTable> tables,
                                  const LatencyOptions& options);

/// Per-layer tail filling: each layer moves to the right edge of its current
/// flat latency interval, so every layer keeps its latency exactly.
OptimizationPlan optimize_accuracy(const ModelConfig& model, std::span<const ProfileTable> tables,
                                   GainMetric metric = GainMetric::ParamCount);

enum class OracleSpace {
  AllCandidates,  // each layer ranges over {r_old} and its whole candidate set
  SingleStep,     // each layer ranges over {r_old, scale_down, scale_up}
};

struct OracleOptions {
  std::size_t m = 5;
  double tau = 0.0;
  double delta = 1.0;
  GainMetric metric = GainMetric::ParamCount;
  OracleSpace space = OracleSpace::AllCandidates;
  std::uint64_t max_assignments = 1'000'000;
};

/// Exhaustive maximum of total LG subject to |total PG| < tau. Ties go to
/// the larger total PG, then to the lexicographically smallest widths.
/// The search is split across OpenMP threads.
OptimizationPlan brute_force_plan(const ModelConfig& model, std::span<const ProfileTable> tables,
                                  const OracleOptions& options);

/// Single-threaded reference for brute_force_plan.
OptimizationPlan brute_force_plan_serial(const ModelConfig& model,
                                         std::span<const ProfileTable> tables,
                                         const OracleOptions& options);

/// Table whose layer_id matches; Error(Config) when absent.
const ProfileTable& table_for(std::span<const ProfileTable> tables, const std::string& layer_id);

const char* to_string(PlanAction action);
const char* to_string(PlanMode mode);
const char* to_string(GainMetric metric);

}  // namespace tailfit
