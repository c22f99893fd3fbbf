#pragma once

// JSON forms of GPU specs, layer / model descriptions, candidate sets and
// optimization plans.
//
// GPU:   {"name", "sm_count", "peak_flops", "efficiency",
//         "mapping_policy": {"kind": "block_per_filter" |
//                                    "fixed_threads_per_block",
//                            "threads_per_block"},
//         "launch_overhead_s"}            (efficiency, policy, overhead optional)
// Layer: {"layer_id", "filters", "kernel_h", "kernel_w", "in_depth", "in_h",
//         "in_w", "batch", "filter_style": "dense" | "depthwise"}
// Model: [layer + {"width"}, ...]  or  {"name", "layers": [...]}

#include <filesystem>
#include <span>
#include <string>

#include <json.hpp>

#include "tailfit/gpu_model.hpp"
#include "tailfit/optimizer.hpp"
#include "tailfit/profile.hpp"

namespace tailfit {

using Json = nlohmann::ordered_json;

/// Parse JSON text; Error(Parse) on malformed input.
Json parse_json(const std::string& text, const std::string& source_name);
/// Read and parse a file; Error(Io) when unreadable.
Json read_json_file(const std::filesystem::path& path);

GpuSpec gpu_from_json(const Json& j);
Json to_json(const GpuSpec& gpu);

LayerSpec layer_from_json(const Json& j);
Json to_json(const LayerSpec& layer);

ModelConfig model_from_json(const Json& j, const std::string& default_name);
Json to_json(const ModelConfig& model);

/// "block-per-filter" or "fixed:<threads>"; Error(Spec) otherwise.
MappingPolicy parse_policy(const std::string& text);

Json to_json(std::span<const CandidateSet> sets);

Json to_json(const OptimizationPlan& plan);
OptimizationPlan plan_from_json(const Json& j);

/// Two-space indented text with a trailing newline.
std::string dump(const Json& j);

}  // namespace tailfit
