#include "tailfit/json_io.hpp"

#include <fstream>
#include <sstream>

#include "tailfit/error.hpp"

namespace tailfit {

namespace {

[[noreturn]] void bad_field(const std::string& where, const std::string& field,
                            const std::string& what) {
  throw Error(ErrorKind::Spec, where + " field '" + field + "' " + what);
}

const Json& field(const Json& j, const std::string& name, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorKind::Spec, where + " must be a JSON object");
  const auto it = j.find(name);
  if (it == j.end()) bad_field(where, name, "is missing");
  return *it;
}

std::int64_t get_int(const Json& j, const std::string& name, const std::string& where) {
  const Json& v = field(j, name, where);
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == static_cast<double>(static_cast<std::int64_t>(d))) return static_cast<std::int64_t>(d);
  }
  bad_field(where, name, "must be an integer");
}

std::int64_t get_int_or(const Json& j, const std::string& name, const std::string& where,
                        std::int64_t fallback) {
  return j.contains(name) ? get_int(j, name, where) : fallback;
}

double get_number(const Json& j, const std::string& name, const std::string& where) {
  const Json& v = field(j, name, where);
  if (!v.is_number()) bad_field(where, name, "must be a number");
  return v.get<double>();
}

double get_number_or(const Json& j, const std::string& name, const std::string& where,
                     double fallback) {
  return j.contains(name) ? get_number(j, name, where) : fallback;
}

std::string get_string(const Json& j, const std::string& name, const std::string& where) {
  const Json& v = field(j, name, where);
  if (!v.is_string()) bad_field(where, name, "must be a string");
  return v.get<std::string>();
}

}  // namespace

Json parse_json(const std::string& text, const std::string& source_name) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Parse, source_name + ": " + e.what());
  }
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_json(text.str(), path.string());
}

MappingPolicy parse_policy(const std::string& text) {
  if (text == "block-per-filter") return BlockPerFilter{};
  const std::string prefix = "fixed:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string digits = text.substr(prefix.size());
    std::size_t used = 0;
    long long threads = 0;
    try {
      threads = std::stoll(digits, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == digits.size() && !digits.empty() && threads >= 1) {
      return FixedThreadsPerBlock{threads};
    }
  }
  throw Error(ErrorKind::Spec, "policy '" + text + "' must be block-per-filter or fixed:<threads>");
}

GpuSpec gpu_from_json(const Json& j) {
  const std::string where = "gpu";
  GpuSpec gpu;
  gpu.name = get_string(j, "name", where);
  gpu.sm_count = get_int(j, "sm_count", where);
  gpu.peak_flops = get_number(j, "peak_flops", where);
  gpu.efficiency = get_number_or(j, "efficiency", where, 1.0);
  gpu.launch_overhead_s = get_number_or(j, "launch_overhead_s", where, 0.0);
  if (j.contains("mapping_policy")) {
    const Json& policy = j["mapping_policy"];
    const std::string pwhere = "gpu.mapping_policy";
    const std::string kind = get_string(policy, "kind", pwhere);
    if (kind == "block_per_filter") {
      gpu.mapping_policy = BlockPerFilter{};
    } else if (kind == "fixed_threads_per_block") {
      gpu.mapping_policy = FixedThreadsPerBlock{get_int(policy, "threads_per_block", pwhere)};
    } else {
      bad_field(pwhere, "kind", "must be block_per_filter or fixed_threads_per_block");
    }
  }
  validate(gpu);
  return gpu;
}

Json to_json(const GpuSpec& gpu) {
  Json policy;
  if (const auto* fixed = std::get_if<FixedThreadsPerBlock>(&gpu.mapping_policy)) {
    policy["kind"] = "fixed_threads_per_block";
    policy["threads_per_block"] = fixed->threads_per_block;
  } else {
    policy["kind"] = "block_per_filter";
  }
  Json j;
  j["name"] = gpu.name;
  j["sm_count"] = gpu.sm_count;
  j["peak_flops"] = gpu.peak_flops;
  j["efficiency"] = gpu.efficiency;
  j["mapping_policy"] = policy;
  j["launch_overhead_s"] = gpu.launch_overhead_s;
  return j;
}

LayerSpec layer_from_json(const Json& j) {
  LayerSpec layer;
  layer.layer_id = get_string(j, "layer_id", "layer");
  const std::string where = "layer '" + layer.layer_id + "'";
  layer.filters = get_int(j, "filters", where);
  layer.kernel_h = get_int(j, "kernel_h", where);
  layer.kernel_w = get_int(j, "kernel_w", where);
  layer.in_depth = get_int(j, "in_depth", where);
  layer.in_h = get_int(j, "in_h", where);
  layer.in_w = get_int(j, "in_w", where);
  layer.batch = get_int_or(j, "batch", where, 1);
  if (j.contains("filter_style")) {
    const std::string style = get_string(j, "filter_style", where);
    if (style == "dense") {
      layer.filter_style = FilterStyle::Dense;
    } else if (style == "depthwise") {
      layer.filter_style = FilterStyle::Depthwise;
    } else {
      bad_field(where, "filter_style", "must be dense or depthwise");
    }
  }
  validate(layer);
  return layer;
}

Json to_json(const LayerSpec& layer) {
  Json j;
  j["layer_id"] = layer.layer_id;
  j["filters"] = layer.filters;
  j["kernel_h"] = layer.kernel_h;
  j["kernel_w"] = layer.kernel_w;
  j["in_depth"] = layer.in_depth;
  j["in_h"] = layer.in_h;
  j["in_w"] = layer.in_w;
  j["batch"] = layer.batch;
  j["filter_style"] = layer.filter_style == FilterStyle::Depthwise ? "depthwise" : "dense";
  return j;
}

ModelConfig model_from_json(const Json& j, const std::string& default_name) {
  ModelConfig model;
  model.name = default_name;
  const Json* layers = &j;
  if (j.is_object()) {
    if (j.contains("name")) model.name = get_string(j, "name", "model");
    layers = &field(j, "layers", "model");
  }
  if (!layers->is_array()) throw Error(ErrorKind::Spec, "model field 'layers' must be an array");
  for (const auto& item : *layers) {
    ModelLayer layer;
    layer.spec = layer_from_json(item);
    layer.width = get_int(item, "width", "layer '" + layer.spec.layer_id + "'");
    model.layers.push_back(std::move(layer));
  }
  validate(model);
  return model;
}

Json to_json(const ModelConfig& model) {
  Json layers = Json::array();
  for (const auto& layer : model.layers) {
    Json item = to_json(layer.spec);
    item["width"] = layer.width;
    layers.push_back(std::move(item));
  }
  Json j;
  j["name"] = model.name;
  j["layers"] = std::move(layers);
  return j;
}

Json to_json(std::span<const CandidateSet> sets) {
  Json layers = Json::array();
  for (const auto& set : sets) {
    Json candidates = Json::array();
    for (std::size_t i = 0; i < set.candidates.size(); ++i) {
      candidates.push_back(Json{{"width", set.candidates[i]}, {"score", set.scores[i]}});
    }
    layers.push_back(Json{{"layer_id", set.layer_id},
                          {"m", set.m},
                          {"candidates", std::move(candidates)}});
  }
  return Json{{"layers", std::move(layers)}};
}

Json to_json(const OptimizationPlan& plan) {
  Json layers = Json::array();
  for (const auto& layer : plan.layers) {
    Json item;
    item["layer_id"] = layer.layer_id;
    item["r_old"] = layer.r_old;
    item["r_new"] = layer.r_new;
    item["lg_seconds"] = layer.lg;
    item["pg"] = layer.pg;
    item["pg_per_filter"] = layer.pg_unit;
    item["action"] = to_string(layer.action);
    layers.push_back(std::move(item));
  }
  Json j;
  j["model"] = plan.model_name;
  j["mode"] = to_string(plan.mode);
  j["metric"] = to_string(plan.metric);
  j["layers"] = std::move(layers);
  j["total_lg_seconds"] = plan.total_lg;
  j["total_pg"] = plan.total_pg;
  j["latency_old_s"] = plan.latency_old;
  j["latency_new_s"] = plan.latency_new;
  j["tau_final"] = plan.tau_final ? Json(*plan.tau_final) : Json(nullptr);
  j["tau_doublings"] = plan.tau_doublings;
  j["delta_target"] = plan.delta_target;
  j["feasible"] = plan.feasible;
  j["notes"] = plan.notes;
  j["next_steps"] = plan.next_steps;
  return j;
}

OptimizationPlan plan_from_json(const Json& j) {
  const std::string where = "plan";
  OptimizationPlan plan;
  plan.model_name = j.contains("model") ? get_string(j, "model", where) : "";
  const std::string mode = get_string(j, "mode", where);
  if (mode == "latency") {
    plan.mode = PlanMode::Latency;
  } else if (mode == "accuracy") {
    plan.mode = PlanMode::Accuracy;
  } else if (mode == "oracle") {
    plan.mode = PlanMode::Oracle;
  } else {
    bad_field(where, "mode", "must be latency, accuracy or oracle");
  }
  const std::string metric = get_string(j, "metric", where);
  if (metric == "width") {
    plan.metric = GainMetric::WidthDelta;
  } else if (metric == "params") {
    plan.metric = GainMetric::ParamCount;
  } else {
    bad_field(where, "metric", "must be width or params");
  }
  const Json& layers = field(j, "layers", where);
  if (!layers.is_array()) bad_field(where, "layers", "must be an array");
  for (const auto& item : layers) {
    PlanLayer layer;
    layer.layer_id = get_string(item, "layer_id", "plan layer");
    const std::string lwhere = "plan layer '" + layer.layer_id + "'";
    layer.r_old = get_int(item, "r_old", lwhere);
    layer.r_new = get_int(item, "r_new", lwhere);
    layer.lg = get_number(item, "lg_seconds", lwhere);
    layer.pg = get_number(item, "pg", lwhere);
    layer.pg_unit = get_number(item, "pg_per_filter", lwhere);
    const std::string action = get_string(item, "action", lwhere);
    layer.action = action == "down" ? PlanAction::Down
                   : action == "up" ? PlanAction::Up
                                    : PlanAction::Keep;
    plan.layers.push_back(std::move(layer));
  }
  plan.total_lg = get_number(j, "total_lg_seconds", where);
  plan.total_pg = get_number(j, "total_pg", where);
  plan.latency_old = get_number(j, "latency_old_s", where);
  plan.latency_new = get_number(j, "latency_new_s", where);
  if (j.contains("tau_final") && !j["tau_final"].is_null()) {
    plan.tau_final = get_number(j, "tau_final", where);
  }
  plan.tau_doublings = static_cast<int>(get_int_or(j, "tau_doublings", where, 0));
  plan.delta_target = get_number(j, "delta_target", where);
  const Json& feasible = field(j, "feasible", where);
  if (!feasible.is_boolean()) bad_field(where, "feasible", "must be a boolean");
  plan.feasible = feasible.get<bool>();
  if (j.contains("notes")) plan.notes = j["notes"].get<std::vector<std::string>>();
  if (j.contains("next_steps")) plan.next_steps = j["next_steps"].get<std::vector<std::string>>();
  return plan;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace tailfit
