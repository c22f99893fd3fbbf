#include "tailfit/cli.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <system_error>

#include <CLI11.hpp>

#include "tailfit/catalog.hpp"
#include "tailfit/error.hpp"
#include "tailfit/json_io.hpp"
#include "tailfit/optimizer.hpp"
#include "tailfit/profile.hpp"
#include "tailfit/profile_csv.hpp"
#include "tailfit/verify.hpp"

namespace tailfit::cli {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "failed writing '" + path.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::Io, "cannot move output into '" + path.string() + "'");
  }
}

namespace {

struct Percent {
  bool is_percent = false;
  double value = 0.0;
};

Percent parse_bound(const std::string& text, const std::string& whole) {
  Percent out;
  std::string body = text;
  if (!body.empty() && body.back() == '%') {
    out.is_percent = true;
    body.pop_back();
  }
  std::size_t used = 0;
  try {
    out.value = std::stod(body, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (body.empty() || used != body.size() || !std::isfinite(out.value)) {
    throw Error(ErrorKind::Spec, "width range '" + whole + "' has a bad bound '" + text + "'");
  }
  if (!out.is_percent && out.value != std::floor(out.value)) {
    throw Error(ErrorKind::Spec, "width range '" + whole + "' needs integer filter counts");
  }
  return out;
}

}  // namespace

std::vector<Width> parse_width_range(const std::string& text, Width filters) {
  std::vector<std::string> parts;
  std::stringstream stream(text);
  std::string part;
  while (std::getline(stream, part, ':')) parts.push_back(part);
  if (parts.empty() || parts.size() > 3) {
    throw Error(ErrorKind::Spec, "width range '" + text + "' must be first:last[:step]");
  }
  const Percent first = parse_bound(parts[0], text);
  const Percent last = parts.size() > 1 ? parse_bound(parts[1], text) : first;
  const Percent step = parts.size() > 2 ? parse_bound(parts[2], text)
                                        : Percent{first.is_percent, first.is_percent ? 10.0 : 1.0};
  if (first.is_percent != last.is_percent || first.is_percent != step.is_percent) {
    throw Error(ErrorKind::Spec, "width range '" + text + "' mixes percent and absolute bounds");
  }
  if (step.value <= 0.0) throw Error(ErrorKind::Spec, "width range '" + text + "' needs step > 0");
  if (first.value > last.value) {
    throw Error(ErrorKind::Spec, "width range '" + text + "' has start > end");
  }

  std::vector<Width> widths;
  if (!first.is_percent) {
    if (first.value < 1) throw Error(ErrorKind::Spec, "width range '" + text + "' starts below 1");
    return width_range(static_cast<Width>(first.value), static_cast<Width>(last.value),
                       static_cast<Width>(step.value));
  }
  const auto count = static_cast<std::int64_t>(std::floor((last.value - first.value) / step.value + 1e-9));
  for (std::int64_t k = 0; k <= count; ++k) {
    const double pct = first.value + static_cast<double>(k) * step.value;
    const Width w = std::max<Width>(1, std::llround(static_cast<double>(filters) * pct / 100.0));
    if (widths.empty() || w > widths.back()) widths.push_back(w);
  }
  return widths;
}

namespace {

struct Manifest {
  std::string command;
  std::vector<std::string> inputs;
  std::map<std::string, std::string> parameters;
  std::vector<std::string> outputs;
  std::vector<std::string> notes;

  std::string render() const {
    Json j;
    j["command"] = command;
    j["tool_version"] = kToolVersion;
    j["input_paths"] = inputs;
    Json params = Json::object();
    for (const auto& [key, value] : parameters) params[key] = value;
    j["parameter_echo"] = params;
    j["output_paths"] = outputs;
    j["notes"] = notes;
    return dump(j);
  }
};

void emit(const fs::path& out_path, const std::string& content, Manifest manifest) {
  write_file_atomic(out_path, content);
  const fs::path manifest_path = fs::path(out_path.string() + ".manifest.json");
  manifest.outputs = {out_path.string(), manifest_path.string()};
  write_file_atomic(manifest_path, manifest.render());
}

GpuSpec resolve_gpu(const std::string& arg, const std::string& policy) {
  GpuSpec gpu;
  if (fs::exists(arg)) {
    gpu = gpu_from_json(read_json_file(arg));
  } else if (auto found = find_catalog_gpu(arg)) {
    gpu = *found;
  } else {
    throw Error(ErrorKind::Io, "cannot open gpu spec '" + arg + "' (not a file or catalog name)");
  }
  if (!policy.empty()) gpu.mapping_policy = parse_policy(policy);
  return gpu;
}

std::vector<LayerSpec> read_layers(const std::string& path) {
  const Json j = read_json_file(path);
  if (j.is_object() && !j.contains("layers")) return {layer_from_json(j)};
  const Json& list = j.is_object() ? j["layers"] : j;
  if (!list.is_array()) throw Error(ErrorKind::Spec, path + ": expected a layer object or list");
  std::vector<LayerSpec> layers;
  for (const auto& item : list) layers.push_back(layer_from_json(item));
  return layers;
}

std::string format_number(double value) { return format_double(value); }

struct CommonFlags {
  std::string gpu;
  std::string profile;
  std::string out;
  std::string policy;
  std::size_t m = 5;
  std::optional<double> tau;
  double delta = 0.85;
  std::string metric = "params";
};

GainMetric parse_metric(const std::string& text) {
  if (text == "width") return GainMetric::WidthDelta;
  if (text == "params") return GainMetric::ParamCount;
  throw Error(ErrorKind::Spec, "metric '" + text + "' must be width or params");
}

// Tables for every layer: from --profile when given, else analytical over
// 1..filters on --gpu.
std::vector<ProfileTable> resolve_tables(const CommonFlags& flags,
                                         const std::vector<LayerSpec>& layers,
                                         Manifest& manifest) {
  if (!flags.profile.empty()) {
    manifest.inputs.push_back(flags.profile);
    auto tables = load_profiles(flags.profile);
    for (const auto& table : tables) {
      if (table.utilization_estimated()) {
        manifest.notes.push_back("layer '" + table.layer_id() +
                                 "': utilization column absent, backfilled as throughput / "
                                 "peak throughput");
      }
    }
    return tables;
  }
  if (flags.gpu.empty()) throw Error(ErrorKind::Spec, "either --profile or --gpu is required");
  manifest.inputs.push_back(flags.gpu);
  const GpuSpec gpu = resolve_gpu(flags.gpu, flags.policy);
  return generate_full_profiles(layers, gpu);
}

int cmd_staircase(const CommonFlags& flags, const std::string& layer_path,
                  const std::string& range, std::ostream& out) {
  Manifest manifest;
  manifest.command = "staircase";
  manifest.inputs = {layer_path, flags.gpu};
  manifest.parameters = {{"widths", range.empty() ? "1:filters" : range},
                         {"policy", flags.policy.empty() ? "from gpu spec" : flags.policy}};

  const auto layers = read_layers(layer_path);
  const GpuSpec gpu = resolve_gpu(flags.gpu, flags.policy);

  std::ostringstream csv;
  bool first = true;
  for (const auto& layer : layers) {
    const auto widths = range.empty() ? width_range(1, layer.filters)
                                      : parse_width_range(range, layer.filters);
    std::ostringstream block;
    write_staircase_csv(block, layer, gpu, widths);
    std::string text = block.str();
    if (!first) text.erase(0, text.find('\n') + 1);  // one header per file
    csv << text;
    first = false;
  }
  emit(flags.out, csv.str(), manifest);
  out << "staircase: wrote " << flags.out << "\n";
  return kSuccess;
}

int cmd_candidates(const CommonFlags& flags, const std::string& model_path, std::ostream& out) {
  Manifest manifest;
  manifest.command = "candidates";
  manifest.parameters = {{"m", std::to_string(flags.m)}};

  std::vector<LayerSpec> layers;
  if (!model_path.empty()) {
    manifest.inputs.push_back(model_path);
    layers = read_layers(model_path);
  } else if (flags.profile.empty()) {
    throw Error(ErrorKind::Spec, "candidates needs --profile, or --model with --gpu");
  }
  const auto tables = resolve_tables(flags, layers, manifest);

  std::vector<CandidateSet> sets;
  for (const auto& table : tables) sets.push_back(identify_candidates(table, flags.m));
  emit(flags.out, dump(to_json(sets)), manifest);
  out << "candidates: wrote " << flags.out << "\n";
  return kSuccess;
}

int cmd_optimize(const CommonFlags& flags, const std::string& model_path, const std::string& mode,
                 int max_retries, std::ostream& out) {
  Manifest manifest;
  manifest.command = "optimize";
  manifest.inputs = {model_path};
  manifest.parameters = {{"mode", mode},
                         {"m", std::to_string(flags.m)},
                         {"metric", flags.metric}};

  const ModelConfig model = model_from_json(read_json_file(model_path), fs::path(model_path).stem().string());
  std::vector<LayerSpec> layers;
  for (const auto& layer : model.layers) layers.push_back(layer.spec);
  const GainMetric metric = parse_metric(flags.metric);
  const auto tables = resolve_tables(flags, layers, manifest);

  OptimizationPlan plan;
  if (mode == "latency") {
    if (!flags.tau) throw Error(ErrorKind::Spec, "latency mode requires --tau");
    LatencyOptions options;
    options.m = flags.m;
    options.tau = *flags.tau;
    options.delta = flags.delta;
    options.max_retries = max_retries;
    options.metric = metric;
    manifest.parameters["tau"] = format_number(*flags.tau);
    manifest.parameters["delta"] = format_number(flags.delta);
    manifest.parameters["max_retries"] = std::to_string(max_retries);
    plan = optimize_latency(model, tables, options);
  } else if (mode == "accuracy") {
    plan = optimize_accuracy(model, tables, metric);
  } else {
    throw Error(ErrorKind::Spec, "mode '" + mode + "' must be latency or accuracy");
  }
  manifest.notes.insert(manifest.notes.end(), plan.notes.begin(), plan.notes.end());
  emit(flags.out, dump(to_json(plan)), manifest);

  out << "optimize: " << (plan.feasible ? "feasible" : "infeasible") << " plan, L_new / L_old = "
      << plan.latency_new / plan.latency_old << ", total PG = " << plan.total_pg << "\n";
  for (const auto& note : plan.notes) out << "note: " << note << "\n";
  return plan.feasible ? kSuccess : kInfeasible;
}

int cmd_verify(const CommonFlags& flags, const std::string& plan_path,
               std::optional<double> delta, std::ostream& out) {
  Manifest manifest;
  manifest.command = "verify";
  manifest.inputs = {plan_path, flags.profile};
  if (delta) manifest.parameters["delta"] = format_number(*delta);

  const OptimizationPlan plan = plan_from_json(read_json_file(plan_path));
  const auto tables = load_profiles(flags.profile);
  const VerifyReport report = verify_plan(plan, tables, delta);
  const std::string text = report.to_text();
  out << text;
  if (!flags.out.empty()) emit(flags.out, text, manifest);
  return report.all_passed() ? kSuccess : kInfeasible;
}

int exit_code_for(ErrorKind kind) { return kind == ErrorKind::Io ? kIoError : kInputError; }

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"GPU tail-effect staircase modeling and layer-width optimization", "tailfit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  CommonFlags flags;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--gpu", flags.gpu, "GPU spec JSON file or catalog name");
    sub->add_option("--policy", flags.policy, "block-per-filter | fixed:<threads>");
  };

  std::string layer_path;
  std::string range;
  auto* staircase = app.add_subcommand("staircase", "Sweep a layer's width through the wave model");
  add_common(staircase);
  staircase->add_option("--layer", layer_path, "Layer (or model) JSON file")->required();
  staircase->add_option("--widths", range, "first:last[:step], counts or percents");
  staircase->add_option("--out", flags.out, "Output CSV")->required();
  staircase->get_option("--gpu")->required();

  std::string model_path;
  auto* candidates = app.add_subcommand("candidates", "Extract tail-free candidate widths");
  add_common(candidates);
  candidates->add_option("--profile", flags.profile, "Profile CSV");
  candidates->add_option("--model", model_path, "Model JSON (analytical profiles with --gpu)");
  candidates->add_option("--m", flags.m, "Candidates per layer")->check(CLI::PositiveNumber);
  candidates->add_option("--out", flags.out, "Output JSON")->required();

  std::string mode = "latency";
  int max_retries = 8;
  double tau_value = 0.0;
  auto* optimize = app.add_subcommand("optimize", "Optimize per-layer widths");
  add_common(optimize);
  optimize->add_option("--model", model_path, "Model JSON")->required();
  optimize->add_option("--profile", flags.profile, "Profile CSV (instead of --gpu)");
  optimize->add_option("--mode", mode, "latency | accuracy");
  optimize->add_option("--m", flags.m, "Candidates per layer")->check(CLI::PositiveNumber);
  auto* tau_opt = optimize->add_option("--tau", tau_value, "Parameter-gain tolerance");
  optimize->add_option("--delta", flags.delta, "Target L_new / L_old");
  optimize->add_option("--metric", flags.metric, "width | params");
  optimize->add_option("--max-retries", max_retries, "tau doublings before giving up");
  optimize->add_option("--out", flags.out, "Output plan JSON")->required();

  std::string plan_path;
  double verify_delta = 0.0;
  auto* verify = app.add_subcommand("verify", "Check a plan's claims against a profile");
  verify->add_option("--plan", plan_path, "Plan JSON")->required();
  verify->add_option("--profile", flags.profile, "Profile CSV")->required();
  auto* delta_opt = verify->add_option("--delta", verify_delta, "Latency target (default: plan's)");
  verify->add_option("--out", flags.out, "Also write the report here");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kInputError;
  }

  try {
    if (*tau_opt) flags.tau = tau_value;
    if (*staircase) return cmd_staircase(flags, layer_path, range, out);
    if (*candidates) return cmd_candidates(flags, model_path, out);
    if (*optimize) return cmd_optimize(flags, model_path, mode, max_retries, out);
    if (*verify) {
      return cmd_verify(flags, plan_path,
                        *delta_opt ? std::optional<double>(verify_delta) : std::nullopt, out);
    }
  } catch (const Error& e) {
    err << "tailfit: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "tailfit: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}

}  // namespace tailfit::cli
