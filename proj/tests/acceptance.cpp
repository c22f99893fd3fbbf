// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Tolerances and runtime limits are fixed here.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tailfit/cli.hpp"
#include "tailfit/gpu_model.hpp"
#include "tailfit/json_io.hpp"
#include "tailfit/optimizer.hpp"
#include "tailfit/profile.hpp"
#include "tailfit/profile_csv.hpp"

namespace {

using namespace tailfit;
namespace fs = std::filesystem;

constexpr double kPeakTolerance = 1e-12;   // relative, criterion 3
constexpr double kGainTolerance = 1e-12;   // relative slack on LG comparisons, criterion 5
constexpr double kTargetReduction = 0.15;  // criterion 6

struct Outcome {
  bool passed = true;
  std::string detail;
  std::vector<std::string> info;
};

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> body;
};

LayerSpec conv(Width filters, FilterStyle style = FilterStyle::Dense) {
  return LayerSpec{"conv", filters, 3, 3, 512, 64, 64, 1, style};
}

// 1. Titan-V sweep 1..512: seven levels, jumps at 81 + 80k, flat rows identical.
Outcome staircase_exactness() {
  const GpuSpec gpu = testing::titan_v();
  std::vector<double> latency;
  for (Width f = 1; f <= 512; ++f) latency.push_back(predict_latency(conv(f), gpu));
  std::vector<Width> jumps;
  for (const std::size_t i : testing::change_points(latency)) jumps.push_back(static_cast<Width>(i + 1));
  const std::set<double> levels(latency.begin(), latency.end());

  Outcome o;
  const std::vector<Width> expected{81, 161, 241, 321, 401, 481};
  o.passed = levels.size() == 7 && jumps == expected;
  for (std::size_t i = 1; i < latency.size(); ++i) {
    const Width f = static_cast<Width>(i + 1);
    if ((f - 1) % 80 != 0 && latency[i] != latency[i - 1]) o.passed = false;
  }
  std::ostringstream d;
  d << levels.size() << " levels, jumps at";
  for (const Width j : jumps) d << " " << j;
  o.detail = d.str();
  return o;
}

// 2. 1,000 random (B, S): ceil(B/S) against a dealing loop.
Outcome wave_oracle() {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::int64_t> sms(1, 128);
  std::uniform_int_distribution<std::int64_t> filters(1, 4096);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::int64_t s = sms(rng);
    const std::int64_t b = filters(rng);
    const GpuSpec gpu = testing::unit_cycle_gpu(s);
    if (map_to_blocks(testing::unit_layer("l", b), gpu).waves != testing::dealt_waves(b, s)) {
      ++mismatches;
    }
  }
  return {mismatches == 0, std::to_string(1000 - mismatches) + "/1000 pairs agree", {}};
}

// 3. Throughput hits peak * efficiency at multiples of S and only there.
Outcome peak_attainment() {
  Outcome o;
  double worst = 0.0;
  int strict_violations = 0;
  for (const char* key : {"jetson-nano", "p6000", "titan-v"}) {
    const GpuSpec gpu = *find_catalog_gpu(key);
    const double peak = gpu.peak_flops * gpu.efficiency;
    for (Width b = 1; b <= 6 * gpu.sm_count; ++b) {
      const double t = predict_throughput(conv(b), gpu);
      if (b % gpu.sm_count == 0) {
        worst = std::max(worst, std::abs(t - peak) / peak);
      } else if (!(t < peak)) {
        ++strict_violations;
      }
    }
  }
  o.passed = worst <= kPeakTolerance && strict_violations == 0;
  std::ostringstream d;
  d << "max relative error at multiples " << worst << ", " << strict_violations
    << " non-multiples at or above peak";
  o.detail = d.str();
  return o;
}

// 4. Candidates on analytical tables are exactly the grid widths divisible
// by S. Grids use a step dividing S and contain at least one multiple of S.
Outcome candidate_theorem() {
  std::mt19937_64 rng(4);
  auto pick = [&](std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
  };
  int failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::int64_t s = pick(1, 128);
    std::vector<std::int64_t> divisors;
    for (std::int64_t d = 1; d <= s; ++d) {
      if (s % d == 0) divisors.push_back(d);
    }
    const std::int64_t step = divisors[static_cast<std::size_t>(pick(0, static_cast<std::int64_t>(divisors.size()) - 1))];
    const std::int64_t first = step * pick(1, 3 * s / step + 1);
    const std::int64_t last = std::min<std::int64_t>(kMaxProfileWidth, first + pick(s, 6 * s));
    const auto grid = width_range(first, last, step);
    const LayerSpec layer{"l", 1, 3, 3, pick(1, 64), pick(1, 32), pick(1, 32), pick(1, 8),
                          FilterStyle::Dense};
    GpuSpec gpu = testing::unit_cycle_gpu(s);
    gpu.efficiency = 0.5 + 0.5 * std::uniform_real_distribution<double>(0, 1)(rng);
    const ProfileTable table = generate_analytical_profile(layer, gpu, grid);
    std::vector<Width> expected;
    for (const Width w : grid) {
      if (w % s == 0) expected.push_back(w);
    }
    if (identify_candidates(table, grid.size()).candidates != expected) ++failures;
  }
  return {failures == 0, std::to_string(100 - failures) + "/100 configurations exact", {}};
}

bool lg_le(double a, double b) { return a <= b + kGainTolerance * std::max(1.0, std::abs(b)); }

// 5. Greedy against exhaustive search.
Outcome greedy_vs_oracle() {
  Outcome o;
  std::mt19937_64 rng(5);
  int infeasible = 0;
  int dominated = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = testing::random_instance(rng, 4);
    LatencyOptions greedy;
    greedy.tau = inst.tau;
    greedy.delta = 1.0;
    const OptimizationPlan g = optimize_latency(inst.model, inst.tables, greedy);
    OracleOptions oracle;
    oracle.tau = inst.tau;
    const OptimizationPlan best = brute_force_plan(inst.model, inst.tables, oracle);
    if (!g.feasible || !best.feasible) ++infeasible;
    if (!lg_le(g.total_lg, best.total_lg)) ++dominated;
  }

  int single_mismatch = 0;
  int single_full_mismatch = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = testing::random_instance(rng, 1);
    LatencyOptions greedy;
    greedy.tau = inst.tau;
    greedy.delta = 1.0;
    const OptimizationPlan g = optimize_latency(inst.model, inst.tables, greedy);
    OracleOptions oracle;
    oracle.tau = inst.tau;
    oracle.space = OracleSpace::SingleStep;
    if (g.total_lg != brute_force_plan(inst.model, inst.tables, oracle).total_lg) ++single_mismatch;
    oracle.space = OracleSpace::AllCandidates;
    if (g.total_lg != brute_force_plan(inst.model, inst.tables, oracle).total_lg) {
      ++single_full_mismatch;
    }
  }

  o.passed = infeasible == 0 && dominated == 0 && single_mismatch == 0;
  std::ostringstream d;
  d << "4-layer: " << 200 - infeasible << "/200 feasible, " << 200 - dominated
    << "/200 greedy <= oracle; single-layer: " << 200 - single_mismatch
    << "/200 equal to the one-step oracle";
  o.detail = d.str();
  o.info.push_back("single-layer greedy vs all-candidate oracle: " +
                   std::to_string(200 - single_full_mismatch) +
                   "/200 equal (the oracle may drop several waves in one move)");
  return o;
}

// 6. 13-layer VGG-style fixture on Titan-V.
Outcome vgg_mechanism() {
  const ModelConfig model = testing::vgg16_cifar_pruned();
  const auto tables = generate_full_profiles(testing::specs_of(model), testing::titan_v());
  LatencyOptions opt;
  opt.tau = 6000.0;
  opt.delta = 0.85;
  const OptimizationPlan plan = optimize_latency(model, tables, opt);

  std::vector<std::size_t> downs;
  std::vector<std::size_t> ups;
  for (std::size_t i = 0; i < plan.layers.size(); ++i) {
    if (plan.layers[i].action == PlanAction::Down) downs.push_back(i);
    if (plan.layers[i].action == PlanAction::Up) ups.push_back(i);
  }
  const double reduction = 1.0 - plan.latency_new / plan.latency_old;
  const bool shape = !downs.empty() && !ups.empty() && downs.back() < ups.front() &&
                     downs.back() < 4 && ups.front() >= 4;
  Outcome o;
  o.passed = plan.feasible && shape && reduction >= kTargetReduction &&
             std::abs(plan.total_pg) < *plan.tau_final;
  std::ostringstream d;
  d << "down";
  for (const auto i : downs) d << " " << plan.layers[i].layer_id;
  d << "; up";
  for (const auto i : ups) d << " " << plan.layers[i].layer_id;
  d << "; reduction " << 100.0 * reduction << "%, |PG| " << std::abs(plan.total_pg) << " < tau "
    << *plan.tau_final << (plan.feasible ? ", feasible" : ", INFEASIBLE");
  o.detail = d.str();
  return o;
}

// 7. Accuracy mode never changes any layer's latency.
Outcome accuracy_zero_overhead() {
  std::mt19937_64 rng(7);
  int failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = testing::random_instance(rng, 1 + trial % 8);
    const OptimizationPlan plan = optimize_accuracy(inst.model, inst.tables);
    bool ok = plan.total_lg == 0.0 && plan.total_pg >= 0.0;
    for (std::size_t i = 0; i < plan.layers.size(); ++i) {
      ok = ok && inst.tables[i].latency_at(plan.layers[i].r_new) ==
                     inst.tables[i].latency_at(plan.layers[i].r_old);
    }
    if (!ok) ++failures;
  }
  return {failures == 0, std::to_string(100 - failures) + "/100 instances exact", {}};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 8. staircase CSV -> profile -> candidates matches the analytical path,
// and two runs write identical bytes.
Outcome pipeline_closure() {
  const fs::path dir = fs::temp_directory_path() / "tailfit_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string layer = std::string(TAILFIT_DATA_DIR) + "/layers/conv3x3x512.json";
  std::ostringstream sink;

  std::vector<std::string> csv;
  std::vector<std::string> json;
  bool ok = true;
  for (int run = 0; run < 2; ++run) {
    const std::string tag = std::to_string(run);
    const fs::path csv_path = dir / ("staircase" + tag + ".csv");
    const fs::path json_path = dir / ("candidates" + tag + ".json");
    ok = ok && cli::run({"tailfit", "staircase", "--layer", layer, "--gpu", "titan-v", "--out",
                         csv_path.string()},
                        sink, sink) == 0;
    ok = ok && cli::run({"tailfit", "candidates", "--profile", csv_path.string(), "--m", "5",
                         "--out", json_path.string()},
                        sink, sink) == 0;
    csv.push_back(slurp(csv_path));
    json.push_back(slurp(json_path));
  }
  const ProfileTable loaded = load_empirical_profile(dir / "staircase0.csv");
  const LayerSpec spec = layer_from_json(read_json_file(layer));
  const ProfileTable analytical =
      generate_analytical_profile(spec, testing::titan_v(), width_range(1, spec.filters));
  const auto from_csv = identify_candidates(loaded, 5).candidates;
  const auto from_model = identify_candidates(analytical, 5).candidates;
  fs::remove_all(dir);

  Outcome o;
  o.passed = ok && from_csv == from_model && csv[0] == csv[1] && json[0] == json[1];
  std::ostringstream d;
  d << "candidates";
  for (const Width w : from_csv) d << " " << w;
  d << (from_csv == from_model ? " (match)" : " (MISMATCH)") << ", reruns "
    << (csv[0] == csv[1] && json[0] == json[1] ? "byte-identical" : "DIFFER");
  o.detail = d.str();
  return o;
}

double relative_max_jump(FilterStyle style, const GpuSpec& gpu) {
  std::vector<double> latency;
  double sum = 0.0;
  for (Width f = 64; f <= 512; ++f) {
    latency.push_back(predict_latency(conv(f, style), gpu));
    sum += latency.back();
  }
  double jump = 0.0;
  for (std::size_t i = 1; i < latency.size(); ++i) jump = std::max(jump, latency[i] - latency[i - 1]);
  return jump / (sum / static_cast<double>(latency.size()));
}

// 9. Depthwise sweep is flatter than the matched dense sweep. Needs a fixed
// per-launch cost: under the pure wave model both ratios are 1 / mean waves.
Outcome depthwise_flatness() {
  GpuSpec gpu = testing::titan_v();
  gpu.launch_overhead_s = 5e-6;
  const double dw = relative_max_jump(FilterStyle::Depthwise, gpu);
  const double dense = relative_max_jump(FilterStyle::Dense, gpu);
  const GpuSpec bare = testing::titan_v();
  std::ostringstream d;
  d << "launch cost 5us: depthwise " << dw << " < dense " << dense;
  std::ostringstream info;
  info << "without launch cost: depthwise " << relative_max_jump(FilterStyle::Depthwise, bare)
       << ", dense " << relative_max_jump(FilterStyle::Dense, bare);
  return {dw < dense, d.str(), {info.str()}};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "staircase exactness", 1.0, staircase_exactness},
      {2, "wave oracle", 1.0, wave_oracle},
      {3, "peak-throughput attainment", 1.0, peak_attainment},
      {4, "candidate theorem", 5.0, candidate_theorem},
      {5, "greedy vs oracle", 30.0, greedy_vs_oracle},
      {6, "VGG16 scale-down/scale-up mechanism", 5.0, vgg_mechanism},
      {7, "accuracy-mode zero overhead", 5.0, accuracy_zero_overhead},
      {8, "pipeline closure", 2.0, pipeline_closure},
      {9, "depthwise flatness", 1.0, depthwise_flatness},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what(), {}};
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = elapsed < c.limit_s;
    const bool pass = o.passed && in_time;
    if (!pass) ++failed;
    std::printf("%s [%d] %s: %s (%.3f s, limit %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), elapsed, c.limit_s, in_time ? "" : ", TOO SLOW");
    for (const auto& line : o.info) std::printf("     [%d] info: %s\n", c.id, line.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
