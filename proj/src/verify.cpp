#include "tailfit/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tailfit/error.hpp"
#include "tailfit/profile_csv.hpp"

namespace tailfit {

namespace {

constexpr double kRelTolerance = 1e-9;

bool close(double a, double b) {
  return std::abs(a - b) <= kRelTolerance * std::max(std::abs(a), std::abs(b)) + 1e-300;
}

VerifyCheck compare(std::string name, double claimed, double recomputed) {
  VerifyCheck check{std::move(name), close(claimed, recomputed), {}};
  check.detail = "plan " + format_double(claimed) + ", recomputed " + format_double(recomputed);
  return check;
}

}  // namespace

bool VerifyReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.passed; });
}

std::string VerifyReport::to_text() const {
  std::ostringstream out;
  std::size_t passed = 0;
  for (const auto& check : checks) {
    out << (check.passed ? "PASS " : "FAIL ") << check.name;
    if (!check.detail.empty()) out << ": " << check.detail;
    out << '\n';
    if (check.passed) ++passed;
  }
  out << "verify: " << passed << "/" << checks.size() << " checks passed\n";
  return out.str();
}

VerifyReport verify_plan(const OptimizationPlan& plan, std::span<const ProfileTable> tables,
                         std::optional<double> delta) {
  for (const auto& layer : plan.layers) {
    const ProfileTable& table = table_for(tables, layer.layer_id);
    for (const Width w : {layer.r_old, layer.r_new}) {
      if (!table.contains(w)) {
        throw Error(ErrorKind::Config, "profile for layer '" + layer.layer_id +
                                           "' does not cover width " + std::to_string(w));
      }
    }
  }

  VerifyReport report;
  report.checks.push_back({"coverage", true, std::to_string(plan.layers.size()) + " layers"});

  double total_lg = 0.0;
  double total_pg = 0.0;
  double latency_old = 0.0;
  double latency_new = 0.0;
  std::size_t lg_mismatches = 0;
  std::string first_mismatch;
  for (const auto& layer : plan.layers) {
    const ProfileTable& table = table_for(tables, layer.layer_id);
    const double lg = latency_gain(table, layer.r_old, layer.r_new);
    if (!close(lg, layer.lg)) {
      if (lg_mismatches++ == 0) {
        first_mismatch = layer.layer_id + " plan " + format_double(layer.lg) + ", recomputed " +
                         format_double(lg);
      }
    }
    total_lg += lg;
    total_pg += static_cast<double>(layer.r_new - layer.r_old) * layer.pg_unit;
    latency_old += table.latency_at(layer.r_old);
    latency_new += table.latency_at(layer.r_new);
  }
  report.checks.push_back({"layer_lg", lg_mismatches == 0,
                           lg_mismatches == 0 ? std::string("all layers match")
                                              : std::to_string(lg_mismatches) +
                                                    " mismatch(es), first " + first_mismatch});
  report.checks.push_back(compare("total_lg", plan.total_lg, total_lg));
  report.checks.push_back(compare("total_pg", plan.total_pg, total_pg));
  report.checks.push_back(compare("latency_old", plan.latency_old, latency_old));
  report.checks.push_back(compare("latency_new", plan.latency_new, latency_new));

  bool feasible = true;
  if (plan.tau_final) {
    const double tau = *plan.tau_final;
    const bool ok = -tau < total_pg && total_pg < tau;
    feasible = feasible && ok;
    report.checks.push_back({"pg_band", ok,
                             "|" + format_double(total_pg) + "| < " + format_double(tau)});
  }
  if (plan.mode == PlanMode::Accuracy) {
    const bool ok = total_lg >= 0.0;
    feasible = feasible && ok;
    report.checks.push_back({"latency_overhead", ok, "total LG " + format_double(total_lg) + " >= 0"});
  } else {
    const double target = delta.value_or(plan.delta_target);
    const bool ok = latency_new <= target * latency_old;
    feasible = feasible && ok;
    std::ostringstream ratio;
    ratio.precision(6);
    ratio << "L_new / L_old = " << latency_new / latency_old << " <= " << target;
    report.checks.push_back({"latency_target", ok, ratio.str()});
  }
  report.checks.push_back({"feasible_claim", feasible == plan.feasible,
                           std::string("plan says ") + (plan.feasible ? "feasible" : "infeasible") +
                               ", recomputed " + (feasible ? "feasible" : "infeasible")});
  return report;
}

}  // namespace tailfit
