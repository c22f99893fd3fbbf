#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tailfit/optimizer.hpp"
#include "tailfit/profile.hpp"

namespace tailfit {

struct VerifyCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;

  bool all_passed() const;
  std::string to_text() const;
};

/// Recompute a plan's gains and latencies from `tables` and compare them
/// with what the plan claims. `delta` overrides the plan's own target.
/// Throws Error(Config) when a plan width is not covered by the tables.
VerifyReport verify_plan(const OptimizationPlan& plan, std::span<const ProfileTable> tables,
                         std::optional<double> delta = std::nullopt);

}  // namespace tailfit
