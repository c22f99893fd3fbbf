#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "plan_builder.hpp"
#include "tailfit/error.hpp"
#include "tailfit/optimizer.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tailfit {

namespace {

struct SearchSpace {
  std::vector<std::vector<Width>> options;    // per layer, ascending
  std::vector<std::vector<double>> lg;        // aligned with options
  std::vector<std::vector<double>> pg;
  std::uint64_t size = 1;
};

struct Best {
  bool found = false;
  double lg = 0.0;
  double pg = 0.0;
  std::vector<Width> widths;

  // Strict total order: more LG, then more PG, then smaller widths.
  bool worse_than(double other_lg, double other_pg, const std::vector<Width>& other) const {
    if (!found) return true;
    if (other_lg != lg) return other_lg > lg;
    if (other_pg != pg) return other_pg > pg;
    return other < widths;
  }

  void merge(const Best& other) {
    if (other.found && worse_than(other.lg, other.pg, other.widths)) *this = other;
  }
};

SearchSpace build_space(std::span<const detail::LayerContext> contexts,
                        const OracleOptions& options) {
  SearchSpace space;
  for (const auto& ctx : contexts) {
    const Width r_old = ctx.layer->width;
    std::vector<Width> widths{r_old};
    if (options.space == OracleSpace::AllCandidates) {
      widths.insert(widths.end(), ctx.candidates.candidates.begin(),
                    ctx.candidates.candidates.end());
    } else {
      if (const auto down = scale_down(ctx.candidates, r_old)) widths.push_back(*down);
      if (const auto up = scale_up(ctx.candidates, r_old)) widths.push_back(*up);
    }
    std::sort(widths.begin(), widths.end());
    widths.erase(std::unique(widths.begin(), widths.end()), widths.end());

    std::vector<double> lg;
    std::vector<double> pg;
    for (const Width w : widths) {
      lg.push_back(latency_gain(*ctx.table, r_old, w));
      pg.push_back(parameter_gain(ctx.layer->spec, r_old, w, options.metric));
    }
    if (space.size > options.max_assignments / widths.size()) {
      throw Error(ErrorKind::Size, "brute-force search space exceeds " +
                                       std::to_string(options.max_assignments) + " assignments");
    }
    space.size *= widths.size();
    space.options.push_back(std::move(widths));
    space.lg.push_back(std::move(lg));
    space.pg.push_back(std::move(pg));
  }
  return space;
}

// Evaluate assignments [begin, end) in mixed-radix order (last layer fastest).
Best search_range(const SearchSpace& space, double tau, std::uint64_t begin, std::uint64_t end) {
  const std::size_t n = space.options.size();
  Best best;
  std::vector<std::size_t> digit(n);
  std::vector<Width> widths(n);
  for (std::uint64_t index = begin; index < end; ++index) {
    std::uint64_t rest = index;
    for (std::size_t i = n; i-- > 0;) {
      const std::uint64_t radix = space.options[i].size();
      digit[i] = static_cast<std::size_t>(rest % radix);
      rest /= radix;
    }
    double lg = 0.0;
    double pg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      lg += space.lg[i][digit[i]];
      pg += space.pg[i][digit[i]];
      widths[i] = space.options[i][digit[i]];
    }
    if (!(-tau < pg && pg < tau)) continue;
    if (best.worse_than(lg, pg, widths)) {
      best.found = true;
      best.lg = lg;
      best.pg = pg;
      best.widths = widths;
    }
  }
  return best;
}

OptimizationPlan finish(const ModelConfig& model, std::span<const detail::LayerContext> contexts,
                        const Best& best, const OracleOptions& options) {
  OptimizationPlan plan =
      detail::assemble(model, contexts, best.widths, options.metric, PlanMode::Oracle);
  plan.tau_final = options.tau;
  plan.delta_target = options.delta;
  plan.feasible = -options.tau < plan.total_pg && plan.total_pg < options.tau &&
                  plan.latency_new <= options.delta * plan.latency_old;
  return plan;
}

void check(const OracleOptions& options) {
  if (options.m < 1) throw Error(ErrorKind::Value, "m must be >= 1");
  if (!(options.tau > 0.0)) throw Error(ErrorKind::Value, "tau must be > 0");
  if (!(options.delta > 0.0 && options.delta <= 1.0)) {
    throw Error(ErrorKind::Value, "delta must lie in (0, 1]");
  }
}

}  // namespace

OptimizationPlan brute_force_plan_serial(const ModelConfig& model,
                                         std::span<const ProfileTable> tables,
                                         const OracleOptions& options) {
  check(options);
  const auto contexts = detail::prepare(model, tables, options.m);
  const SearchSpace space = build_space(contexts, options);
  // The all-keep assignment has PG = 0, so a best always exists.
  const Best best = search_range(space, options.tau, 0, space.size);
  return finish(model, contexts, best, options);
}

OptimizationPlan brute_force_plan(const ModelConfig& model, std::span<const ProfileTable> tables,
                                  const OracleOptions& options) {
  check(options);
  const auto contexts = detail::prepare(model, tables, options.m);
  const SearchSpace space = build_space(contexts, options);

  int workers = 1;
#ifdef _OPENMP
  workers = omp_get_max_threads();
#endif
  std::vector<Best> partial(static_cast<std::size_t>(workers));
  const auto chunks = static_cast<std::int64_t>(workers);
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < chunks; ++c) {
    const std::uint64_t begin = space.size * static_cast<std::uint64_t>(c) / workers;
    const std::uint64_t end = space.size * static_cast<std::uint64_t>(c + 1) / workers;
    partial[static_cast<std::size_t>(c)] = search_range(space, options.tau, begin, end);
  }

  // The order is total, so the reduction does not depend on chunking.
  Best best;
  for (const auto& p : partial) best.merge(p);
  return finish(model, contexts, best, options);
}

}  // namespace tailfit
