#include "tailfit/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "plan_builder.hpp"
#include "tailfit/error.hpp"
#include "tailfit/profile_csv.hpp"

namespace tailfit {

void validate(const ModelConfig& model) {
  if (model.layers.empty()) throw Error(ErrorKind::Spec, "model has no layers");
  for (const auto& layer : model.layers) {
    validate(layer.spec);
    if (layer.width < 1 || layer.width > layer.spec.filters) {
      throw Error(ErrorKind::Spec, "layer '" + layer.spec.layer_id +
                                       "' field 'width' must lie in [1, filters]");
    }
  }
}

double latency_gain(const ProfileTable& table, Width r_old, Width r_new) {
  return table.latency_at(r_old) - table.latency_at(r_new);
}

double parameter_gain(const LayerSpec& layer, Width r_old, Width r_new, GainMetric metric) {
  const double delta = static_cast<double>(r_new - r_old);
  if (metric == GainMetric::WidthDelta) return delta;
  return delta * static_cast<double>(layer.params_per_filter());
}

std::optional<Width> scale_down(const CandidateSet& candidates, Width r_old) {
  const auto& c = candidates.candidates;
  const auto it = std::lower_bound(c.begin(), c.end(), r_old);
  if (it == c.begin()) return std::nullopt;
  return *std::prev(it);
}

std::optional<Width> scale_up(const CandidateSet& candidates, Width r_old) {
  const auto& c = candidates.candidates;
  const auto it = std::upper_bound(c.begin(), c.end(), r_old);
  if (it == c.end()) return std::nullopt;
  return *it;
}

std::vector<Width> OptimizationPlan::new_widths() const {
  std::vector<Width> out;
  out.reserve(layers.size());
  for (const auto& layer : layers) out.push_back(layer.r_new);
  return out;
}

const ProfileTable& table_for(std::span<const ProfileTable> tables, const std::string& layer_id) {
  for (const auto& table : tables) {
    if (table.layer_id() == layer_id) return table;
  }
  throw Error(ErrorKind::Config, "no profile table for layer '" + layer_id + "'");
}

const char* to_string(PlanAction action) {
  switch (action) {
    case PlanAction::Down: return "down";
    case PlanAction::Up: return "up";
    case PlanAction::Keep: return "keep";
  }
  return "keep";
}

const char* to_string(PlanMode mode) {
  switch (mode) {
    case PlanMode::Latency: return "latency";
    case PlanMode::Accuracy: return "accuracy";
    case PlanMode::Oracle: return "oracle";
  }
  return "latency";
}

const char* to_string(GainMetric metric) {
  return metric == GainMetric::WidthDelta ? "width" : "params";
}

namespace detail {

std::vector<LayerContext> prepare(const ModelConfig& model, std::span<const ProfileTable> tables,
                                  std::size_t m) {
  validate(model);
  std::vector<LayerContext> contexts;
  contexts.reserve(model.layers.size());
  for (const auto& layer : model.layers) {
    LayerContext ctx;
    ctx.layer = &layer;
    ctx.table = &table_for(tables, layer.spec.layer_id);
    if (!ctx.table->contains(layer.width)) {
      throw Error(ErrorKind::Config, "profile for layer '" + layer.spec.layer_id +
                                         "' does not cover width " + std::to_string(layer.width));
    }
    CandidateSet all = identify_candidates(*ctx.table, m);
    ctx.candidates.layer_id = all.layer_id;
    ctx.candidates.m = all.m;
    for (std::size_t i = 0; i < all.candidates.size(); ++i) {
      if (all.candidates[i] <= layer.spec.filters) {
        ctx.candidates.candidates.push_back(all.candidates[i]);
        ctx.candidates.scores.push_back(all.scores[i]);
      }
    }
    contexts.push_back(std::move(ctx));
  }
  return contexts;
}

OptimizationPlan assemble(const ModelConfig& model, std::span<const LayerContext> contexts,
                          std::span<const Width> widths, GainMetric metric, PlanMode mode) {
  OptimizationPlan plan;
  plan.model_name = model.name;
  plan.mode = mode;
  plan.metric = metric;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    const LayerContext& ctx = contexts[i];
    PlanLayer out;
    out.layer_id = ctx.layer->spec.layer_id;
    out.r_old = ctx.layer->width;
    out.r_new = widths[i];
    out.lg = latency_gain(*ctx.table, out.r_old, out.r_new);
    out.pg = parameter_gain(ctx.layer->spec, out.r_old, out.r_new, metric);
    out.pg_unit = parameter_gain(ctx.layer->spec, 0, 1, metric);
    out.action = out.r_new < out.r_old   ? PlanAction::Down
                 : out.r_new > out.r_old ? PlanAction::Up
                                         : PlanAction::Keep;
    plan.total_lg += out.lg;
    plan.total_pg += out.pg;
    plan.latency_old += ctx.table->latency_at(out.r_old);
    plan.latency_new += ctx.table->latency_at(out.r_new);
    plan.layers.push_back(std::move(out));
  }
  return plan;
}

}  // namespace detail

namespace {

bool in_band(double pg, double tau) { return -tau < pg && pg < tau; }

struct MoveEstimate {
  std::optional<Width> down;
  std::optional<Width> up;
  double lg_down = 0.0;
  double pg_down = 0.0;
  double lg_up = 0.0;
  double pg_up = 0.0;
};

struct RoundResult {
  std::vector<Width> widths;
  int rollbacks = 0;
};

// One pass of the balanced adjustment at a fixed tau. Gains are the
// estimates taken once before the first round.
RoundResult run_round(std::span<const detail::LayerContext> contexts,
                      std::span<const MoveEstimate> moves, double tau) {
  const std::size_t n = contexts.size();
  RoundResult result;
  result.widths.resize(n);
  for (std::size_t i = 0; i < n; ++i) result.widths[i] = contexts[i].layer->width;

  std::vector<bool> remaining(n, true);
  double pg_sum = 0.0;

  const auto pop_max_lg = [&]() {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!remaining[i]) continue;
      if (best == n || moves[i].lg_down > moves[best].lg_down) best = i;
    }
    remaining[best] = false;
    return best;
  };

  // Smallest LG first, later layers first on ties. Only moves that cost no
  // latency and stay below the upper band edge qualify.
  const auto pick_min_lg_up = [&](double current) {
    std::size_t best = n;
    for (std::size_t i = n; i-- > 0;) {
      if (!remaining[i] || !moves[i].up) continue;
      if (moves[i].lg_up < 0.0 || current + moves[i].pg_up >= tau) continue;
      if (best == n || moves[i].lg_down < moves[best].lg_down) best = i;
    }
    return best;
  };

  while (std::find(remaining.begin(), remaining.end(), true) != remaining.end()) {
    const std::size_t j = pop_max_lg();
    if (!moves[j].down || moves[j].lg_down <= 0.0) continue;

    const double pg_before = pg_sum;
    std::vector<std::size_t> raised;
    result.widths[j] = *moves[j].down;
    pg_sum += moves[j].pg_down;

    bool balanced = true;
    while (!in_band(pg_sum, tau)) {
      const std::size_t k = pick_min_lg_up(pg_sum);
      if (k == n) {
        balanced = false;
        break;
      }
      remaining[k] = false;
      result.widths[k] = *moves[k].up;
      pg_sum += moves[k].pg_up;
      raised.push_back(k);
    }
    if (!balanced) {
      // No layer left to compensate: undo this scale-down and its partial
      // compensation, and hand the compensating layers back.
      result.widths[j] = contexts[j].layer->width;
      for (const std::size_t k : raised) {
        result.widths[k] = contexts[k].layer->width;
        remaining[k] = true;
      }
      pg_sum = pg_before;
      ++result.rollbacks;
    }
  }
  return result;
}

std::string describe_ratio(double latency_new, double latency_old) {
  std::ostringstream out;
  out.precision(6);
  out << latency_new / latency_old;
  return out.str();
}

}  // namespace

OptimizationPlan optimize_latency(const ModelConfig& model, std::span<const ProfileTable> tables,
                                  const LatencyOptions& options) {
  if (options.m < 1) throw Error(ErrorKind::Value, "m must be >= 1");
  if (!(std::isfinite(options.tau) && options.tau > 0.0)) {
    throw Error(ErrorKind::Value, "tau must be > 0");
  }
  if (!(options.delta > 0.0 && options.delta <= 1.0)) {
    throw Error(ErrorKind::Value, "delta must lie in (0, 1]");
  }
  if (options.max_retries < 0) throw Error(ErrorKind::Value, "max_retries must be >= 0");

  const auto contexts = detail::prepare(model, tables, options.m);

  std::vector<MoveEstimate> moves(contexts.size());
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    const auto& ctx = contexts[i];
    const Width r_old = ctx.layer->width;
    MoveEstimate& move = moves[i];
    move.down = scale_down(ctx.candidates, r_old);
    move.up = scale_up(ctx.candidates, r_old);
    if (move.down) {
      move.lg_down = latency_gain(*ctx.table, r_old, *move.down);
      move.pg_down = parameter_gain(ctx.layer->spec, r_old, *move.down, options.metric);
    }
    if (move.up) {
      move.lg_up = latency_gain(*ctx.table, r_old, *move.up);
      move.pg_up = parameter_gain(ctx.layer->spec, r_old, *move.up, options.metric);
    }
  }

  std::optional<OptimizationPlan> best;
  double tau = options.tau;
  for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
    const RoundResult round = run_round(contexts, moves, tau);
    OptimizationPlan plan =
        detail::assemble(model, contexts, round.widths, options.metric, PlanMode::Latency);
    plan.tau_final = tau;
    plan.delta_target = options.delta;
    plan.tau_doublings = attempt;
    if (round.rollbacks > 0) {
      plan.notes.push_back(std::to_string(round.rollbacks) +
                           " scale-down(s) rolled back: parameter gain could not be balanced "
                           "within tau");
    }
    plan.feasible = in_band(plan.total_pg, tau) &&
                    plan.latency_new <= options.delta * plan.latency_old;
    if (plan.feasible) {
      plan.next_steps.push_back("train_and_evaluate");
      return plan;
    }
    if (!best || plan.latency_new < best->latency_new) best = std::move(plan);
    tau *= 2.0;
  }

  best->feasible = false;
  best->notes.push_back("latency target not met: best L_new / L_old = " +
                        describe_ratio(best->latency_new, best->latency_old) + " > delta " +
                        format_double(options.delta) + " after " +
                        std::to_string(options.max_retries) + " tau doubling(s)");
  return std::move(*best);
}

OptimizationPlan optimize_accuracy(const ModelConfig& model, std::span<const ProfileTable> tables,
                                   GainMetric metric) {
  const auto contexts = detail::prepare(model, tables, 1);

  std::vector<Width> widths;
  widths.reserve(contexts.size());
  for (const auto& ctx : contexts) {
    const auto rows = ctx.table->rows();
    std::size_t i = *ctx.table->find(ctx.layer->width);
    const double latency = rows[i].latency;
    while (i + 1 < rows.size() && rows[i + 1].latency == latency &&
           rows[i + 1].width <= ctx.layer->spec.filters) {
      ++i;
    }
    widths.push_back(rows[i].width);
  }

  OptimizationPlan plan = detail::assemble(model, contexts, widths, metric, PlanMode::Accuracy);
  plan.delta_target = 1.0;
  plan.feasible = plan.total_lg >= 0.0;
  plan.notes.push_back("accuracy mode: each layer filled to the right edge of its flat latency "
                       "interval");
  if (plan.feasible) plan.next_steps.push_back("train_and_evaluate");
  return plan;
}

}  // namespace tailfit
