#include "tailfit/profile.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "tailfit/error.hpp"

namespace tailfit {

namespace {

constexpr double kRowConsistencyTolerance = 1e-9;

bool tied(double a, double b) {
  return std::abs(a - b) <= kScoreTieTolerance * std::max(std::abs(a), std::abs(b));
}

}  // namespace

ProfileTable::ProfileTable(std::string layer_id, std::vector<ProfileRow> rows,
                           ProfileSource source, std::optional<LayerSpec> base_layer,
                           bool utilization_estimated)
    : layer_id_(std::move(layer_id)),
      rows_(std::move(rows)),
      source_(source),
      base_layer_(std::move(base_layer)),
      utilization_estimated_(utilization_estimated) {
  const std::string where = "profile '" + layer_id_ + "'";
  if (rows_.empty()) throw Error(ErrorKind::Schema, where + " has no rows");
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const ProfileRow& row = rows_[i];
    const std::string at = where + " width " + std::to_string(row.width);
    if (row.width < 1) throw Error(ErrorKind::Value, at + ": width must be >= 1");
    if (i > 0 && row.width <= rows_[i - 1].width) {
      throw Error(ErrorKind::Schema, at + ": widths must be strictly increasing");
    }
    if (!(std::isfinite(row.latency) && row.latency > 0.0)) {
      throw Error(ErrorKind::Value, at + ": latency must be > 0");
    }
    if (!(std::isfinite(row.flops) && row.flops > 0.0)) {
      throw Error(ErrorKind::Value, at + ": flops must be > 0");
    }
    if (!(row.utilization > 0.0 && row.utilization <= 1.0)) {
      throw Error(ErrorKind::Value, at + ": utilization must lie in (0, 1]");
    }
    const double product = row.throughput * row.latency;
    if (!(std::abs(product - row.flops) <= kRowConsistencyTolerance * row.flops)) {
      throw Error(ErrorKind::Reconciliation, at + ": throughput * latency != flops");
    }
  }
}

std::optional<std::size_t> ProfileTable::find(Width width) const {
  const auto it = std::lower_bound(rows_.begin(), rows_.end(), width,
                                   [](const ProfileRow& row, Width w) { return row.width < w; });
  if (it == rows_.end() || it->width != width) return std::nullopt;
  return static_cast<std::size_t>(it - rows_.begin());
}

const ProfileRow& ProfileTable::at(Width width) const {
  const auto index = find(width);
  if (!index) {
    throw Error(ErrorKind::Lookup, "profile '" + layer_id_ + "' has no row for width " +
                                       std::to_string(width));
  }
  return rows_[*index];
}

namespace {

void check_width_grid(std::span<const Width> widths) {
  if (widths.empty()) throw Error(ErrorKind::Schema, "width list is empty");
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (widths[i] < 1 || widths[i] > kMaxProfileWidth) {
      throw Error(ErrorKind::Value, "width " + std::to_string(widths[i]) +
                                        " outside [1, " + std::to_string(kMaxProfileWidth) +
                                        "]");
    }
    if (i > 0 && widths[i] <= widths[i - 1]) {
      throw Error(ErrorKind::Schema, "width list must be strictly increasing");
    }
  }
}

ProfileRow analytical_row(const LayerSpec& layer, const GpuSpec& gpu, Width width) {
  const LayerPrediction p = predict(layer.with_filters(width), gpu);
  return ProfileRow{width, p.latency, p.flops, p.utilization, p.throughput};
}

}  // namespace

ProfileTable generate_analytical_profile(const LayerSpec& layer, const GpuSpec& gpu,
                                         std::span<const Width> widths) {
  validate(layer);
  validate(gpu);
  check_width_grid(widths);

  std::vector<ProfileRow> rows(widths.size());
  const auto count = static_cast<std::int64_t>(widths.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) {
    rows[static_cast<std::size_t>(i)] = analytical_row(layer, gpu, widths[static_cast<std::size_t>(i)]);
  }
  return ProfileTable(layer.layer_id, std::move(rows), ProfileSource::Analytical, layer);
}

ProfileTable generate_analytical_profile_serial(const LayerSpec& layer, const GpuSpec& gpu,
                                                std::span<const Width> widths) {
  validate(layer);
  validate(gpu);
  check_width_grid(widths);

  std::vector<ProfileRow> rows;
  rows.reserve(widths.size());
  for (const Width width : widths) rows.push_back(analytical_row(layer, gpu, width));
  return ProfileTable(layer.layer_id, std::move(rows), ProfileSource::Analytical, layer);
}

std::vector<ProfileTable> generate_full_profiles(std::span<const LayerSpec> layers,
                                                 const GpuSpec& gpu) {
  std::vector<ProfileTable> tables(layers.size());
  const auto count = static_cast<std::int64_t>(layers.size());
  // Errors cannot leave an OpenMP region, so validate up front.
  for (const auto& layer : layers) {
    validate(layer);
    if (layer.filters > kMaxProfileWidth) {
      throw Error(ErrorKind::Value, "layer '" + layer.layer_id + "' has more than " +
                                        std::to_string(kMaxProfileWidth) + " filters");
    }
  }
  validate(gpu);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < count; ++i) {
    const LayerSpec& layer = layers[static_cast<std::size_t>(i)];
    const auto grid = width_range(1, layer.filters);
    tables[static_cast<std::size_t>(i)] = generate_analytical_profile_serial(layer, gpu, grid);
  }
  return tables;
}

std::vector<Width> width_range(Width first, Width last, Width step) {
  if (step < 1) throw Error(ErrorKind::Value, "width step must be >= 1");
  std::vector<Width> out;
  for (Width w = first; w <= last; w += step) out.push_back(w);
  return out;
}

CandidateSet identify_candidates(const ProfileTable& table, std::size_t m) {
  if (m < 1) throw Error(ErrorKind::Value, "candidate count m must be >= 1");
  const auto rows = table.rows();
  const std::size_t n = rows.size();

  double best = rows[0].score();
  for (const auto& row : rows) best = std::max(best, row.score());

  struct Pick {
    Width width;
    double score;
  };
  std::vector<Pick> picks;

  // Walk maximal runs of tied scores.
  for (std::size_t begin = 0; begin < n;) {
    std::size_t end = begin + 1;
    while (end < n && tied(rows[end].score(), rows[end - 1].score())) ++end;
    const std::size_t last = end - 1;

    const bool left_lower = begin == 0 || rows[begin - 1].score() < rows[begin].score();
    const bool right_lower = end == n || rows[end].score() < rows[last].score();
    const bool at_edge = begin == 0 || end == n;
    const bool peak = std::any_of(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                                  rows.begin() + static_cast<std::ptrdiff_t>(end),
                                  [&](const ProfileRow& r) { return tied(r.score(), best); });
    if (left_lower && right_lower && (!at_edge || peak)) {
      for (std::size_t i = begin; i < end; ++i) picks.push_back({rows[i].width, rows[i].score()});
    }
    begin = end;
  }

  if (picks.empty()) {
    for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
      if (tied(it->score(), best)) {
        picks.push_back({it->width, it->score()});
        break;
      }
    }
  }

  if (picks.size() > m) {
    // Take tie groups from the top, larger widths first within a group.
    std::vector<Pick> kept;
    while (kept.size() < m && !picks.empty()) {
      double top = picks.front().score;
      for (const auto& p : picks) top = std::max(top, p.score);
      std::vector<Pick> group;
      std::vector<Pick> rest;
      for (const auto& p : picks) (tied(p.score, top) ? group : rest).push_back(p);
      std::sort(group.begin(), group.end(),
                [](const Pick& a, const Pick& b) { return a.width > b.width; });
      for (const auto& p : group) {
        if (kept.size() == m) break;
        kept.push_back(p);
      }
      picks = std::move(rest);
    }
    picks = std::move(kept);
  }

  std::sort(picks.begin(), picks.end(),
            [](const Pick& a, const Pick& b) { return a.width < b.width; });

  CandidateSet out;
  out.layer_id = table.layer_id();
  out.m = m;
  for (const auto& p : picks) {
    out.candidates.push_back(p.width);
    out.scores.push_back(p.score);
  }
  return out;
}

}  // namespace tailfit
