#pragma once

// Per-layer width sweeps (latency, utilization, throughput per filter count)
// and the extraction of tail-free candidate widths from them.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tailfit/gpu_model.hpp"

namespace tailfit {

/// Widths beyond this are rejected by analytical sweeps.
inline constexpr Width kMaxProfileWidth = 4096;

/// Relative tolerance under which two U*T scores count as tied.
inline constexpr double kScoreTieTolerance = 1e-9;

/// Relative tolerance for throughput reconciliation on load.
inline constexpr double kThroughputTolerance = 1e-6;

enum class ProfileSource { Analytical, Empirical };

struct ProfileRow {
  Width width = 0;
  double latency = 0.0;      // seconds
  double flops = 0.0;
  double utilization = 0.0;  // (0, 1]
  double throughput = 0.0;   // FLOP/s, flops / latency

  double score() const { return utilization * throughput; }

  friend bool operator==(const ProfileRow&, const ProfileRow&) = default;
};

class ProfileTable {
 public:
  ProfileTable() = default;

  /// Validates the row invariants (non-empty, strictly increasing widths,
  /// positive latency, utilization in (0, 1]); throws Error(Schema / Value).
  ProfileTable(std::string layer_id, std::vector<ProfileRow> rows, ProfileSource source,
               std::optional<LayerSpec> base_layer = std::nullopt,
               bool utilization_estimated = false);

  const std::string& layer_id() const { return layer_id_; }
  std::span<const ProfileRow> rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  ProfileSource source() const { return source_; }
  const std::optional<LayerSpec>& base_layer() const { return base_layer_; }
  bool utilization_estimated() const { return utilization_estimated_; }

  /// Row index for an exact width, or nullopt. No interpolation.
  std::optional<std::size_t> find(Width width) const;
  bool contains(Width width) const { return find(width).has_value(); }

  /// Throws Error(ErrorKind::Lookup) for unmeasured widths.
  const ProfileRow& at(Width width) const;
  double latency_at(Width width) const { return at(width).latency; }

  friend bool operator==(const ProfileTable&, const ProfileTable&) = default;

 private:
  std::string layer_id_;
  std::vector<ProfileRow> rows_;
  ProfileSource source_ = ProfileSource::Analytical;
  std::optional<LayerSpec> base_layer_;
  bool utilization_estimated_ = false;
};

/// Sweep the analytical model over `widths` (filters = width per row).
/// Rows are computed in parallel; the result is identical to the serial form.
ProfileTable generate_analytical_profile(const LayerSpec& layer, const GpuSpec& gpu,
                                         std::span<const Width> widths);

/// Single-threaded reference for generate_analytical_profile.
ProfileTable generate_analytical_profile_serial(const LayerSpec& layer, const GpuSpec& gpu,
                                                std::span<const Width> widths);

/// One analytical table per layer over 1..filters (step 1), in layer order.
std::vector<ProfileTable> generate_full_profiles(std::span<const LayerSpec> layers,
                                                 const GpuSpec& gpu);

/// first, first + step, ... up to and including last when reachable.
std::vector<Width> width_range(Width first, Width last, Width step = 1);

struct CandidateSet {
  std::string layer_id;
  std::vector<Width> candidates;  // ascending
  std::vector<double> scores;     // U*T, aligned with candidates
  std::size_t m = 0;

  bool empty() const { return candidates.empty(); }

  friend bool operator==(const CandidateSet&, const CandidateSet&) = default;
};

/// Tail-free widths of a table: local maxima of U*T, capped at the m best.
///
/// A maximal run of tied scores is a local maximum when every neighbour
/// outside it scores lower. Runs that touch either end of the grid only
/// qualify when they also tie the table-wide maximum, because a grid edge
/// cannot show whether the score keeps rising past it (so the global
/// maximum always qualifies). Over-full selections keep the m highest
/// scores, ties going to the larger width.
CandidateSet identify_candidates(const ProfileTable& table, std::size_t m);

}  // namespace tailfit
