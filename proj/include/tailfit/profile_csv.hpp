#pragma once

// Profile CSV files.
//
//   layer_id,width,latency_s,flops[,utilization][,throughput_flops]
//
// Columns are matched by header name and unknown columns are ignored, so a
// staircase sweep file loads as a profile directly. One file may hold
// several layers; each layer's rows must be contiguous and width-sorted.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tailfit/profile.hpp"

namespace tailfit {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

std::vector<ProfileTable> read_profile_csv(std::istream& in, std::string_view source_name);

/// All layer tables in file order. Throws Error(Io) when unreadable.
std::vector<ProfileTable> load_profiles(const std::filesystem::path& path);

/// The single layer table in `path`; Error(Schema) when it holds several.
ProfileTable load_empirical_profile(const std::filesystem::path& path);

void write_profile_csv(std::ostream& out, std::span<const ProfileTable> tables);

/// Sweep rows with the block / wave view:
/// layer_id,width,blocks,waves,latency_s,flops,utilization,throughput_flops
void write_staircase_csv(std::ostream& out, const LayerSpec& layer, const GpuSpec& gpu,
                         std::span<const Width> widths);

}  // namespace tailfit
