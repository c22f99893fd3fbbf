#include "tailfit/profile_csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "tailfit/error.hpp"

namespace tailfit {

std::string format_double(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

namespace {

std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r");
  return text.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

class LineContext {
 public:
  LineContext(std::string_view source, std::size_t line) : source_(source), line_(line) {}

  [[noreturn]] void fail(ErrorKind kind, const std::string& what) const {
    throw Error(kind, std::string(source_) + ":" + std::to_string(line_) + ": " + what);
  }

  double number(std::string_view field, std::string_view column) const {
    double value = 0.0;
    const auto result = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || result.ec != std::errc() || result.ptr != field.data() + field.size() ||
        !std::isfinite(value)) {
      fail(ErrorKind::Parse, "column '" + std::string(column) + "' is not a number: '" +
                                 std::string(field) + "'");
    }
    return value;
  }

  Width integer(std::string_view field, std::string_view column) const {
    Width value = 0;
    const auto result = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || result.ec != std::errc() || result.ptr != field.data() + field.size()) {
      fail(ErrorKind::Parse, "column '" + std::string(column) + "' is not an integer: '" +
                                 std::string(field) + "'");
    }
    return value;
  }

 private:
  std::string_view source_;
  std::size_t line_;
};

struct PendingRow {
  ProfileRow row;
  std::optional<double> given_throughput;
  std::optional<double> given_utilization;
  std::size_t line = 0;
};

struct PendingTable {
  std::string layer_id;
  std::vector<PendingRow> rows;
};

ProfileTable finish(const PendingTable& pending, std::string_view source, bool has_utilization) {
  std::vector<ProfileRow> rows;
  rows.reserve(pending.rows.size());
  double peak_throughput = 0.0;
  for (const auto& p : pending.rows) {
    ProfileRow row = p.row;
    row.throughput = row.flops / row.latency;
    if (p.given_throughput) {
      const double given = *p.given_throughput;
      if (!(std::abs(given - row.throughput) <= kThroughputTolerance * row.throughput)) {
        LineContext(source, p.line)
            .fail(ErrorKind::Reconciliation,
                  "throughput " + format_double(given) + " disagrees with flops / latency = " +
                      format_double(row.throughput));
      }
    }
    if (p.given_utilization) row.utilization = *p.given_utilization;
    peak_throughput = std::max(peak_throughput, row.throughput);
    rows.push_back(row);
  }
  if (!has_utilization) {
    for (auto& row : rows) row.utilization = row.throughput / peak_throughput;
  }
  return ProfileTable(pending.layer_id, std::move(rows), ProfileSource::Empirical, std::nullopt,
                      !has_utilization);
}

}  // namespace

std::vector<ProfileTable> read_profile_csv(std::istream& in, std::string_view source_name) {
  std::string line;
  std::size_t line_no = 0;

  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    for (const auto field : split(line)) header.emplace_back(field);
    break;
  }
  if (header.empty()) {
    throw Error(ErrorKind::Schema, std::string(source_name) + ": missing CSV header");
  }

  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!column.emplace(header[i], i).second) {
      LineContext(source_name, line_no).fail(ErrorKind::Schema, "duplicate column '" + header[i] + "'");
    }
  }
  for (const char* required : {"layer_id", "width", "latency_s", "flops"}) {
    if (!column.count(required)) {
      LineContext(source_name, line_no)
          .fail(ErrorKind::Schema, std::string("missing required column '") + required + "'");
    }
  }
  const auto optional_column = [&](const char* name) -> std::optional<std::size_t> {
    const auto it = column.find(name);
    if (it == column.end()) return std::nullopt;
    return it->second;
  };
  const std::size_t id_col = column["layer_id"];
  const std::size_t width_col = column["width"];
  const std::size_t latency_col = column["latency_s"];
  const std::size_t flops_col = column["flops"];
  const auto util_col = optional_column("utilization");
  const auto tput_col = optional_column("throughput_flops");

  std::vector<PendingTable> pending;
  std::set<std::string> finished_ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const LineContext ctx(source_name, line_no);
    const auto fields = split(line);
    if (fields.size() != header.size()) {
      ctx.fail(ErrorKind::Parse, "expected " + std::to_string(header.size()) + " fields, found " +
                                     std::to_string(fields.size()));
    }

    const std::string layer_id(fields[id_col]);
    if (layer_id.empty()) ctx.fail(ErrorKind::Parse, "empty layer_id");
    if (pending.empty() || pending.back().layer_id != layer_id) {
      if (!pending.empty()) finished_ids.insert(pending.back().layer_id);
      if (finished_ids.count(layer_id)) {
        ctx.fail(ErrorKind::Schema, "rows of layer '" + layer_id + "' are not contiguous");
      }
      pending.push_back(PendingTable{layer_id, {}});
    }

    PendingRow p;
    p.line = line_no;
    p.row.width = ctx.integer(fields[width_col], "width");
    p.row.latency = ctx.number(fields[latency_col], "latency_s");
    p.row.flops = ctx.number(fields[flops_col], "flops");
    if (util_col) p.given_utilization = ctx.number(fields[*util_col], "utilization");
    if (tput_col) p.given_throughput = ctx.number(fields[*tput_col], "throughput_flops");

    if (p.row.width < 1) ctx.fail(ErrorKind::Value, "width must be >= 1");
    auto& rows = pending.back().rows;
    if (!rows.empty() && p.row.width <= rows.back().row.width) {
      ctx.fail(ErrorKind::Schema, "widths of layer '" + layer_id + "' must be strictly increasing");
    }
    if (p.row.latency <= 0.0) ctx.fail(ErrorKind::Value, "latency_s must be > 0");
    if (p.row.flops <= 0.0) ctx.fail(ErrorKind::Value, "flops must be > 0");
    if (p.given_utilization && !(*p.given_utilization > 0.0 && *p.given_utilization <= 1.0)) {
      ctx.fail(ErrorKind::Value, "utilization must lie in (0, 1]");
    }
    rows.push_back(p);
  }
  if (pending.empty()) {
    throw Error(ErrorKind::Schema, std::string(source_name) + ": no data rows");
  }

  std::vector<ProfileTable> tables;
  tables.reserve(pending.size());
  for (const auto& p : pending) tables.push_back(finish(p, source_name, util_col.has_value()));
  return tables;
}

std::vector<ProfileTable> load_profiles(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open profile '" + path.string() + "'");
  return read_profile_csv(in, path.string());
}

ProfileTable load_empirical_profile(const std::filesystem::path& path) {
  auto tables = load_profiles(path);
  if (tables.size() != 1) {
    throw Error(ErrorKind::Schema, path.string() + ": holds " + std::to_string(tables.size()) +
                                       " layers, expected one");
  }
  return std::move(tables.front());
}

void write_profile_csv(std::ostream& out, std::span<const ProfileTable> tables) {
  out << "layer_id,width,latency_s,flops,utilization,throughput_flops\n";
  for (const auto& table : tables) {
    for (const auto& row : table.rows()) {
      out << table.layer_id() << ',' << row.width << ',' << format_double(row.latency) << ','
          << format_double(row.flops) << ',' << format_double(row.utilization) << ','
          << format_double(row.throughput) << '\n';
    }
  }
}

void write_staircase_csv(std::ostream& out, const LayerSpec& layer, const GpuSpec& gpu,
                         std::span<const Width> widths) {
  const ProfileTable table = generate_analytical_profile(layer, gpu, widths);
  out << "layer_id,width,blocks,waves,latency_s,flops,utilization,throughput_flops\n";
  for (const auto& row : table.rows()) {
    const ThreadMapping mapping = map_to_blocks(layer.with_filters(row.width), gpu);
    out << table.layer_id() << ',' << row.width << ',' << mapping.blocks << ','
        << mapping.waves << ',' << format_double(row.latency) << ','
        << format_double(row.flops) << ',' << format_double(row.utilization) << ','
        << format_double(row.throughput) << '\n';
  }
}

}  // namespace tailfit
