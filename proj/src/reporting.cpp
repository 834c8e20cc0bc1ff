#include "kramers/reporting.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "kramers/samplers.hpp"

namespace kramers {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::string render_cell(const Cell& cell) {
  if (std::holds_alternative<double>(cell)) {
    return format_double(std::get<double>(cell));
  }
  if (std::holds_alternative<std::int64_t>(cell)) {
    return std::to_string(std::get<std::int64_t>(cell));
  }
  return std::get<std::string>(cell);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

std::string render_csv(const Table& table) {
  std::string text;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) text += ',';
    text += table.header[i];
  }
  text += '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) {
      throw std::runtime_error("render_csv: row width does not match header");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) text += ',';
      text += render_cell(row[i]);
    }
    text += '\n';
  }
  return text;
}

void write_csv(const std::filesystem::path& path, const Table& table) {
  write_text(path, render_csv(table));
}

void emit_plot_data(const Table& series, const std::filesystem::path& path) {
  if (series.rows.empty()) {
    throw std::domain_error("emit_plot_data: series must be nonempty");
  }
  write_csv(path, series);
}

Table histogram_table(const std::vector<double>& samples, int bins) {
  if (samples.empty() || bins < 1) {
    throw std::domain_error("histogram_table: need samples and bins >= 1");
  }
  double lo = samples[0], hi = samples[0];
  for (double s : samples) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  if (hi == lo) hi = lo + 1.0;
  const double width = (hi - lo) / bins;
  std::vector<std::int64_t> counts(bins, 0);
  for (double s : samples) {
    int b = static_cast<int>((s - lo) / width);
    if (b >= bins) b = bins - 1;
    ++counts[b];
  }
  Table t;
  t.header = {"bin_left", "count"};
  for (int b = 0; b < bins; ++b) {
    t.rows.push_back({lo + b * width, counts[b]});
  }
  return t;
}

Table trajectory_table(const Trajectory& traj) {
  Table t;
  const bool with_v = !traj.velocities.empty();
  const long d = traj.positions.empty() ? 0 : traj.positions[0].size();
  t.header = {"step"};
  for (long i = 0; i < d; ++i) t.header.push_back("x_" + std::to_string(i));
  if (with_v) {
    for (long i = 0; i < d; ++i) t.header.push_back("v_" + std::to_string(i));
  }
  for (std::size_t k = 0; k < traj.positions.size(); ++k) {
    std::vector<Cell> row;
    row.emplace_back(traj.step_indices[k]);
    for (long i = 0; i < d; ++i) row.emplace_back(traj.positions[k](i));
    if (with_v) {
      for (long i = 0; i < d; ++i) row.emplace_back(traj.velocities[k](i));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for checksum: " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::ordered_json report_envelope(const std::string& subcommand,
                                       const nlohmann::ordered_json& config_echo) {
  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["artifact_version"] = kArtifactVersion;
  j["subcommand"] = subcommand;
  j["config"] = config_echo;
  j["results"] = nlohmann::ordered_json::object();
  return j;
}

void write_manifest(const std::filesystem::path& out_dir,
                    const nlohmann::ordered_json& config_echo,
                    std::uint64_t seed, double wall_time_s,
                    const std::vector<std::filesystem::path>& outputs) {
  nlohmann::ordered_json m;
  m["artifact_version"] = kArtifactVersion;
  m["seed"] = seed;
  m["wall_time_s"] = wall_time_s;
  m["config"] = config_echo;
  auto sums = nlohmann::ordered_json::object();
  for (const auto& p : outputs) {
    sums[p.filename().string()] = file_checksum(p);
  }
  m["outputs"] = sums;
  write_text(out_dir / "manifest.json", m.dump(2) + "\n");
}

}  // namespace kramers
