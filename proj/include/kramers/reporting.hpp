#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "vendor_json.hpp"

namespace kramers {

inline constexpr const char* kArtifactVersion = "0.1.0";
inline constexpr const char* kReportSchemaVersion = "1";

// 17 significant digits: doubles round-trip, so equal configs give
// byte-identical files.
std::string format_double(double v);

using Cell = std::variant<double, std::int64_t, std::string>;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;
};

std::string render_csv(const Table& table);
void write_csv(const std::filesystem::path& path, const Table& table);

// Two-column (or wide) CSV for external plotting; header names carry units.
void emit_plot_data(const Table& series, const std::filesystem::path& path);

// Equal-width histogram of a sample, columns bin_left,count.
Table histogram_table(const std::vector<double>& samples, int bins);

struct Trajectory;  // samplers.hpp

// Trajectory dump: columns step, x_0..x_{d-1} and, for ULD runs,
// v_0..v_{d-1}.
Table trajectory_table(const Trajectory& traj);

// FNV-1a 64-bit of the file bytes, rendered as "fnv1a64:<hex>".
std::string file_checksum(const std::filesystem::path& path);

nlohmann::ordered_json report_envelope(const std::string& subcommand,
                                       const nlohmann::ordered_json& config_echo);

// Written after the result files; its presence (and matching checksums)
// marks them valid.
void write_manifest(const std::filesystem::path& out_dir,
                    const nlohmann::ordered_json& config_echo,
                    std::uint64_t seed, double wall_time_s,
                    const std::vector<std::filesystem::path>& outputs);

}  // namespace kramers
