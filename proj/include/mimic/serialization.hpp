#pragma once

// Line-delimited JSON persistence: one record per line, each tagged with "v".

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "mimic/core.hpp"

namespace mimic {

using Json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

Json to_json(const Trajectory& trajectory);
Trajectory trajectory_from_json(const Json& record);

void save_trajectories(std::span<const Trajectory> trajectories, const std::filesystem::path& path);
std::vector<Trajectory> load_trajectories(const std::filesystem::path& path);

/// Parses every nonblank line as JSON. Errors name the 1-based line number.
std::vector<Json> read_json_lines(const std::filesystem::path& path);
void write_json_lines(const std::vector<Json>& records, const std::filesystem::path& path);

/// Append-only list of metric records, written as JSON lines.
class MetricLog {
 public:
  void append(Json record) { records_.push_back(std::move(record)); }
  const std::vector<Json>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  void write(const std::filesystem::path& path) const { write_json_lines(records_, path); }

 private:
  std::vector<Json> records_;
};

}  // namespace mimic
