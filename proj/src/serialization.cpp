#include "mimic/serialization.hpp"

#include <fstream>
#include <string>

namespace mimic {

Json to_json(const Trajectory& trajectory) {
  Json record;
  record["v"] = kFormatVersion;
  record["obs"] = trajectory.observations;
  record["acts"] = trajectory.actions;
  record["rews"] = trajectory.rewards ? Json(*trajectory.rewards) : Json(nullptr);
  record["terminal"] = trajectory.terminal;
  return record;
}

Trajectory trajectory_from_json(const Json& record) {
  if (!record.is_object()) throw Error("trajectory record is not an object");
  if (!record.contains("v") || record.at("v") != kFormatVersion) {
    throw Error("unsupported trajectory format version");
  }
  Trajectory trajectory;
  trajectory.observations = record.at("obs").get<std::vector<Vector>>();
  trajectory.actions = record.at("acts").get<std::vector<std::size_t>>();
  const Json& rews = record.at("rews");
  if (!rews.is_null()) trajectory.rewards = rews.get<std::vector<double>>();
  trajectory.terminal = record.at("terminal").get<bool>();
  validate(trajectory);
  return trajectory;
}

void save_trajectories(std::span<const Trajectory> trajectories,
                       const std::filesystem::path& path) {
  std::vector<Json> records;
  records.reserve(trajectories.size());
  for (const auto& t : trajectories) records.push_back(to_json(t));
  write_json_lines(records, path);
}

std::vector<Trajectory> load_trajectories(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<Trajectory> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(trajectory_from_json(Json::parse(line)));
    } catch (const std::exception& e) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Json> read_json_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<Json> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const std::exception& e) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_json_lines(const std::vector<Json>& records, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& r : records) out << r.dump() << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace mimic
