#pragma once

// Run configuration, algorithm factory and the train/evaluate pipeline shared by
// the CLI and the benchmark harness.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "mimic/algorithm.hpp"
#include "mimic/envs.hpp"

namespace mimic {

/// Malformed or unknown configuration; the CLI maps it to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

const std::vector<std::string>& algorithm_registry();

/// Fully materialized hyperparameters for an algorithm on an environment.
Json default_hyper(const std::string& algorithm, const Env& env);
/// Default training budget (epochs, rounds, iterations or optimizer steps).
std::size_t default_budget(const std::string& algorithm, const Env& env);

struct RunConfig {
  std::string env;
  std::string algorithm;
  std::uint64_t seed = 0;
  std::size_t budget = 0;  // 0 selects default_budget
  std::size_t n_demos = 50;
  std::optional<std::string> demos;  // trajectory file; generated from the expert when absent
  std::string out;
  Json hyper = Json::object();

  /// Strict parse: unknown keys and wrong types raise ConfigError naming the key.
  static RunConfig from_json(const Json& record);
  static RunConfig load(const std::filesystem::path& path);
  /// Every default filled in, including budget and all hyperparameters.
  RunConfig resolved() const;
  Json to_json() const;
};

struct TrainedRun {
  std::unique_ptr<Env> env;
  std::unique_ptr<ImitationAlgorithm> algorithm;
  /// Learned reward, when the algorithm produces one (mce_irl, airl, density, drlhp).
  Json reward = nullptr;
};

/// Expert demonstrations for a run: loaded from config.demos or generated with
/// derive_stream(seed, "demos").
std::vector<Trajectory> run_demos(const RunConfig& config, const Env& env);

/// Builds and trains the configured algorithm. The config must be resolved.
TrainedRun train_run(const RunConfig& config);

/// <out>/<algo>-<env>-<seed>
std::filesystem::path run_directory(const RunConfig& config);

/// Trains and writes config.resolved, policy.ckpt and metrics.log. Returns the directory.
std::filesystem::path train_and_save(const RunConfig& config);

Json checkpoint_json(const RunConfig& config, const TrainedRun& run);
/// Loads the "policy" entry of a checkpoint (or a bare policy record).
std::unique_ptr<Policy> load_policy_checkpoint(const std::filesystem::path& path);

}  // namespace mimic
