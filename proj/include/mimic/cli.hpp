#pragma once

// The mimic command line: expert, train, eval, benchmark.
// Exit codes: 0 success, 1 runtime failure, 2 usage or config error.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mimic/eval.hpp"

namespace mimic {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// MIMIC_OUT_DIR if set, else the current directory.
std::filesystem::path default_out_root();

/// Suite file: {"envs": [...], "algorithms": [...]} (cross product) and/or
/// {"entries": [{"algorithm", "env", "hyper", "budget"}]}, plus optional
/// "n_seeds", "eval_episodes", "root_seed", "n_demos".
struct SuiteConfig {
  std::vector<SuiteEntry> entries;
  BenchmarkOptions options;

  static SuiteConfig from_json(const Json& record);
  /// Every registered algorithm on every registered environment.
  static SuiteConfig full();
};

/// Baselines for env, read from <root>/baselines/ when cached, else computed and cached.
Baselines cached_baselines(const std::filesystem::path& root, const std::string& env,
                           std::size_t n_seeds, std::size_t episodes, std::uint64_t root_seed);

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace mimic
