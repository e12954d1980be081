#pragma once

// Evaluation statistics and the benchmark harness.
//
// Each (algorithm, environment) cell is trained with n seeds; every seed is
// evaluated on 50 fresh episodes of ground-truth return. The per-seed means are
// summarized by a 95% Student-t interval and by the normalized return
// (mean - random) / (expert - random).

#include <filesystem>
#include <string>
#include <vector>

#include "mimic/envs.hpp"
#include "mimic/serialization.hpp"

namespace mimic {

inline constexpr std::size_t kEvalEpisodes = 50;
inline constexpr std::size_t kDefaultSeeds = 5;

/// Two-sided 97.5% quantile of Student's t with df degrees of freedom. Embedded
/// table for df <= 30 (4 decimals), Cornish-Fisher expansion beyond.
double t_quantile_975(std::size_t df);

struct ConfidenceInterval {
  double mean = 0.0;
  double half_width = 0.0;
};

/// Sample mean and t_{n-1, 0.975} * s / sqrt(n). Only level 0.95 is supported.
ConfidenceInterval t_confidence_interval(std::span<const double> per_seed_means,
                                         double level = 0.95);

/// (mean - random) / (expert - random); throws when expert == random.
double normalized_return(double mean, double random_mean, double expert_mean);

struct EvalStats {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double normalized = 0.0;
};

EvalStats summarize(std::span<const double> per_seed_means, double random_mean,
                    double expert_mean);

/// Sample draws actions from the policy; Greedy takes its most likely action.
/// Learned policies are reported greedily; the random baseline always samples.
enum class EvalMode { Sample, Greedy };

/// Mean ground-truth return of a policy over fresh episodes.
double evaluate_policy(const Policy& policy, const Env& env, std::size_t episodes,
                       const SeedStream& seeds, EvalMode mode = EvalMode::Sample);

/// Per-seed mean returns of the uniform-random and expert policies. Seed i
/// evaluates with derive_stream(SeedStream(root_seed + i), "eval").
struct Baselines {
  std::vector<double> random_per_seed;
  std::vector<double> expert_per_seed;
  double random_mean = 0.0;
  double expert_mean = 0.0;

  double normalize(double mean) const { return normalized_return(mean, random_mean, expert_mean); }
};

Baselines compute_baselines(const Env& env, std::size_t n_seeds, std::size_t episodes,
                            std::uint64_t root_seed = 0);
Json to_json(const Baselines& baselines);
Baselines baselines_from_json(const Json& record);

struct BenchmarkCell {
  std::string algorithm;
  std::string env;
  std::vector<double> per_seed_means;
  EvalStats stats;
  std::string error;  // nonempty when training failed for this cell

  bool ok() const { return error.empty(); }
};

struct SuiteEntry {
  std::string algorithm;
  std::string env;
  Json hyper = Json::object();
  std::size_t budget = 0;  // 0 selects the algorithm's default
};

struct BenchmarkOptions {
  std::size_t n_seeds = kDefaultSeeds;
  std::size_t eval_episodes = kEvalEpisodes;
  std::uint64_t root_seed = 0;
  std::size_t n_demos = 50;
};

/// Trains and evaluates every entry; seed i of a cell is run seed root_seed + i.
/// Random and Expert rows come first for each env. Cells and seeds run in parallel
/// and are merged by (cell, seed) index.
std::vector<BenchmarkCell> run_benchmark(const std::vector<SuiteEntry>& suite,
                                         const BenchmarkOptions& options);

/// algo,env,seed_count,mean_return,ci_half_width,normalized_mean,per_seed_means
std::string benchmark_csv(const std::vector<BenchmarkCell>& cells);
/// Algorithms as rows, environments as columns, "mean ± half-width" cells.
std::string benchmark_table(const std::vector<BenchmarkCell>& cells);

}  // namespace mimic
