#pragma once

// Dense tabular kernels and batched rollouts. Each kernel has a straightforward
// serial reference and an OpenMP version; tests pin them against each other and
// bench/ compares their speed. The omp versions are deterministic regardless of
// thread count: every output element is reduced in a fixed order.

#include <span>
#include <vector>

#include "mimic/envs.hpp"
#include "mimic/policy.hpp"

namespace mimic::kernels {

/// Reward indexed by (t, s, a); either stationary (S x A) or per-step (H x S x A).
struct RewardTable {
  std::span<const double> values;
  bool per_step = false;
  std::size_t states = 0;
  std::size_t actions = 0;

  double at(std::size_t t, std::size_t s, std::size_t a) const {
    return values[((per_step ? t * states : 0) + s) * actions + a];
  }
};

struct BackupResult {
  std::vector<double> q;       // H x S x A
  std::vector<double> values;  // (H + 1) x S
  std::vector<double> policy;  // H x S x A
};

/// temperature > 0: soft backup, V = T * logsumexp(Q / T), pi = exp((Q - V) / T).
/// temperature == 0: hard max with lowest-index tie-break (ties within 1e-12).
using BackupFn = BackupResult (*)(const TabularMDP&, const RewardTable&, double);
/// Q of a fixed policy with entropy bonus: V_t(s) = sum_a pi (Q - coef * log pi).
using EvaluateFn = std::vector<double> (*)(const TabularMDP&, const RewardTable&,
                                           std::span<const double>, double);
/// D[0] = initial; D[t+1][s'] = sum_{s,a} D[t][s] pi_t(a|s) P(s'|s,a). Returns H x S.
using OccupancyFn = std::vector<double> (*)(const TabularMDP&, std::span<const double>);

namespace serial {
BackupResult backup(const TabularMDP& mdp, const RewardTable& reward, double temperature);
std::vector<double> evaluate_q(const TabularMDP& mdp, const RewardTable& reward,
                               std::span<const double> policy, double entropy_coef);
std::vector<double> occupancy(const TabularMDP& mdp, std::span<const double> policy);
std::vector<Trajectory> rollouts(const Policy& policy, const Env& env, std::size_t n_episodes,
                                 const SeedStream& seeds);
}  // namespace serial

namespace omp {
BackupResult backup(const TabularMDP& mdp, const RewardTable& reward, double temperature);
std::vector<double> evaluate_q(const TabularMDP& mdp, const RewardTable& reward,
                               std::span<const double> policy, double entropy_coef);
std::vector<double> occupancy(const TabularMDP& mdp, std::span<const double> policy);
std::vector<Trajectory> rollouts(const Policy& policy, const Env& env, std::size_t n_episodes,
                                 const SeedStream& seeds);
}  // namespace omp

/// Below this many (state, action, next-state) triples the serial kernel is used.
inline constexpr std::size_t kParallelWorkThreshold = 1u << 16;

BackupResult backup(const TabularMDP& mdp, const RewardTable& reward, double temperature);
std::vector<double> evaluate_q(const TabularMDP& mdp, const RewardTable& reward,
                               std::span<const double> policy, double entropy_coef);
std::vector<double> occupancy(const TabularMDP& mdp, std::span<const double> policy);

/// One complete episode driven by rng.
Trajectory run_episode(const Policy& policy, Env& env, Rng& rng);

}  // namespace mimic::kernels
