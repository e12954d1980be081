#pragma once

// Policy-optimization backends behind one contract: exact tabular solvers and a
// sampling-based REINFORCE learner.

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "mimic/envs.hpp"
#include "mimic/nets.hpp"
#include "mimic/policy.hpp"

namespace mimic {

// ---------------------------------------------------------------------------
// Exact tabular quantities

struct SoftValueResult {
  std::vector<double> values;  // (H + 1) x S
  std::vector<double> q;       // H x S x A
  TabularPolicy policy;

  double value(std::size_t t, std::size_t s) const {
    return values[t * policy.state_count() + s];
  }
};

/// Maximum-causal-entropy backup: Q_t = r + P V_{t+1}, V_t = T logsumexp(Q_t / T),
/// pi_t = exp((Q_t - V_t) / T), V_H = 0. reward is S x A.
SoftValueResult soft_value_iteration(const TabularMDP& mdp, std::span<const double> reward,
                                     double temperature = 1.0);

/// Per-timestep state distribution D[t][s] under a policy.
struct OccupancyMeasure {
  std::size_t horizon = 0;
  std::size_t states = 0;
  std::vector<double> d;  // H x S

  double at(std::size_t t, std::size_t s) const { return d[t * states + s]; }
  /// sum_t D[t][s]
  Vector state_totals() const;
};

OccupancyMeasure occupancy(const TabularMDP& mdp, const TabularPolicy& policy);

/// Expected undiscounted return of a tabular policy.
double expected_return(const TabularMDP& mdp, const TabularPolicy& policy);

// ---------------------------------------------------------------------------
// Reward sources

struct StepView {
  std::span<const double> obs;
  std::size_t t = 0;
  std::size_t action = 0;
  std::span<const double> next_obs;
  double log_prob = 0.0;  // log pi(action | obs) under the policy being trained
};

class RewardSource {
 public:
  virtual ~RewardSource() = default;
  virtual double reward(const StepView& step) const = 0;
  virtual bool uses_next_obs() const { return false; }
  virtual bool uses_log_prob() const { return false; }
  /// True only for EnvReward: the optimizer may then read the environment's reward channel.
  virtual bool is_ground_truth() const { return false; }
};

/// Marker for "optimize the true environment reward".
class EnvReward final : public RewardSource {
 public:
  double reward(const StepView&) const override;
  bool is_ground_truth() const override { return true; }
};

class FunctionReward final : public RewardSource {
 public:
  using Fn = std::function<double(const StepView&)>;
  explicit FunctionReward(Fn fn, bool uses_next_obs = false, bool uses_log_prob = false)
      : fn_(std::move(fn)), next_(uses_next_obs), log_prob_(uses_log_prob) {}
  double reward(const StepView& step) const override { return fn_(step); }
  bool uses_next_obs() const override { return next_; }
  bool uses_log_prob() const override { return log_prob_; }

 private:
  Fn fn_;
  bool next_;
  bool log_prob_;
};

// ---------------------------------------------------------------------------
// Optimizer contract

class PolicyOptimizer {
 public:
  virtual ~PolicyOptimizer() = default;
  /// Runs step_budget improvement steps against reward. Learned rewards are the only
  /// reward channel unless reward.is_ground_truth().
  virtual void improve(const RewardSource& reward, std::size_t step_budget) = 0;
  virtual const Policy& policy() const = 0;
  /// Resets to the initial (untrained) policy.
  virtual void reset() = 0;
};

struct TabularOptimizerConfig {
  /// Entropy temperature; 0 gives greedy policies.
  double temperature = 0.01;
  /// Mirror-descent step size. 0 selects the exact solve (one soft backup).
  double step_size = 0.0;
};

/// Exact tabular backend using the known dynamics. With step_size > 0 each step is
/// an entropy-regularized policy mirror-descent update:
///   log pi' = (1 - eta * T) log pi + eta * Q^pi + const.
class TabularOptimizer final : public PolicyOptimizer {
 public:
  TabularOptimizer(std::shared_ptr<const TabularMDP> mdp, TabularOptimizerConfig config);

  void improve(const RewardSource& reward, std::size_t step_budget) override;
  const Policy& policy() const override { return policy_; }
  void reset() override;

  const TabularPolicy& tabular_policy() const { return policy_; }
  const TabularMDP& mdp() const { return *mdp_; }
  const TabularOptimizerConfig& config() const { return config_; }

  /// reward evaluated on every (s, a), expectation over next states when needed.
  /// Per-step (H x S x A) if the source reads log-probs, else S x A.
  std::vector<double> reward_table(const RewardSource& reward) const;

 private:
  std::shared_ptr<const TabularMDP> mdp_;
  TabularOptimizerConfig config_;
  TabularPolicy policy_;
};

struct ReinforceConfig {
  std::size_t batch_episodes = 16;
  double lr = 1e-3;
  double entropy_coef = 0.01;
  std::vector<std::size_t> hidden = kDefaultHidden;
  /// Global-norm gradient clipping; 0 disables.
  double clip_norm = 0.0;
};

/// One REINFORCE step on -sum_t log pi(a_t|s_t) (G - b) - entropy bonus, with b the
/// batch mean return. Returns the pre-update mean return under reward.
double reinforce_update(Mlp& net, AdamState& adam, const Env& env, const RewardSource& reward,
                        const ReinforceConfig& config, const SeedStream& seeds);

class ReinforceOptimizer final : public PolicyOptimizer {
 public:
  ReinforceOptimizer(const Env& env, ReinforceConfig config, SeedStream seeds);

  void improve(const RewardSource& reward, std::size_t step_budget) override;
  const Policy& policy() const override { return policy_; }
  void reset() override;

  MlpPolicy& mlp_policy() { return policy_; }
  double last_mean_return() const { return last_mean_return_; }

 private:
  std::unique_ptr<Env> env_;
  ReinforceConfig config_;
  SeedStream seeds_;
  MlpPolicy policy_;
  AdamState adam_;
  std::size_t updates_ = 0;
  double last_mean_return_ = 0.0;
};

MlpPolicy make_mlp_policy(std::size_t obs_dim, std::size_t actions,
                          const std::vector<std::size_t>& hidden, const SeedStream& seeds);

/// Tabular backend for tabular envs, REINFORCE otherwise.
std::unique_ptr<PolicyOptimizer> make_default_optimizer(const Env& env,
                                                        TabularOptimizerConfig tabular,
                                                        ReinforceConfig reinforce,
                                                        const SeedStream& seeds);

}  // namespace mimic
