#pragma once

// Fixed-horizon environments, the exact tabular model, oracle experts and rollouts.

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mimic/core.hpp"
#include "mimic/policy.hpp"

namespace mimic {

/// Explicit finite-horizon MDP. All tables are dense and row-major.
class TabularMDP {
 public:
  /// Validates on construction. Empty features means one-hot features (d = S).
  TabularMDP(std::size_t states, std::size_t actions, std::size_t horizon,
             std::vector<double> transitions, std::vector<double> reward,
             std::vector<double> initial, std::vector<double> features = {},
             std::size_t feature_dim = 0);

  std::size_t state_count() const { return states_; }
  std::size_t action_count() const { return actions_; }
  std::size_t horizon() const { return horizon_; }
  std::size_t feature_dim() const { return feature_dim_; }

  double transition(std::size_t s, std::size_t a, std::size_t next) const {
    return transitions_[(s * actions_ + a) * states_ + next];
  }
  std::span<const double> next_distribution(std::size_t s, std::size_t a) const {
    return {transitions_.data() + (s * actions_ + a) * states_, states_};
  }
  double reward(std::size_t s, std::size_t a) const { return reward_[s * actions_ + a]; }
  std::span<const double> features(std::size_t s) const {
    return {features_.data() + s * feature_dim_, feature_dim_};
  }

  const std::vector<double>& transitions() const { return transitions_; }
  const std::vector<double>& rewards() const { return reward_; }
  const std::vector<double>& initial_distribution() const { return initial_; }
  const std::vector<double>& feature_table() const { return features_; }

  /// Same dynamics, different reward table (S x A).
  TabularMDP with_reward(std::vector<double> reward) const;

  bool operator==(const TabularMDP&) const = default;

 private:
  void validate() const;

  std::size_t states_;
  std::size_t actions_;
  std::size_t horizon_;
  std::size_t feature_dim_;
  std::vector<double> transitions_;
  std::vector<double> reward_;
  std::vector<double> initial_;
  std::vector<double> features_;
};

struct StepResult {
  Vector observation;
  double reward = 0.0;
};

/// Episode handle: reset() then exactly horizon() calls to step().
class Env {
 public:
  virtual ~Env() = default;

  virtual std::string name() const = 0;
  virtual std::size_t obs_dim() const = 0;
  virtual std::size_t action_count() const = 0;
  virtual std::size_t horizon() const = 0;
  virtual std::unique_ptr<Env> clone() const = 0;
  /// The exact model, or nullptr for procedural environments.
  virtual const TabularMDP* tabular() const { return nullptr; }
  /// Ground-truth reward of a transition, computed from observations alone.
  virtual double true_reward(std::span<const double> obs, std::size_t action) const = 0;

  Vector reset(Rng& rng);
  StepResult step(std::size_t action, Rng& rng);
  std::size_t elapsed() const { return elapsed_; }
  bool done() const { return started_ && elapsed_ >= horizon(); }

 protected:
  virtual Vector do_reset(Rng& rng) = 0;
  virtual StepResult do_step(std::size_t action, Rng& rng) = 0;

 private:
  std::size_t elapsed_ = 0;
  bool started_ = false;
};

class TabularEnv final : public Env {
 public:
  TabularEnv(std::shared_ptr<const TabularMDP> mdp, std::string name);

  std::string name() const override { return name_; }
  std::size_t obs_dim() const override { return mdp_->state_count(); }
  std::size_t action_count() const override { return mdp_->action_count(); }
  std::size_t horizon() const override { return mdp_->horizon(); }
  std::unique_ptr<Env> clone() const override;
  const TabularMDP* tabular() const override { return mdp_.get(); }
  double true_reward(std::span<const double> obs, std::size_t action) const override;

  std::size_t state() const { return state_; }
  std::shared_ptr<const TabularMDP> model() const { return mdp_; }

 protected:
  Vector do_reset(Rng& rng) override;
  StepResult do_step(std::size_t action, Rng& rng) override;

 private:
  std::shared_ptr<const TabularMDP> mdp_;
  std::string name_;
  std::size_t state_ = 0;
};

/// 1-D point on [-1, 1]; observation (position, last velocity); actions left/stay/right.
class LineWorld final : public Env {
 public:
  static constexpr double kTarget = 0.7;
  static constexpr double kSpeed = 0.2;
  static constexpr double kNoise = 0.05;
  static constexpr double kStartSpread = 0.1;
  static constexpr std::size_t kHorizon = 30;

  std::string name() const override { return "lineworld"; }
  std::size_t obs_dim() const override { return 2; }
  std::size_t action_count() const override { return 3; }
  std::size_t horizon() const override { return kHorizon; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<LineWorld>(*this); }
  double true_reward(std::span<const double> obs, std::size_t action) const override;

 protected:
  Vector do_reset(Rng& rng) override;
  StepResult do_step(std::size_t action, Rng& rng) override;

 private:
  double position_ = 0.0;
  double velocity_ = 0.0;
};

/// Registry names accepted by make_env.
const std::vector<std::string>& env_registry();

/// Throws Error listing the registry for unknown names.
std::unique_ptr<Env> make_env(std::string_view name, const SeedStream& seeds);

TabularMDP make_gridworld();
TabularMDP make_cliffworld();
/// Two states; action 0 stays (r=0), action 1 moves to the absorbing rewarding state.
TabularMDP make_two_state_mdp(std::size_t horizon = 2);
/// One state, H=1, one action per reward entry.
TabularMDP make_bandit(std::vector<double> rewards);
/// Dense random dynamics (Dirichlet(1) rows), uniform rewards in [0, 1), random start.
TabularMDP make_random_mdp(std::size_t states, std::size_t actions, std::size_t horizon,
                           Rng& rng);

struct ValueIterationResult {
  std::vector<double> values;  // (H + 1) x S, values[H] = 0
  TabularPolicy policy;        // greedy, lowest action index on ties

  double value(std::size_t t, std::size_t s) const;
};

/// Finite-horizon undiscounted Bellman optimality backup.
ValueIterationResult value_iteration(const TabularMDP& mdp);

struct ExpertPolicy {
  std::shared_ptr<const Policy> policy;
  std::string provenance;

  /// Expert label for a visited observation at step t.
  std::size_t act(std::span<const double> obs, std::size_t t) const {
    return policy->greedy(obs, t);
  }
};

/// Value-iteration oracle for tabular envs; proportional controller for lineworld.
ExpertPolicy make_expert(const Env& env);

/// Exactly n_episodes full-horizon episodes. Episode i draws from
/// derive_stream(seeds, "episode", i), so output is independent of thread count.
std::vector<Trajectory> rollout(const Policy& policy, const Env& env, std::size_t n_episodes,
                                const SeedStream& seeds);

/// Mean ground-truth return over rollouts.
double mean_return(std::span<const Trajectory> trajectories);

}  // namespace mimic
