#pragma once

// Categorical policies over discrete actions.

#include <functional>
#include <memory>
#include <span>
#include <string>

#include "mimic/core.hpp"
#include "mimic/nets.hpp"
#include "mimic/serialization.hpp"

namespace mimic {

class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::size_t obs_dim() const = 0;
  virtual std::size_t action_count() const = 0;
  /// Writes pi(. | obs, t) into out (size action_count()).
  virtual void action_probs(std::span<const double> obs, std::size_t t,
                            std::span<double> out) const = 0;
  virtual double log_prob(std::span<const double> obs, std::size_t t, std::size_t action) const;
  /// Checkpoint record; throws for policies that cannot be persisted.
  virtual Json to_json() const;

  Vector action_probs(std::span<const double> obs, std::size_t t) const;
  std::size_t sample(std::span<const double> obs, std::size_t t, Rng& rng) const;
  /// Most likely action, lowest index on ties.
  std::size_t greedy(std::span<const double> obs, std::size_t t) const;
};

/// Index of the hot entry of a one-hot observation. Throws if obs is not one-hot.
std::size_t one_hot_index(std::span<const double> obs);
Vector one_hot(std::size_t index, std::size_t size);

class UniformPolicy final : public Policy {
 public:
  UniformPolicy(std::size_t obs_dim, std::size_t action_count)
      : obs_dim_(obs_dim), action_count_(action_count) {}
  std::size_t obs_dim() const override { return obs_dim_; }
  std::size_t action_count() const override { return action_count_; }
  void action_probs(std::span<const double> obs, std::size_t t,
                    std::span<double> out) const override;
  Json to_json() const override;

 private:
  std::size_t obs_dim_;
  std::size_t action_count_;
};

/// Time-dependent table pi_t(a | s) over one-hot observations.
class TabularPolicy final : public Policy {
 public:
  TabularPolicy() = default;
  /// Uniform over actions at every (t, s).
  TabularPolicy(std::size_t horizon, std::size_t states, std::size_t actions);
  TabularPolicy(std::size_t horizon, std::size_t states, std::size_t actions,
                std::vector<double> probs);

  std::size_t horizon() const { return horizon_; }
  std::size_t state_count() const { return states_; }
  std::size_t obs_dim() const override { return states_; }
  std::size_t action_count() const override { return actions_; }

  double prob(std::size_t t, std::size_t s, std::size_t a) const {
    return probs_[(t * states_ + s) * actions_ + a];
  }
  std::span<const double> row(std::size_t t, std::size_t s) const {
    return {probs_.data() + (t * states_ + s) * actions_, actions_};
  }
  std::span<double> row(std::size_t t, std::size_t s) {
    return {probs_.data() + (t * states_ + s) * actions_, actions_};
  }
  const std::vector<double>& table() const { return probs_; }

  void action_probs(std::span<const double> obs, std::size_t t,
                    std::span<double> out) const override;
  Json to_json() const override;

  /// Throws unless every row is a simplex point within tol.
  void validate(double tol = 1e-12) const;

 private:
  std::size_t horizon_ = 0;
  std::size_t states_ = 0;
  std::size_t actions_ = 0;
  std::vector<double> probs_;
};

/// Stationary policy given by an MLP with a log-softmax head.
class MlpPolicy final : public Policy {
 public:
  explicit MlpPolicy(Mlp net);

  std::size_t obs_dim() const override { return net_.input_dim(); }
  std::size_t action_count() const override { return net_.output_dim(); }
  void action_probs(std::span<const double> obs, std::size_t t,
                    std::span<double> out) const override;
  double log_prob(std::span<const double> obs, std::size_t t, std::size_t action) const override;
  Json to_json() const override;

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }

 private:
  Mlp net_;
};

/// Per-step mixture: beta * first + (1 - beta) * second.
class MixturePolicy final : public Policy {
 public:
  MixturePolicy(const Policy& first, const Policy& second, double beta);
  std::size_t obs_dim() const override { return first_.obs_dim(); }
  std::size_t action_count() const override { return first_.action_count(); }
  void action_probs(std::span<const double> obs, std::size_t t,
                    std::span<double> out) const override;

 private:
  const Policy& first_;
  const Policy& second_;
  double beta_;
};

/// Acts greedily with respect to another policy (lowest index on ties).
class GreedyPolicy final : public Policy {
 public:
  explicit GreedyPolicy(const Policy& base) : base_(base) {}
  std::size_t obs_dim() const override { return base_.obs_dim(); }
  std::size_t action_count() const override { return base_.action_count(); }
  void action_probs(std::span<const double> obs, std::size_t t,
                    std::span<double> out) const override;

 private:
  const Policy& base_;
};

/// Deterministic policy from a pure function (obs, t) -> action.
class FunctionPolicy final : public Policy {
 public:
  using Fn = std::function<std::size_t(std::span<const double>, std::size_t)>;
  FunctionPolicy(std::size_t obs_dim, std::size_t action_count, Fn fn, std::string name);
  std::size_t obs_dim() const override { return obs_dim_; }
  std::size_t action_count() const override { return action_count_; }
  void action_probs(std::span<const double> obs, std::size_t t,
                    std::span<double> out) const override;
  Json to_json() const override;

 private:
  std::size_t obs_dim_;
  std::size_t action_count_;
  Fn fn_;
  std::string name_;
};

/// Tabular snapshot of any policy on one-hot observations.
TabularPolicy tabulate(const Policy& policy, std::size_t horizon, std::size_t states);

/// Restores a checkpoint written by Policy::to_json (uniform, tabular or mlp).
std::unique_ptr<Policy> policy_from_json(const Json& record);

}  // namespace mimic
