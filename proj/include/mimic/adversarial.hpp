#pragma once

// Adversarial imitation. GAIL and AIRL share one training loop and differ only in
// the discriminator's logit and the reward extracted from it.

#include <memory>
#include <string>
#include <vector>

#include "mimic/algorithm.hpp"
#include "mimic/envs.hpp"
#include "mimic/nets.hpp"
#include "mimic/policy_opt.hpp"

namespace mimic {

/// -log(1 - sigmoid(z)), computed as softplus(z).
double gail_reward(double logit);
/// AIRL training reward: the logit f(s, a) - log pi(a | s).
double airl_reward(double f, double log_prob);

/// Scores (s, a) transitions; logit > 0 means "expert". The network reads the
/// observation concatenated with a one-hot action and has a scalar output.
class Discriminator {
 public:
  Discriminator(std::size_t obs_dim, std::size_t action_count,
                const std::vector<std::size_t>& hidden, const SeedStream& seeds);
  virtual ~Discriminator() = default;

  /// Raw network output for (obs, action).
  double net_output(std::span<const double> obs, std::size_t action) const;
  double logit(const StepView& step) const { return net_output(step.obs, step.action) + offset(step); }
  /// Reward handed to the generator.
  virtual double reward(const StepView& step) const = 0;
  virtual bool uses_log_prob() const = 0;
  virtual std::string kind() const = 0;
  virtual std::unique_ptr<Discriminator> clone() const = 0;

  /// Adds d(loss)/d(params) for d(loss)/d(logit) = dz at this step.
  void backward(const StepView& step, double dz, GradBuffer& grads) const;

  Vector input(std::span<const double> obs, std::size_t action) const;
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  std::size_t obs_dim() const { return obs_dim_; }
  std::size_t action_count() const { return action_count_; }

 protected:
  /// Term added to the network output; never depends on the parameters.
  virtual double offset(const StepView& step) const = 0;

 private:
  std::size_t obs_dim_;
  std::size_t action_count_;
  Mlp net_;
};

class GailDiscriminator final : public Discriminator {
 public:
  using Discriminator::Discriminator;
  double reward(const StepView& step) const override { return gail_reward(logit(step)); }
  bool uses_log_prob() const override { return false; }
  std::string kind() const override { return "gail"; }
  std::unique_ptr<Discriminator> clone() const override {
    return std::make_unique<GailDiscriminator>(*this);
  }

 protected:
  double offset(const StepView&) const override { return 0.0; }
};

/// The network is f(s, a); the logit is f(s, a) - log pi(a | s).
class AirlDiscriminator final : public Discriminator {
 public:
  using Discriminator::Discriminator;
  double reward(const StepView& step) const override {
    return airl_reward(net_output(step.obs, step.action), step.log_prob);
  }
  bool uses_log_prob() const override { return true; }
  std::string kind() const override { return "airl"; }
  std::unique_ptr<Discriminator> clone() const override {
    return std::make_unique<AirlDiscriminator>(*this);
  }

 protected:
  double offset(const StepView& step) const override { return -step.log_prob; }
};

/// Generator-facing reward backed by a live discriminator.
class DiscriminatorReward final : public RewardSource {
 public:
  explicit DiscriminatorReward(const Discriminator& disc) : disc_(disc) {}
  double reward(const StepView& step) const override { return disc_.reward(step); }
  bool uses_log_prob() const override { return disc_.uses_log_prob(); }

 private:
  const Discriminator& disc_;
};

/// Frozen AIRL reward f(s, a); reads only its own copy of the network.
class AirlRecoveredReward final : public RewardSource {
 public:
  AirlRecoveredReward(Mlp f, std::size_t obs_dim, std::size_t action_count);
  double reward(const StepView& step) const override;
  const Mlp& net() const { return f_; }

 private:
  Mlp f_;
  std::size_t obs_dim_;
  std::size_t action_count_;
};

struct DiscStats {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Mean binary cross-entropy (expert = 1, generator = 0) and accuracy at D = 0.5.
DiscStats disc_evaluate(const Discriminator& disc, std::span<const StepView> expert,
                        std::span<const StepView> generator);
/// One Adam step on the mean BCE over the concatenated batch; returns post-step stats.
DiscStats disc_update(Discriminator& disc, AdamState& adam, std::span<const StepView> expert,
                      std::span<const StepView> generator);

struct AdversarialConfig {
  std::size_t disc_steps = 2;       // discriminator updates per generator update
  std::size_t disc_batch = 128;     // split evenly between expert and generator samples
  std::size_t gen_episodes = 16;    // generator rollouts collected per iteration
  std::size_t gen_steps = 1;        // optimizer steps per iteration
  double disc_lr = 1e-3;
  std::vector<std::size_t> hidden = kDefaultHidden;
  std::size_t divergence_window = 50;
};

/// Owns transitions and the StepViews into them, with log-probs filled from a policy.
struct ViewBatch {
  TransitionBatch data;
  std::vector<StepView> views;

  ViewBatch() = default;
  ViewBatch(TransitionBatch batch, const Policy& policy);
  ViewBatch(const ViewBatch&) = delete;
  ViewBatch& operator=(const ViewBatch&) = delete;
  // Views point into the per-row heap buffers, which survive a move.
  ViewBatch(ViewBatch&&) = default;
  ViewBatch& operator=(ViewBatch&&) = default;
  void relabel(const Policy& policy);
};

class AdversarialTrainer : public ImitationAlgorithm {
 public:
  /// demos are reward-stripped on entry.
  AdversarialTrainer(const Env& env, std::vector<Trajectory> demos,
                     std::unique_ptr<Discriminator> disc,
                     std::unique_ptr<PolicyOptimizer> generator, AdversarialConfig config,
                     const SeedStream& seeds);

  /// Runs iterations of: collect rollouts, disc_steps discriminator updates,
  /// one generator update against the discriminator reward.
  void train(std::size_t iterations) override;
  const Policy& current_policy() const override { return generator_->policy(); }

  /// Accuracy and loss on fresh balanced batches (new generator rollouts), no update.
  DiscStats fresh_disc_stats(std::size_t batches, const SeedStream& seeds) const;

  const Discriminator& discriminator() const { return *disc_; }
  const std::vector<std::string>& trace() const { return trace_; }
  std::size_t iterations_done() const { return iter_; }

 private:
  std::vector<StepView> sample(const ViewBatch& batch, std::size_t n, Rng& rng) const;

  std::unique_ptr<Env> env_;
  ViewBatch expert_;
  std::unique_ptr<Discriminator> disc_;
  std::unique_ptr<PolicyOptimizer> generator_;
  AdversarialConfig config_;
  SeedStream seeds_;
  AdamState adam_;
  std::vector<std::string> trace_;
  std::size_t iter_ = 0;
  std::size_t saturated_ = 0;
};

class Gail final : public AdversarialTrainer {
 public:
  Gail(const Env& env, std::vector<Trajectory> demos, std::unique_ptr<PolicyOptimizer> generator,
       AdversarialConfig config, const SeedStream& seeds);
};

class Airl final : public AdversarialTrainer {
 public:
  Airl(const Env& env, std::vector<Trajectory> demos, std::unique_ptr<PolicyOptimizer> generator,
       AdversarialConfig config, const SeedStream& seeds);

  /// Snapshot of f; unaffected by later training.
  AirlRecoveredReward recovered_reward() const;
};

}  // namespace mimic
