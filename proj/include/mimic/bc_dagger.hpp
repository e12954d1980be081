#pragma once

// Behavioral cloning and DAgger on a shared supervised core.

#include <memory>
#include <vector>

#include "mimic/algorithm.hpp"
#include "mimic/envs.hpp"
#include "mimic/nets.hpp"

namespace mimic {

struct BcConfig {
  std::vector<std::size_t> hidden = kDefaultHidden;
  double lr = 1e-3;
  std::size_t batch_size = 32;
};

/// Maximum likelihood on (observation, action) pairs. Never touches an environment.
class BcTrainer final : public ImitationAlgorithm {
 public:
  BcTrainer(TransitionBatch demos, std::size_t obs_dim, std::size_t action_count,
            BcConfig config, const SeedStream& seeds);

  /// Runs epochs of shuffled minibatch Adam; returns the final epoch's mean NLL.
  double train_epochs(std::size_t epochs);
  void train(std::size_t epochs) override { train_epochs(epochs); }
  const Policy& current_policy() const override { return policy_; }

  /// Mean -log pi(a | s) over the whole dataset.
  double mean_nll() const;
  const MlpPolicy& policy() const { return policy_; }
  std::size_t epochs_done() const { return epochs_; }
  std::size_t dataset_size() const { return demos_.size(); }

 private:
  TransitionBatch demos_;
  BcConfig config_;
  MlpPolicy policy_;
  AdamState adam_;
  Rng shuffle_rng_;
  std::size_t epochs_ = 0;
  double last_nll_;
};

/// Free-function form of BcTrainer::train_epochs.
double bc_train(BcTrainer& trainer, std::size_t epochs);

struct DaggerConfig {
  std::size_t episodes_per_round = 10;
  std::size_t bc_epochs = 100;
  /// beta_i = beta_decay^i; 1 keeps every round pure-expert.
  double beta_decay = 0.5;
  BcConfig bc;
};

struct DaggerRoundSummary {
  std::size_t round = 0;
  std::size_t dataset_size = 0;
  double beta = 1.0;
  double nll = 0.0;
};

/// Interactive imitation: roll out the per-step expert/learner mixture, label every
/// visited state with the expert, aggregate, retrain BC from scratch.
class DaggerTrainer final : public ImitationAlgorithm {
 public:
  DaggerTrainer(const Env& env, ExpertPolicy expert, DaggerConfig config,
                const SeedStream& seeds);

  DaggerRoundSummary round(std::size_t n_episodes);
  void train(std::size_t rounds) override;
  const Policy& current_policy() const override;

  double beta(std::size_t round) const;
  std::size_t rounds_done() const { return round_; }
  const TransitionBatch& dataset() const { return dataset_; }

 private:
  std::unique_ptr<Env> env_;
  ExpertPolicy expert_;
  DaggerConfig config_;
  SeedStream seeds_;
  MlpPolicy initial_;
  TransitionBatch dataset_;
  std::unique_ptr<BcTrainer> learner_;
  std::size_t round_ = 0;
};

}  // namespace mimic
