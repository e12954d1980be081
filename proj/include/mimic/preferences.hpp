#pragma once

// Reward learning from pairwise fragment comparisons (Bradley-Terry model).

#include <filesystem>
#include <memory>
#include <vector>

#include "mimic/algorithm.hpp"
#include "mimic/envs.hpp"
#include "mimic/nets.hpp"
#include "mimic/policy_opt.hpp"

namespace mimic {

struct Fragment {
  std::vector<Vector> observations;  // k + 1
  std::vector<std::size_t> actions;  // k
  std::size_t trajectory = 0;
  std::size_t offset = 0;

  std::size_t length() const { return actions.size(); }
  bool operator==(const Fragment&) const = default;
};

/// label: 1 means a preferred, 0 means b preferred, 0.5 a tie.
struct PreferencePair {
  Fragment a;
  Fragment b;
  double label = 0.5;

  bool operator==(const PreferencePair&) const = default;
};

Fragment slice(const Trajectory& trajectory, std::size_t offset, std::size_t k,
               std::size_t trajectory_id = 0);

/// n_pairs unlabeled pairs; each fragment picks a trajectory and an offset uniformly.
std::vector<PreferencePair> sample_fragments(std::span<const Trajectory> trajectories,
                                             std::size_t k, std::size_t n_pairs,
                                             const SeedStream& seeds);

/// Stand-in for a human: compares true fragment returns. tau = 0 labels by argmax
/// (ties within eps give 0.5); tau > 0 samples a with probability sigmoid(dR / tau).
class SyntheticLabeler {
 public:
  SyntheticLabeler(const Env& env, double tau, const SeedStream& seeds, double eps = 1e-9);

  double true_return(const Fragment& fragment) const;
  /// Labels in place. Each call draws from its own derived stream.
  void label(std::span<PreferencePair> pairs);
  std::size_t queries() const { return queries_; }
  double tau() const { return tau_; }

 private:
  std::unique_ptr<Env> env_;
  double tau_;
  double eps_;
  SeedStream seeds_;
  std::size_t calls_ = 0;
  std::size_t queries_ = 0;
};

/// Per-step reward r(s, a) from an MLP over the observation and a one-hot action.
class RewardModel final : public RewardSource {
 public:
  RewardModel(std::size_t obs_dim, std::size_t action_count,
              const std::vector<std::size_t>& hidden, const SeedStream& seeds);
  explicit RewardModel(Mlp net, std::size_t action_count);

  double reward(const StepView& step) const override;
  double step_reward(std::span<const double> obs, std::size_t action) const;
  double fragment_return(const Fragment& fragment) const;
  /// Adds scale * d(fragment return)/d(params) into grads.
  void accumulate(const Fragment& fragment, double scale, GradBuffer& grads) const;

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  std::size_t obs_dim() const { return net_.input_dim() - action_count_; }
  std::size_t action_count() const { return action_count_; }

 private:
  Vector input(std::span<const double> obs, std::size_t action) const;
  Mlp net_;
  std::size_t action_count_;
};

/// exp(R_a) / (exp(R_a) + exp(R_b)), evaluated as sigmoid(R_a - R_b).
double bradley_terry_prob(double return_a, double return_b);
double bradley_terry_prob(const RewardModel& model, const PreferencePair& pair);

/// Cross-entropy between the label and the Bradley-Terry prediction.
double preference_loss(const RewardModel& model, const PreferencePair& pair);

/// One shuffled epoch of minibatch Adam; returns the mean pre-step batch loss.
double reward_model_update(RewardModel& model, AdamState& adam,
                           std::span<const PreferencePair> pairs, std::size_t batch_size,
                           Rng& rng);

/// Fraction of non-tie pairs whose label the model predicts (P > 0.5 for label 1).
/// Returns NaN if every pair is a tie.
double preference_accuracy(const RewardModel& model, std::span<const PreferencePair> pairs);

struct DrlhpConfig {
  std::size_t pairs_per_round = 50;
  std::size_t fragment_length = 5;
  std::size_t episodes_per_round = 16;
  std::size_t model_epochs = 20;
  std::size_t gen_steps = 1;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  double holdout_fraction = 0.2;
  std::vector<std::size_t> hidden = kDefaultHidden;
};

/// Outer loop per round: roll out the current policy, sample and label pairs,
/// fit the reward model, improve the policy against the model.
class DrlhpTrainer final : public ImitationAlgorithm {
 public:
  DrlhpTrainer(const Env& env, SyntheticLabeler labeler, std::unique_ptr<PolicyOptimizer> optimizer,
               DrlhpConfig config, const SeedStream& seeds);

  void train(std::size_t rounds) override;
  const Policy& current_policy() const override { return optimizer_->policy(); }

  const RewardModel& reward_model() const { return model_; }
  std::size_t queries() const { return labeler_.queries(); }
  const std::vector<PreferencePair>& train_pairs() const { return train_; }
  const std::vector<PreferencePair>& heldout_pairs() const { return heldout_; }
  double heldout_accuracy() const { return preference_accuracy(model_, heldout_); }

 private:
  std::unique_ptr<Env> env_;
  SyntheticLabeler labeler_;
  std::unique_ptr<PolicyOptimizer> optimizer_;
  DrlhpConfig config_;
  SeedStream seeds_;
  RewardModel model_;
  AdamState adam_;
  Rng shuffle_rng_;
  std::vector<PreferencePair> train_;
  std::vector<PreferencePair> heldout_;
  std::size_t round_ = 0;
};

Json to_json(const Fragment& fragment);
Fragment fragment_from_json(const Json& record);
Json to_json(const PreferencePair& pair);
PreferencePair preference_from_json(const Json& record);
void save_preferences(std::span<const PreferencePair> pairs, const std::filesystem::path& path);
std::vector<PreferencePair> load_preferences(const std::filesystem::path& path);

}  // namespace mimic
