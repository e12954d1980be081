#pragma once

// Maximum causal entropy IRL on tabular MDPs with a linear state reward
// r(s) = theta . phi(s).

#include <optional>
#include <vector>

#include "mimic/algorithm.hpp"
#include "mimic/envs.hpp"
#include "mimic/policy_opt.hpp"

namespace mimic {

struct LinearReward {
  Vector weights;

  double at(const TabularMDP& mdp, std::size_t s) const;
  /// S x A table with the state reward broadcast across actions.
  std::vector<double> table(const TabularMDP& mdp) const;
};

/// sum_t phi(s_t), averaged over trajectories (or taken in expectation).
struct FeatureExpectations {
  Vector values;
};

FeatureExpectations expert_feature_expectations(std::span<const Trajectory> demos,
                                                const TabularMDP& mdp);
FeatureExpectations occupancy_feature_expectations(const TabularMDP& mdp,
                                                   const OccupancyMeasure& occ);

/// log Z(theta) = sum_s D0(s) V_0(s) under the soft backup of theta . phi.
double mce_log_partition(const TabularMDP& mdp, const LinearReward& reward);
/// theta . f_expert - log Z(theta); its gradient is f_expert - f_learner.
double mce_objective(const TabularMDP& mdp, const LinearReward& reward,
                     const FeatureExpectations& expert);
/// f_expert - f_learner, with f_learner from occupancy(soft_value_iteration(theta)).
Vector mce_gradient(const TabularMDP& mdp, const LinearReward& reward,
                    const FeatureExpectations& expert);

struct MceConfig {
  double lr = 0.05;
  std::size_t max_iters = 20000;
  double tol = 1e-3;
};

struct MceFit {
  LinearReward reward;
  TabularPolicy policy;
  std::vector<double> gap_history;  // L-inf feature gap per iterate
  double best_gap = 0.0;
  std::size_t iterations = 0;
};

/// Gradient ascent on theta. Keeps the iterate with the smallest L-inf gap and
/// stops at tol or after the iteration budget; a gap above 10x the initial gap
/// raises an Error suggesting a smaller learning rate.
class MceIrl final : public ImitationAlgorithm {
 public:
  MceIrl(std::shared_ptr<const TabularMDP> mdp, FeatureExpectations expert, MceConfig config);
  MceIrl(std::shared_ptr<const TabularMDP> mdp, std::span<const Trajectory> demos,
         MceConfig config);

  /// Runs up to iterations gradient steps (fewer once the gap is below tol).
  void train(std::size_t iterations) override;
  const Policy& current_policy() const override { return best_policy_; }

  MceFit result() const;
  bool converged() const { return best_gap_ <= config_.tol; }
  const FeatureExpectations& expert() const { return expert_; }

 private:
  double evaluate_current();

  std::shared_ptr<const TabularMDP> mdp_;
  FeatureExpectations expert_;
  MceConfig config_;
  LinearReward theta_;
  Vector grad_;
  LinearReward best_theta_;
  TabularPolicy best_policy_;
  double best_gap_ = 0.0;
  double initial_gap_ = 0.0;
  std::vector<double> history_;
};

MceFit mce_irl_fit(std::shared_ptr<const TabularMDP> mdp, std::span<const Trajectory> demos,
                   MceConfig config);
MceFit mce_irl_fit(std::shared_ptr<const TabularMDP> mdp, const FeatureExpectations& expert,
                   MceConfig config);

}  // namespace mimic
