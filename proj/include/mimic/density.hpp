#pragma once

// Density-estimation baseline: reward is the log-density of expert data.

#include <memory>
#include <optional>
#include <vector>

#include "mimic/algorithm.hpp"
#include "mimic/envs.hpp"
#include "mimic/policy_opt.hpp"

namespace mimic {

enum class DensityMode { State, StateAction };
enum class DensityEstimator { Histogram, Kde };

inline constexpr double kDensityFloor = -20.0;

struct DensityConfig {
  /// Unset picks state for tabular data and state-action for continuous data.
  std::optional<DensityMode> mode;
  double alpha = 1.0;       // Laplace smoothing (histogram)
  double bandwidth = 0.1;   // KDE bandwidth
  bool scott = false;       // Scott's rule overrides bandwidth
  double floor = kDensityFloor;
};

/// Fitted log-density reward; immutable after construction.
class DensityReward final : public RewardSource {
 public:
  double reward(const StepView& step) const override;

  /// Log-density of an observation (and action in state-action mode), clipped at the floor.
  double log_density(std::span<const double> obs, std::size_t action) const;

  DensityMode mode() const { return mode_; }
  DensityEstimator estimator() const { return estimator_; }
  double floor() const { return floor_; }
  double bandwidth() const { return bandwidth_; }
  /// Histogram counts (per state, or per state-action pair).
  const std::vector<double>& counts() const { return counts_; }

  friend DensityReward density_fit(std::span<const Trajectory> demos, std::size_t action_count,
                                   const DensityConfig& config);

 private:
  DensityMode mode_ = DensityMode::State;
  DensityEstimator estimator_ = DensityEstimator::Histogram;
  double floor_ = kDensityFloor;
  std::size_t action_count_ = 0;
  // Histogram
  std::size_t bins_ = 0;
  double alpha_ = 1.0;
  double total_ = 0.0;
  std::vector<double> counts_;
  // KDE, points bucketed by action in state-action mode (one bucket otherwise)
  double bandwidth_ = 0.0;
  std::size_t dim_ = 0;
  std::size_t n_points_ = 0;
  std::vector<std::vector<Vector>> points_;
};

/// Histogram over one-hot observations, Gaussian KDE over continuous ones. Every
/// visited observation of every demo (t < T) is one sample.
DensityReward density_fit(std::span<const Trajectory> demos, std::size_t action_count,
                          const DensityConfig& config = {});

/// Optimizes a policy against a fitted density reward; the environment reward is never read.
class DensityIrl final : public ImitationAlgorithm {
 public:
  DensityIrl(std::span<const Trajectory> demos, std::size_t action_count, DensityConfig config,
             std::unique_ptr<PolicyOptimizer> optimizer);

  void train(std::size_t budget) override;
  const Policy& current_policy() const override { return optimizer_->policy(); }
  const DensityReward& reward() const { return reward_; }

 private:
  DensityReward reward_;
  std::unique_ptr<PolicyOptimizer> optimizer_;
  std::size_t steps_ = 0;
};

}  // namespace mimic
