#include "mimic/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mimic {

namespace {

bool is_one_hot(std::span<const double> obs) {
  std::size_t hot = 0;
  for (double x : obs) {
    if (x == 1.0) {
      ++hot;
    } else if (x != 0.0) {
      return false;
    }
  }
  return hot == 1;
}

double scott_bandwidth(const std::vector<Vector>& points) {
  const std::size_t n = points.size(), d = points.front().size();
  if (n < 2) throw Error("Scott's rule needs at least two samples");
  double sigma = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    double mean = 0.0;
    for (const auto& p : points) mean += p[k];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (const auto& p : points) ss += (p[k] - mean) * (p[k] - mean);
    sigma += std::sqrt(ss / static_cast<double>(n - 1));
  }
  sigma /= static_cast<double>(d);
  return sigma * std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(d) + 4.0));
}

}  // namespace

DensityReward density_fit(std::span<const Trajectory> demos, std::size_t action_count,
                          const DensityConfig& config) {
  if (demos.empty()) throw Error("density fit needs at least one demonstration");
  if (action_count == 0) throw Error("density fit needs a positive action count");
  if (config.alpha < 0.0) throw Error("Laplace alpha must be non-negative");

  std::vector<Vector> obs;
  std::vector<std::size_t> acts;
  for (const auto& traj : demos) {
    validate(traj, action_count);
    for (std::size_t t = 0; t < traj.length(); ++t) {
      obs.push_back(traj.observations[t]);
      acts.push_back(traj.actions[t]);
    }
  }
  if (obs.empty()) throw Error("density fit needs at least one demonstration step");

  DensityReward r;
  r.floor_ = config.floor;
  r.action_count_ = action_count;
  r.dim_ = obs.front().size();
  const bool tabular = std::all_of(obs.begin(), obs.end(),
                                   [](const Vector& o) { return is_one_hot(o); });
  r.mode_ = config.mode.value_or(tabular ? DensityMode::State : DensityMode::StateAction);
  const bool with_action = r.mode_ == DensityMode::StateAction;

  if (tabular) {
    r.estimator_ = DensityEstimator::Histogram;
    r.alpha_ = config.alpha;
    r.bins_ = with_action ? r.dim_ * action_count : r.dim_;
    r.counts_.assign(r.bins_, 0.0);
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const std::size_t s = one_hot_index(obs[i]);
      r.counts_[with_action ? s * action_count + acts[i] : s] += 1.0;
    }
    r.total_ = static_cast<double>(obs.size());
    return r;
  }

  r.estimator_ = DensityEstimator::Kde;
  r.bandwidth_ = config.scott ? scott_bandwidth(obs) : config.bandwidth;
  if (!(r.bandwidth_ > 0.0)) throw Error("KDE bandwidth must be positive");
  r.n_points_ = obs.size();
  r.points_.assign(with_action ? action_count : 1, {});
  for (std::size_t i = 0; i < obs.size(); ++i) {
    r.points_[with_action ? acts[i] : 0].push_back(std::move(obs[i]));
  }
  return r;
}

double DensityReward::log_density(std::span<const double> obs, std::size_t action) const {
  if (obs.size() != dim_) throw Error("density reward: observation size mismatch");
  const bool with_action = mode_ == DensityMode::StateAction;
  if (with_action && action >= action_count_) throw Error("density reward: action out of range");

  if (estimator_ == DensityEstimator::Histogram) {
    const std::size_t s = one_hot_index(obs);
    const double c = counts_[with_action ? s * action_count_ + action : s];
    const double p = (c + alpha_) / (total_ + alpha_ * static_cast<double>(bins_));
    return p > 0.0 ? std::max(floor_, std::log(p)) : floor_;
  }

  const auto& bucket = points_[with_action ? action : 0];
  if (bucket.empty()) return floor_;
  const double h2 = bandwidth_ * bandwidth_;
  std::vector<double> e(bucket.size());
  for (std::size_t i = 0; i < bucket.size(); ++i) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < dim_; ++k) d2 += (obs[k] - bucket[i][k]) * (obs[k] - bucket[i][k]);
    e[i] = -d2 / (2.0 * h2);
  }
  const double norm = -0.5 * static_cast<double>(dim_) * std::log(2.0 * std::numbers::pi * h2) -
                      std::log(static_cast<double>(n_points_));
  return std::max(floor_, log_sum_exp(e) + norm);
}

double DensityReward::reward(const StepView& step) const {
  return log_density(step.obs, step.action);
}

// ---------------------------------------------------------------------------

DensityIrl::DensityIrl(std::span<const Trajectory> demos, std::size_t action_count,
                       DensityConfig config, std::unique_ptr<PolicyOptimizer> optimizer)
    : reward_(density_fit(demos, action_count, config)), optimizer_(std::move(optimizer)) {
  if (!optimizer_) throw Error("density IRL needs a policy optimizer");
}

void DensityIrl::train(std::size_t budget) {
  optimizer_->improve(reward_, budget);
  steps_ += budget;
  log_.append({{"steps", steps_}});
}

}  // namespace mimic
