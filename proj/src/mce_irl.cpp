#include "mimic/mce_irl.hpp"

#include <algorithm>
#include <cmath>

namespace mimic {

double LinearReward::at(const TabularMDP& mdp, std::size_t s) const {
  const auto phi = mdp.features(s);
  double r = 0.0;
  for (std::size_t k = 0; k < phi.size(); ++k) r += weights[k] * phi[k];
  return r;
}

std::vector<double> LinearReward::table(const TabularMDP& mdp) const {
  if (weights.size() != mdp.feature_dim()) throw Error("reward weights do not match feature dim");
  const std::size_t S = mdp.state_count(), A = mdp.action_count();
  std::vector<double> r(S * A);
  for (std::size_t s = 0; s < S; ++s) {
    const double v = at(mdp, s);
    if (!std::isfinite(v)) throw Error("non-finite reward weight");
    std::fill_n(r.begin() + s * A, A, v);
  }
  return r;
}

FeatureExpectations expert_feature_expectations(std::span<const Trajectory> demos,
                                                const TabularMDP& mdp) {
  if (demos.empty()) throw Error("feature expectations need at least one demonstration");
  Vector f(mdp.feature_dim(), 0.0);
  for (const auto& traj : demos) {
    for (std::size_t t = 0; t < traj.length(); ++t) {
      if (traj.observations[t].size() != mdp.state_count()) {
        throw Error("demonstration observation does not match the MDP state count");
      }
      const auto phi = mdp.features(one_hot_index(traj.observations[t]));
      for (std::size_t k = 0; k < f.size(); ++k) f[k] += phi[k];
    }
  }
  for (double& x : f) x /= static_cast<double>(demos.size());
  return {std::move(f)};
}

FeatureExpectations occupancy_feature_expectations(const TabularMDP& mdp,
                                                   const OccupancyMeasure& occ) {
  Vector f(mdp.feature_dim(), 0.0);
  const Vector totals = occ.state_totals();
  for (std::size_t s = 0; s < mdp.state_count(); ++s) {
    const auto phi = mdp.features(s);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] += totals[s] * phi[k];
  }
  return {std::move(f)};
}

double mce_log_partition(const TabularMDP& mdp, const LinearReward& reward) {
  const auto soft = soft_value_iteration(mdp, reward.table(mdp), 1.0);
  const auto& d0 = mdp.initial_distribution();
  double z = 0.0;
  for (std::size_t s = 0; s < mdp.state_count(); ++s) z += d0[s] * soft.value(0, s);
  return z;
}

double mce_objective(const TabularMDP& mdp, const LinearReward& reward,
                     const FeatureExpectations& expert) {
  double dot = 0.0;
  for (std::size_t k = 0; k < reward.weights.size(); ++k) {
    dot += reward.weights[k] * expert.values[k];
  }
  return dot - mce_log_partition(mdp, reward);
}

namespace {

struct GradientEval {
  Vector grad;
  TabularPolicy policy;
};

GradientEval gradient_with_policy(const TabularMDP& mdp, const LinearReward& reward,
                                  const FeatureExpectations& expert) {
  if (expert.values.size() != mdp.feature_dim()) {
    throw Error("expert feature expectations do not match feature dim");
  }
  auto soft = soft_value_iteration(mdp, reward.table(mdp), 1.0);
  const auto learner = occupancy_feature_expectations(mdp, occupancy(mdp, soft.policy));
  Vector g(expert.values.size());
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = expert.values[k] - learner.values[k];
  return {std::move(g), std::move(soft.policy)};
}

double linf(const Vector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

Vector mce_gradient(const TabularMDP& mdp, const LinearReward& reward,
                    const FeatureExpectations& expert) {
  return gradient_with_policy(mdp, reward, expert).grad;
}

// ---------------------------------------------------------------------------

MceIrl::MceIrl(std::shared_ptr<const TabularMDP> mdp, FeatureExpectations expert,
               MceConfig config)
    : mdp_(std::move(mdp)), expert_(std::move(expert)), config_(config) {
  if (!mdp_) throw Error("MCE IRL needs a tabular MDP");
  if (!(config_.lr > 0.0)) throw Error("MCE IRL learning rate must be positive");
  theta_.weights.assign(mdp_->feature_dim(), 0.0);
  initial_gap_ = evaluate_current();
}

MceIrl::MceIrl(std::shared_ptr<const TabularMDP> mdp, std::span<const Trajectory> demos,
               MceConfig config)
    : MceIrl(mdp, expert_feature_expectations(demos, *mdp), config) {}

double MceIrl::evaluate_current() {
  auto eval = gradient_with_policy(*mdp_, theta_, expert_);
  grad_ = std::move(eval.grad);
  const double gap = linf(grad_);
  if (history_.empty() || gap < best_gap_) {
    best_gap_ = gap;
    best_theta_ = theta_;
    best_policy_ = std::move(eval.policy);
  }
  history_.push_back(gap);
  return gap;
}

void MceIrl::train(std::size_t iterations) {
  for (std::size_t i = 0; i < iterations && !converged(); ++i) {
    for (std::size_t k = 0; k < grad_.size(); ++k) theta_.weights[k] += config_.lr * grad_[k];
    const double gap = evaluate_current();
    if (gap > 10.0 * initial_gap_) {
      throw Error("MCE IRL diverged (feature gap " + std::to_string(gap) +
                  " exceeds 10x the initial gap); try a smaller learning rate than " +
                  std::to_string(config_.lr));
    }
    log_.append({{"iter", history_.size() - 1}, {"gap", gap}, {"best_gap", best_gap_}});
  }
}

MceFit MceIrl::result() const {
  return {best_theta_, best_policy_, history_, best_gap_, history_.size() - 1};
}

MceFit mce_irl_fit(std::shared_ptr<const TabularMDP> mdp, const FeatureExpectations& expert,
                   MceConfig config) {
  MceIrl irl(std::move(mdp), expert, config);
  irl.train(config.max_iters);
  return irl.result();
}

MceFit mce_irl_fit(std::shared_ptr<const TabularMDP> mdp, std::span<const Trajectory> demos,
                   MceConfig config) {
  MceIrl irl(mdp, demos, config);
  irl.train(config.max_iters);
  return irl.result();
}

}  // namespace mimic
