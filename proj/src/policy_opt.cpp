#include "mimic/policy_opt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mimic/kernels.hpp"

namespace mimic {

SoftValueResult soft_value_iteration(const TabularMDP& mdp, std::span<const double> reward,
                                     double temperature) {
  if (!(temperature > 0.0)) throw Error("soft_value_iteration: temperature must be positive");
  kernels::RewardTable table{reward, false, mdp.state_count(), mdp.action_count()};
  auto res = kernels::backup(mdp, table, temperature);
  return {std::move(res.values), std::move(res.q),
          TabularPolicy(mdp.horizon(), mdp.state_count(), mdp.action_count(),
                        std::move(res.policy))};
}

Vector OccupancyMeasure::state_totals() const {
  Vector totals(states, 0.0);
  for (std::size_t t = 0; t < horizon; ++t) {
    for (std::size_t s = 0; s < states; ++s) totals[s] += d[t * states + s];
  }
  return totals;
}

OccupancyMeasure occupancy(const TabularMDP& mdp, const TabularPolicy& policy) {
  if (policy.horizon() != mdp.horizon() || policy.state_count() != mdp.state_count() ||
      policy.action_count() != mdp.action_count()) {
    throw Error("occupancy: policy shape does not match the MDP");
  }
  return {mdp.horizon(), mdp.state_count(), kernels::occupancy(mdp, policy.table())};
}

double expected_return(const TabularMDP& mdp, const TabularPolicy& policy) {
  const OccupancyMeasure occ = occupancy(mdp, policy);
  double total = 0.0;
  for (std::size_t t = 0; t < mdp.horizon(); ++t) {
    for (std::size_t s = 0; s < mdp.state_count(); ++s) {
      const double d = occ.at(t, s);
      if (d == 0.0) continue;
      for (std::size_t a = 0; a < mdp.action_count(); ++a) {
        total += d * policy.prob(t, s, a) * mdp.reward(s, a);
      }
    }
  }
  return total;
}

double EnvReward::reward(const StepView&) const {
  throw Error("EnvReward is a marker; optimizers read the environment reward directly");
}

// ---------------------------------------------------------------------------

TabularOptimizer::TabularOptimizer(std::shared_ptr<const TabularMDP> mdp,
                                   TabularOptimizerConfig config)
    : mdp_(std::move(mdp)), config_(config) {
  if (!mdp_) throw Error("TabularOptimizer: null model");
  if (config_.temperature < 0.0 || config_.step_size < 0.0) {
    throw Error("TabularOptimizer: temperature and step size must be non-negative");
  }
  if (config_.step_size * config_.temperature > 1.0) {
    throw Error("TabularOptimizer: step_size * temperature must not exceed 1");
  }
  reset();
}

void TabularOptimizer::reset() {
  policy_ = TabularPolicy(mdp_->horizon(), mdp_->state_count(), mdp_->action_count());
}

std::vector<double> TabularOptimizer::reward_table(const RewardSource& reward) const {
  const std::size_t H = mdp_->horizon();
  const std::size_t S = mdp_->state_count();
  const std::size_t A = mdp_->action_count();
  if (reward.is_ground_truth()) return mdp_->rewards();

  std::vector<double> base(S * A, 0.0);
  std::vector<Vector> obs(S);
  for (std::size_t s = 0; s < S; ++s) obs[s] = one_hot(s, S);
  const bool per_step = reward.uses_log_prob();
  std::vector<double> out(per_step ? H * S * A : S * A);
  const std::size_t steps = per_step ? H : 1;
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t a = 0; a < A; ++a) {
        StepView view{obs[s], t, a, {}, 0.0};
        if (per_step) view.log_prob = std::log(std::max(policy_.prob(t, s, a), 1e-300));
        double r = 0.0;
        if (reward.uses_next_obs()) {
          const auto dist = mdp_->next_distribution(s, a);
          for (std::size_t n = 0; n < S; ++n) {
            if (dist[n] == 0.0) continue;
            view.next_obs = obs[n];
            r += dist[n] * reward.reward(view);
          }
        } else {
          r = reward.reward(view);
        }
        out[(t * S + s) * A + a] = r;
      }
    }
  }
  return out;
}

void TabularOptimizer::improve(const RewardSource& reward, std::size_t step_budget) {
  if (step_budget == 0) return;
  const std::size_t H = mdp_->horizon();
  const std::size_t S = mdp_->state_count();
  const std::size_t A = mdp_->action_count();

  if (config_.step_size == 0.0) {
    if (reward.uses_log_prob()) {
      throw Error("TabularOptimizer: policy-dependent rewards need step_size > 0");
    }
    const std::vector<double> table = reward_table(reward);
    kernels::RewardTable rt{table, false, S, A};
    auto res = kernels::backup(*mdp_, rt, config_.temperature);
    policy_ = TabularPolicy(H, S, A, std::move(res.policy));
    return;
  }

  const double eta = config_.step_size;
  const double keep = 1.0 - eta * config_.temperature;
  std::vector<double> table = reward_table(reward);
  for (std::size_t k = 0; k < step_budget; ++k) {
    if (k > 0 && reward.uses_log_prob()) table = reward_table(reward);
    kernels::RewardTable rt{table, reward.uses_log_prob(), S, A};
    const auto q = kernels::evaluate_q(*mdp_, rt, policy_.table(), config_.temperature);
    std::vector<double> logits(A);
    for (std::size_t t = 0; t < H; ++t) {
      for (std::size_t s = 0; s < S; ++s) {
        auto row = policy_.row(t, s);
        for (std::size_t a = 0; a < A; ++a) {
          const double logp = std::log(std::max(row[a], 1e-300));
          logits[a] = keep * logp + eta * q[(t * S + s) * A + a];
        }
        const Vector logp = log_softmax(logits);
        for (std::size_t a = 0; a < A; ++a) row[a] = std::exp(logp[a]);
      }
    }
  }
}

// ---------------------------------------------------------------------------

MlpPolicy make_mlp_policy(std::size_t obs_dim, std::size_t actions,
                          const std::vector<std::size_t>& hidden, const SeedStream& seeds) {
  std::vector<std::size_t> widths{obs_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(actions);
  Rng rng = seeds.rng();
  return MlpPolicy(Mlp::glorot(std::move(widths), Head::LogSoftmax, rng));
}

double reinforce_update(Mlp& net, AdamState& adam, const Env& env, const RewardSource& reward,
                        const ReinforceConfig& config, const SeedStream& seeds) {
  if (net.output_dim() != env.action_count() || net.input_dim() != env.obs_dim()) {
    throw Error("reinforce_update: policy network does not match the environment");
  }
  if (config.batch_episodes == 0) throw Error("reinforce_update: empty batch");
  const MlpPolicy snapshot(net);
  const auto episodes = rollout(snapshot, env, config.batch_episodes, seeds);
  const std::size_t N = episodes.size();

  std::vector<double> returns(N, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    const Trajectory& traj = episodes[i];
    if (reward.is_ground_truth()) {
      returns[i] = traj.total_reward();
      continue;
    }
    double G = 0.0;
    for (std::size_t t = 0; t < traj.length(); ++t) {
      StepView view{traj.observations[t], t, traj.actions[t], traj.observations[t + 1], 0.0};
      if (reward.uses_log_prob()) view.log_prob = snapshot.log_prob(view.obs, t, view.action);
      G += reward.reward(view);
    }
    returns[i] = G;
  }
  const double baseline = std::accumulate(returns.begin(), returns.end(), 0.0) / N;
  if (!std::isfinite(baseline)) throw Error("reinforce_update: non-finite return");

  GradBuffer grads = net.make_grad();
  Vector out_grad(net.output_dim());
  const double inv_n = 1.0 / static_cast<double>(N);
  for (std::size_t i = 0; i < N; ++i) {
    const double advantage = returns[i] - baseline;
    const Trajectory& traj = episodes[i];
    for (std::size_t t = 0; t < traj.length(); ++t) {
      if (advantage == 0.0 && config.entropy_coef == 0.0) continue;
      std::fill(out_grad.begin(), out_grad.end(), 0.0);
      out_grad[traj.actions[t]] = -advantage * inv_n;
      if (config.entropy_coef != 0.0) {
        const Vector logp = net.forward(traj.observations[t]);
        for (std::size_t k = 0; k < logp.size(); ++k) {
          // d(-H)/d logp_k = p_k (logp_k + 1)
          out_grad[k] += config.entropy_coef * inv_n * std::exp(logp[k]) * (logp[k] + 1.0);
        }
      }
      net.backward(traj.observations[t], out_grad, grads);
    }
  }
  if (config.clip_norm > 0.0) clip_grad_norm(grads.values, config.clip_norm);
  adam_step(adam, net.params(), grads.values);
  return baseline;
}

ReinforceOptimizer::ReinforceOptimizer(const Env& env, ReinforceConfig config, SeedStream seeds)
    : env_(env.clone()),
      config_(std::move(config)),
      seeds_(seeds),
      policy_(make_mlp_policy(env.obs_dim(), env.action_count(), config_.hidden,
                              derive_stream(seeds, "policy-init"))),
      adam_(policy_.net().parameter_count(), AdamConfig{config_.lr}) {}

void ReinforceOptimizer::reset() {
  policy_ = make_mlp_policy(env_->obs_dim(), env_->action_count(), config_.hidden,
                            derive_stream(seeds_, "policy-init"));
  adam_ = AdamState(policy_.net().parameter_count(), AdamConfig{config_.lr});
  updates_ = 0;
}

void ReinforceOptimizer::improve(const RewardSource& reward, std::size_t step_budget) {
  for (std::size_t k = 0; k < step_budget; ++k) {
    last_mean_return_ = reinforce_update(policy_.net(), adam_, *env_, reward, config_,
                                         derive_stream(seeds_, "update", updates_++));
  }
}

std::unique_ptr<PolicyOptimizer> make_default_optimizer(const Env& env,
                                                        TabularOptimizerConfig tabular,
                                                        ReinforceConfig reinforce,
                                                        const SeedStream& seeds) {
  if (const auto* tab = dynamic_cast<const TabularEnv*>(&env)) {
    return std::make_unique<TabularOptimizer>(tab->model(), tabular);
  }
  return std::make_unique<ReinforceOptimizer>(env, std::move(reinforce), seeds);
}

}  // namespace mimic
