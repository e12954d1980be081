#include "mimic/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mimic::kernels {

namespace {

void check_reward(const TabularMDP& mdp, const RewardTable& reward) {
  const std::size_t per = mdp.state_count() * mdp.action_count();
  const std::size_t expected = reward.per_step ? per * mdp.horizon() : per;
  if (reward.values.size() != expected || reward.states != mdp.state_count() ||
      reward.actions != mdp.action_count()) {
    throw Error("reward table shape does not match the MDP");
  }
}

void check_policy(const TabularMDP& mdp, std::span<const double> policy) {
  if (policy.size() != mdp.horizon() * mdp.state_count() * mdp.action_count()) {
    throw Error("policy table shape does not match the MDP");
  }
}

// Fills Q, V and pi for one (t, s) given V[t + 1].
void backup_state(const TabularMDP& mdp, const RewardTable& reward, double temperature,
                  std::size_t t, std::size_t s, BackupResult& out) {
  const std::size_t S = mdp.state_count();
  const std::size_t A = mdp.action_count();
  const double* v_next = out.values.data() + (t + 1) * S;
  double* q = out.q.data() + (t * S + s) * A;
  double* pi = out.policy.data() + (t * S + s) * A;
  for (std::size_t a = 0; a < A; ++a) {
    const auto row = mdp.next_distribution(s, a);
    double expect = 0.0;
    for (std::size_t n = 0; n < S; ++n) expect += row[n] * v_next[n];
    q[a] = reward.at(t, s, a) + expect;
  }
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < A; ++a) m = std::max(m, q[a]);
  if (temperature > 0.0) {
    double sum = 0.0;
    for (std::size_t a = 0; a < A; ++a) sum += std::exp((q[a] - m) / temperature);
    const double v = m + temperature * std::log(sum);
    out.values[t * S + s] = v;
    for (std::size_t a = 0; a < A; ++a) pi[a] = std::exp((q[a] - v) / temperature);
  } else {
    const double tol = 1e-12 * std::max(1.0, std::abs(m));
    std::size_t best = 0;
    while (q[best] < m - tol) ++best;
    out.values[t * S + s] = m;
    for (std::size_t a = 0; a < A; ++a) pi[a] = (a == best) ? 1.0 : 0.0;
  }
}

void evaluate_state(const TabularMDP& mdp, const RewardTable& reward,
                    std::span<const double> policy, double coef, std::size_t t, std::size_t s,
                    std::vector<double>& q, std::vector<double>& values) {
  const std::size_t S = mdp.state_count();
  const std::size_t A = mdp.action_count();
  const double* v_next = values.data() + (t + 1) * S;
  const double* pi = policy.data() + (t * S + s) * A;
  double v = 0.0;
  for (std::size_t a = 0; a < A; ++a) {
    const auto row = mdp.next_distribution(s, a);
    double expect = 0.0;
    for (std::size_t n = 0; n < S; ++n) expect += row[n] * v_next[n];
    const double qa = reward.at(t, s, a) + expect;
    q[(t * S + s) * A + a] = qa;
    if (pi[a] > 0.0) v += pi[a] * (qa - coef * std::log(pi[a]));
  }
  values[t * S + s] = v;
}

BackupResult make_backup(const TabularMDP& mdp) {
  const std::size_t H = mdp.horizon();
  const std::size_t S = mdp.state_count();
  const std::size_t A = mdp.action_count();
  return {std::vector<double>(H * S * A), std::vector<double>((H + 1) * S, 0.0),
          std::vector<double>(H * S * A)};
}

bool large(const TabularMDP& mdp) {
  return mdp.state_count() * mdp.state_count() * mdp.action_count() >= kParallelWorkThreshold;
}

}  // namespace

Trajectory run_episode(const Policy& policy, Env& env, Rng& rng) {
  Trajectory traj;
  const std::size_t H = env.horizon();
  traj.observations.reserve(H + 1);
  traj.actions.reserve(H);
  std::vector<double> rewards;
  rewards.reserve(H);
  traj.observations.push_back(env.reset(rng));
  for (std::size_t t = 0; t < H; ++t) {
    const std::size_t a = policy.sample(traj.observations.back(), t, rng);
    StepResult r = env.step(a, rng);
    traj.actions.push_back(a);
    rewards.push_back(r.reward);
    traj.observations.push_back(std::move(r.observation));
  }
  traj.rewards = std::move(rewards);
  traj.terminal = env.done();
  return traj;
}

namespace serial {

BackupResult backup(const TabularMDP& mdp, const RewardTable& reward, double temperature) {
  check_reward(mdp, reward);
  BackupResult out = make_backup(mdp);
  for (std::size_t t = mdp.horizon(); t-- > 0;) {
    for (std::size_t s = 0; s < mdp.state_count(); ++s) {
      backup_state(mdp, reward, temperature, t, s, out);
    }
  }
  return out;
}

std::vector<double> evaluate_q(const TabularMDP& mdp, const RewardTable& reward,
                               std::span<const double> policy, double entropy_coef) {
  check_reward(mdp, reward);
  check_policy(mdp, policy);
  const std::size_t S = mdp.state_count();
  std::vector<double> q(mdp.horizon() * S * mdp.action_count());
  std::vector<double> values((mdp.horizon() + 1) * S, 0.0);
  for (std::size_t t = mdp.horizon(); t-- > 0;) {
    for (std::size_t s = 0; s < S; ++s) {
      evaluate_state(mdp, reward, policy, entropy_coef, t, s, q, values);
    }
  }
  return q;
}

std::vector<double> occupancy(const TabularMDP& mdp, std::span<const double> policy) {
  check_policy(mdp, policy);
  const std::size_t H = mdp.horizon();
  const std::size_t S = mdp.state_count();
  const std::size_t A = mdp.action_count();
  std::vector<double> d(H * S, 0.0);
  std::copy(mdp.initial_distribution().begin(), mdp.initial_distribution().end(), d.begin());
  // Same association as the omp version: the policy-averaged transition row first,
  // then weighted by D[t][s], so the two agree bit for bit.
  std::vector<double> row(S);
  for (std::size_t t = 0; t + 1 < H; ++t) {
    const double* cur = d.data() + t * S;
    double* next = d.data() + (t + 1) * S;
    for (std::size_t s = 0; s < S; ++s) {
      if (cur[s] == 0.0) continue;
      std::fill(row.begin(), row.end(), 0.0);
      for (std::size_t a = 0; a < A; ++a) {
        const double p = policy[(t * S + s) * A + a];
        if (p == 0.0) continue;
        const auto dist = mdp.next_distribution(s, a);
        for (std::size_t n = 0; n < S; ++n) row[n] += p * dist[n];
      }
      for (std::size_t n = 0; n < S; ++n) next[n] += cur[s] * row[n];
    }
  }
  return d;
}

std::vector<Trajectory> rollouts(const Policy& policy, const Env& env, std::size_t n_episodes,
                                 const SeedStream& seeds) {
  std::vector<Trajectory> out;
  out.reserve(n_episodes);
  auto local = env.clone();
  for (std::size_t i = 0; i < n_episodes; ++i) {
    Rng rng = derive_stream(seeds, "episode", i).rng();
    out.push_back(run_episode(policy, *local, rng));
  }
  return out;
}

}  // namespace serial

namespace omp {

BackupResult backup(const TabularMDP& mdp, const RewardTable& reward, double temperature) {
  check_reward(mdp, reward);
  BackupResult out = make_backup(mdp);
  const auto S = static_cast<std::ptrdiff_t>(mdp.state_count());
  for (std::size_t t = mdp.horizon(); t-- > 0;) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < S; ++s) {
      backup_state(mdp, reward, temperature, t, static_cast<std::size_t>(s), out);
    }
  }
  return out;
}

std::vector<double> evaluate_q(const TabularMDP& mdp, const RewardTable& reward,
                               std::span<const double> policy, double entropy_coef) {
  check_reward(mdp, reward);
  check_policy(mdp, policy);
  const std::size_t S = mdp.state_count();
  std::vector<double> q(mdp.horizon() * S * mdp.action_count());
  std::vector<double> values((mdp.horizon() + 1) * S, 0.0);
  const auto Sp = static_cast<std::ptrdiff_t>(S);
  for (std::size_t t = mdp.horizon(); t-- > 0;) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < Sp; ++s) {
      evaluate_state(mdp, reward, policy, entropy_coef, t, static_cast<std::size_t>(s), q, values);
    }
  }
  return q;
}

std::vector<double> occupancy(const TabularMDP& mdp, std::span<const double> policy) {
  check_policy(mdp, policy);
  const std::size_t H = mdp.horizon();
  const std::size_t S = mdp.state_count();
  const std::size_t A = mdp.action_count();
  std::vector<double> d(H * S, 0.0);
  std::copy(mdp.initial_distribution().begin(), mdp.initial_distribution().end(), d.begin());
  // Gather form: each destination state is owned by one thread.
  std::vector<double> flow(S * S);
  const auto Sp = static_cast<std::ptrdiff_t>(S);
  for (std::size_t t = 0; t + 1 < H; ++t) {
    const double* cur = d.data() + t * S;
    double* next = d.data() + (t + 1) * S;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t si = 0; si < Sp; ++si) {
      const auto s = static_cast<std::size_t>(si);
      double* row = flow.data() + s * S;
      std::fill(row, row + S, 0.0);
      for (std::size_t a = 0; a < A; ++a) {
        const double p = policy[(t * S + s) * A + a];
        if (p == 0.0) continue;
        const auto dist = mdp.next_distribution(s, a);
        for (std::size_t n = 0; n < S; ++n) row[n] += p * dist[n];
      }
    }
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ni = 0; ni < Sp; ++ni) {
      const auto n = static_cast<std::size_t>(ni);
      double sum = 0.0;
      for (std::size_t s = 0; s < S; ++s) sum += cur[s] * flow[s * S + n];
      next[n] = sum;
    }
  }
  return d;
}

std::vector<Trajectory> rollouts(const Policy& policy, const Env& env, std::size_t n_episodes,
                                 const SeedStream& seeds) {
  std::vector<Trajectory> out(n_episodes);
  const auto n = static_cast<std::ptrdiff_t>(n_episodes);
  const bool worth_it = n_episodes * env.horizon() >= 2048;
#pragma omp parallel if (worth_it)
  {
    auto local = env.clone();
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      Rng rng = derive_stream(seeds, "episode", static_cast<std::size_t>(i)).rng();
      out[static_cast<std::size_t>(i)] = run_episode(policy, *local, rng);
    }
  }
  return out;
}

}  // namespace omp

BackupResult backup(const TabularMDP& mdp, const RewardTable& reward, double temperature) {
  return large(mdp) ? omp::backup(mdp, reward, temperature)
                    : serial::backup(mdp, reward, temperature);
}

std::vector<double> evaluate_q(const TabularMDP& mdp, const RewardTable& reward,
                               std::span<const double> policy, double entropy_coef) {
  return large(mdp) ? omp::evaluate_q(mdp, reward, policy, entropy_coef)
                    : serial::evaluate_q(mdp, reward, policy, entropy_coef);
}

std::vector<double> occupancy(const TabularMDP& mdp, std::span<const double> policy) {
  return large(mdp) ? omp::occupancy(mdp, policy) : serial::occupancy(mdp, policy);
}

}  // namespace mimic::kernels
