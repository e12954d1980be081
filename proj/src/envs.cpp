#include "mimic/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mimic/kernels.hpp"

namespace mimic {

namespace {

constexpr double kSimplexTol = 1e-12;

// Grid moves shared by gridworld and cliffworld: down, right, up, left.
constexpr int kMoves[4][2] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};

std::size_t grid_move(std::size_t s, std::size_t a, std::size_t rows, std::size_t cols) {
  const int r = static_cast<int>(s / cols) + kMoves[a][0];
  const int c = static_cast<int>(s % cols) + kMoves[a][1];
  if (r < 0 || c < 0 || r >= static_cast<int>(rows) || c >= static_cast<int>(cols)) return s;
  return static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(c);
}

}  // namespace

TabularMDP::TabularMDP(std::size_t states, std::size_t actions, std::size_t horizon,
                       std::vector<double> transitions, std::vector<double> reward,
                       std::vector<double> initial, std::vector<double> features,
                       std::size_t feature_dim)
    : states_(states),
      actions_(actions),
      horizon_(horizon),
      feature_dim_(feature_dim),
      transitions_(std::move(transitions)),
      reward_(std::move(reward)),
      initial_(std::move(initial)),
      features_(std::move(features)) {
  if (features_.empty()) {
    feature_dim_ = states_;
    features_.assign(states_ * states_, 0.0);
    for (std::size_t s = 0; s < states_; ++s) features_[s * states_ + s] = 1.0;
  }
  validate();
}

void TabularMDP::validate() const {
  if (states_ == 0 || actions_ == 0) throw Error("TabularMDP: empty state or action space");
  if (horizon_ < 1) throw Error("TabularMDP: horizon must be at least 1");
  if (transitions_.size() != states_ * actions_ * states_) {
    throw Error("TabularMDP: transition tensor has wrong size");
  }
  if (reward_.size() != states_ * actions_) throw Error("TabularMDP: reward table has wrong size");
  if (initial_.size() != states_) throw Error("TabularMDP: initial distribution has wrong size");
  if (features_.size() != states_ * feature_dim_) throw Error("TabularMDP: feature table size");
  for (std::size_t s = 0; s < states_; ++s) {
    for (std::size_t a = 0; a < actions_; ++a) {
      double sum = 0.0;
      for (double p : next_distribution(s, a)) {
        if (p < 0.0) throw Error("TabularMDP: negative transition probability");
        sum += p;
      }
      if (std::abs(sum - 1.0) > kSimplexTol) {
        throw Error("TabularMDP: transitions[" + std::to_string(s) + "][" + std::to_string(a) +
                    "] does not sum to 1");
      }
    }
  }
  double init_sum = 0.0;
  for (double p : initial_) {
    if (p < 0.0) throw Error("TabularMDP: negative initial probability");
    init_sum += p;
  }
  if (std::abs(init_sum - 1.0) > kSimplexTol) {
    throw Error("TabularMDP: initial distribution does not sum to 1");
  }
}

TabularMDP TabularMDP::with_reward(std::vector<double> reward) const {
  return TabularMDP(states_, actions_, horizon_, transitions_, std::move(reward), initial_,
                    features_, feature_dim_);
}

Vector Env::reset(Rng& rng) {
  elapsed_ = 0;
  started_ = true;
  return do_reset(rng);
}

StepResult Env::step(std::size_t action, Rng& rng) {
  if (!started_) throw Error(name() + ": step before reset");
  if (elapsed_ >= horizon()) throw Error(name() + ": step after terminal");
  if (action >= action_count()) throw Error(name() + ": action out of range");
  ++elapsed_;
  return do_step(action, rng);
}

TabularEnv::TabularEnv(std::shared_ptr<const TabularMDP> mdp, std::string name)
    : mdp_(std::move(mdp)), name_(std::move(name)) {
  if (!mdp_) throw Error("TabularEnv: null model");
}

std::unique_ptr<Env> TabularEnv::clone() const {
  auto copy = std::make_unique<TabularEnv>(mdp_, name_);
  return copy;
}

double TabularEnv::true_reward(std::span<const double> obs, std::size_t action) const {
  return mdp_->reward(one_hot_index(obs), action);
}

Vector TabularEnv::do_reset(Rng& rng) {
  state_ = rng.categorical(mdp_->initial_distribution());
  return one_hot(state_, mdp_->state_count());
}

StepResult TabularEnv::do_step(std::size_t action, Rng& rng) {
  const double r = mdp_->reward(state_, action);
  state_ = rng.categorical(mdp_->next_distribution(state_, action));
  return {one_hot(state_, mdp_->state_count()), r};
}

double LineWorld::true_reward(std::span<const double> obs, std::size_t) const {
  return -std::abs(obs[0] - kTarget);
}

Vector LineWorld::do_reset(Rng& rng) {
  position_ = (2.0 * rng.uniform() - 1.0) * kStartSpread;
  velocity_ = 0.0;
  return {position_, velocity_};
}

StepResult LineWorld::do_step(std::size_t action, Rng& rng) {
  const double r = -std::abs(position_ - kTarget);
  velocity_ = kSpeed * (static_cast<double>(action) - 1.0);
  position_ = std::clamp(position_ + velocity_ + rng.normal(0.0, kNoise), -1.0, 1.0);
  return {{position_, velocity_}, r};
}

const std::vector<std::string>& env_registry() {
  static const std::vector<std::string> names = {"gridworld-5x5", "cliffworld", "lineworld"};
  return names;
}

std::unique_ptr<Env> make_env(std::string_view name, const SeedStream&) {
  // Construction is deterministic; the seeds are kept in the signature so that
  // randomized environments can be registered without changing callers.
  if (name == "gridworld-5x5") {
    return std::make_unique<TabularEnv>(std::make_shared<const TabularMDP>(make_gridworld()),
                                        std::string(name));
  }
  if (name == "cliffworld") {
    return std::make_unique<TabularEnv>(std::make_shared<const TabularMDP>(make_cliffworld()),
                                        std::string(name));
  }
  if (name == "lineworld") return std::make_unique<LineWorld>();
  std::string known;
  for (const auto& n : env_registry()) known += (known.empty() ? "" : ", ") + n;
  throw Error("unknown environment '" + std::string(name) + "'; registry: " + known);
}

TabularMDP make_gridworld() {
  constexpr std::size_t rows = 5, cols = 5, S = rows * cols, A = 4, H = 20;
  constexpr double slip = 0.1;
  constexpr std::size_t goal = S - 1;
  std::vector<double> P(S * A * S, 0.0);
  std::vector<double> R(S * A, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      double* row = P.data() + (s * A + a) * S;
      row[grid_move(s, a, rows, cols)] += 1.0 - slip;
      for (std::size_t b = 0; b < A; ++b) row[grid_move(s, b, rows, cols)] += slip / A;
      R[s * A + a] = (s == goal) ? 1.0 : 0.0;
    }
  }
  std::vector<double> init(S, 0.0);
  init[0] = 1.0;
  return TabularMDP(S, A, H, std::move(P), std::move(R), std::move(init));
}

TabularMDP make_cliffworld() {
  constexpr std::size_t rows = 4, cols = 6, S = rows * cols, A = 4, H = 15;
  constexpr std::size_t start = (rows - 1) * cols;
  constexpr std::size_t goal = S - 1;
  auto is_cliff = [&](std::size_t s) { return s > start && s < goal; };
  std::vector<double> P(S * A * S, 0.0);
  std::vector<double> R(S * A, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      std::size_t next = is_cliff(s) ? start : grid_move(s, a, rows, cols);
      double r = (s == goal) ? 1.0 : 0.0;
      if (is_cliff(next)) {
        r = -1.0;
        next = start;
      }
      P[(s * A + a) * S + next] = 1.0;
      R[s * A + a] = r;
    }
  }
  std::vector<double> init(S, 0.0);
  init[start] = 1.0;
  return TabularMDP(S, A, H, std::move(P), std::move(R), std::move(init));
}

TabularMDP make_two_state_mdp(std::size_t horizon) {
  // P[s][a][s']
  std::vector<double> P = {1, 0, 0, 1,   // s0: a0 stay, a1 -> s1
                           0, 1, 0, 1};  // s1 absorbing
  std::vector<double> R = {0, 1, 1, 1};
  return TabularMDP(2, 2, horizon, std::move(P), std::move(R), {1.0, 0.0});
}

TabularMDP make_bandit(std::vector<double> rewards) {
  const std::size_t A = rewards.size();
  return TabularMDP(1, A, 1, std::vector<double>(A, 1.0), std::move(rewards), {1.0});
}

TabularMDP make_random_mdp(std::size_t states, std::size_t actions, std::size_t horizon,
                           Rng& rng) {
  auto simplex = [&](double* out, std::size_t n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += out[i] = -std::log(1.0 - rng.uniform());
    for (std::size_t i = 0; i < n; ++i) out[i] /= sum;
  };
  std::vector<double> P(states * actions * states);
  for (std::size_t sa = 0; sa < states * actions; ++sa) simplex(P.data() + sa * states, states);
  std::vector<double> R(states * actions);
  for (double& r : R) r = rng.uniform();
  std::vector<double> init(states);
  simplex(init.data(), states);
  return TabularMDP(states, actions, horizon, std::move(P), std::move(R), std::move(init));
}

double ValueIterationResult::value(std::size_t t, std::size_t s) const {
  return values[t * policy.state_count() + s];
}

ValueIterationResult value_iteration(const TabularMDP& mdp) {
  kernels::RewardTable reward{mdp.rewards(), false, mdp.state_count(), mdp.action_count()};
  auto res = kernels::backup(mdp, reward, 0.0);
  return {std::move(res.values), TabularPolicy(mdp.horizon(), mdp.state_count(),
                                               mdp.action_count(), std::move(res.policy))};
}

ExpertPolicy make_expert(const Env& env) {
  if (const TabularMDP* mdp = env.tabular()) {
    auto vi = value_iteration(*mdp);
    return {std::make_shared<TabularPolicy>(std::move(vi.policy)), "value-iteration"};
  }
  if (env.name() == "lineworld") {
    auto controller = [](std::span<const double> obs, std::size_t) -> std::size_t {
      const double error = LineWorld::kTarget - obs[0];
      if (error > LineWorld::kSpeed / 2) return 2;
      if (error < -LineWorld::kSpeed / 2) return 0;
      return 1;
    };
    return {std::make_shared<FunctionPolicy>(2, 3, controller, "lineworld-controller"),
            "proportional-controller"};
  }
  throw Error("no expert available for environment " + env.name());
}

std::vector<Trajectory> rollout(const Policy& policy, const Env& env, std::size_t n_episodes,
                                const SeedStream& seeds) {
  if (policy.action_count() != env.action_count() || policy.obs_dim() != env.obs_dim()) {
    throw Error("rollout: policy spaces (" + std::to_string(policy.obs_dim()) + " obs, " +
                std::to_string(policy.action_count()) + " actions) do not match " + env.name());
  }
  return kernels::omp::rollouts(policy, env, n_episodes, seeds);
}

double mean_return(std::span<const Trajectory> trajectories) {
  if (trajectories.empty()) throw Error("mean_return: no trajectories");
  double sum = 0.0;
  for (const auto& t : trajectories) sum += t.total_reward();
  return sum / static_cast<double>(trajectories.size());
}

}  // namespace mimic
