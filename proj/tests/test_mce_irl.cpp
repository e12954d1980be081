#include <doctest.h>

#include <cmath>

#include "mimic/mce_irl.hpp"
#include "oracles.hpp"

using namespace mimic;

namespace {

TabularMDP with_random_features(const TabularMDP& base, std::size_t d, Rng& rng) {
  std::vector<double> phi(base.state_count() * d);
  for (double& x : phi) x = rng.normal();
  return TabularMDP(base.state_count(), base.action_count(), base.horizon(), base.transitions(),
                    base.rewards(), base.initial_distribution(), phi, d);
}

FeatureExpectations exact_features(const TabularMDP& mdp, const TabularPolicy& pi) {
  return occupancy_feature_expectations(mdp, occupancy(mdp, pi));
}

double linf_diff(const Vector& a, const Vector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("one-hot feature expectations are visit counts") {
  Trajectory stay;
  for (int t = 0; t <= 4; ++t) stay.observations.push_back(one_hot(0, 3));
  stay.actions = {0, 0, 0, 0};
  auto mdp = TabularMDP(3, 1, 4, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0}, {1, 0, 0});
  auto f = expert_feature_expectations(std::vector<Trajectory>{stay}, mdp);
  CHECK(f.values == Vector{4.0, 0.0, 0.0});

  auto grid = make_gridworld();
  auto env = make_env("gridworld-5x5", SeedStream(0));
  UniformPolicy uniform(25, 4);
  auto demos = rollout(uniform, *env, 30, SeedStream(1));
  auto fe = expert_feature_expectations(demos, grid);
  Vector counts(25, 0.0);
  for (const auto& d : demos) {
    for (std::size_t t = 0; t < d.length(); ++t) counts[one_hot_index(d.observations[t])] += 1.0 / 30;
  }
  double sum = 0.0;
  for (std::size_t s = 0; s < 25; ++s) {
    CHECK(fe.values[s] == doctest::Approx(counts[s]).epsilon(1e-12));
    sum += fe.values[s];
  }
  CHECK(sum == doctest::Approx(20.0));
}

TEST_CASE("sampled feature expectations agree with the occupancy oracle") {
  Rng rng(2);
  auto mdp = std::make_shared<const TabularMDP>(make_gridworld());
  auto pi = soft_value_iteration(*mdp, std::vector<double>(100, 0.0), 1.0).policy;
  TabularEnv env(mdp, "grid");
  const std::size_t n = 2000;
  auto demos = rollout(pi, env, n, SeedStream(3));
  auto sampled = expert_feature_expectations(demos, *mdp);
  auto exact = exact_features(*mdp, pi);
  // Per-feature standard error from the per-demo visit counts.
  for (std::size_t s = 0; s < 25; ++s) {
    double sq = 0.0;
    for (const auto& d : demos) {
      double c = 0.0;
      for (std::size_t t = 0; t < d.length(); ++t) c += one_hot_index(d.observations[t]) == s;
      sq += (c - sampled.values[s]) * (c - sampled.values[s]);
    }
    const double se = std::sqrt(sq / (n - 1) / n);
    CHECK(std::abs(sampled.values[s] - exact.values[s]) <= 3.0 * se + 1e-12);
  }
}

TEST_CASE("gradient matches finite differences of the objective") {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    auto base = make_random_mdp(6, 3, 5, rng);
    auto mdp = with_random_features(base, 4, rng);
    FeatureExpectations expert{Vector(4)};
    for (double& x : expert.values) x = rng.normal();
    LinearReward theta{Vector(4)};
    for (double& x : theta.weights) x = 0.5 * rng.normal();
    auto grad = mce_gradient(mdp, theta, expert);
    auto objective = [&](std::vector<double>& w) {
      return mce_objective(mdp, LinearReward{w}, expert);
    };
    for (std::size_t k = 0; k < 4; ++k) {
      const double numeric = oracle::central_difference(objective, theta.weights, k);
      CHECK(oracle::relative_error(grad[k], numeric) < 1e-5);
    }
  }
}

TEST_CASE("log partition of a flat one-step problem") {
  auto flat = TabularMDP(1, 2, 1, {1.0, 1.0}, {0.0, 0.0}, {1.0});
  CHECK(mce_log_partition(flat, LinearReward{Vector{0.0}}) == doctest::Approx(std::log(2.0)));
  CHECK(mce_log_partition(flat, LinearReward{Vector{1.5}}) == doctest::Approx(1.5 + std::log(2.0)));
}

TEST_CASE("reward table is recomputed exactly from theta") {
  auto grid = make_gridworld();
  LinearReward r{Vector(25)};
  for (std::size_t s = 0; s < 25; ++s) r.weights[s] = 0.1 * s;
  auto table = r.table(grid);
  for (std::size_t s = 0; s < 25; ++s) {
    for (std::size_t a = 0; a < 4; ++a) CHECK(table[s * 4 + a] == 0.1 * s);
  }
  r.weights[3] = INFINITY;
  CHECK_THROWS_AS(r.table(grid), Error);
  CHECK_THROWS_AS(LinearReward{Vector(3)}.table(grid), Error);
}

TEST_CASE("one-state MDP has zero gap at every iterate") {
  auto mdp = std::make_shared<const TabularMDP>(TabularMDP(1, 2, 3, {1.0, 1.0}, {0, 0}, {1.0}));
  MceConfig cfg;
  cfg.tol = 0.0;
  MceIrl irl(mdp, FeatureExpectations{Vector{3.0}}, cfg);
  irl.train(10);
  for (double g : irl.result().gap_history) CHECK(g == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("exact expert features are matched on a small MDP") {
  Rng rng(5);
  auto mdp = std::make_shared<const TabularMDP>(make_random_mdp(4, 2, 5, rng));
  LinearReward star{Vector{1.0, -0.5, 0.3, 0.0}};
  auto expert_pi = soft_value_iteration(*mdp, star.table(*mdp), 1.0).policy;
  auto expert = exact_features(*mdp, expert_pi);
  MceConfig cfg;
  cfg.lr = 0.1;
  cfg.tol = 1e-4;
  cfg.max_iters = 2000;
  auto fit = mce_irl_fit(mdp, expert, cfg);
  CHECK(fit.best_gap <= 1e-4);
  CHECK(linf_diff(exact_features(*mdp, fit.policy).values, expert.values) <= 1e-4);
  // The best-gap iterate is the one reported.
  CHECK(fit.best_gap == *std::min_element(fit.gap_history.begin(), fit.gap_history.end()));
}

TEST_CASE("gradient vanishes at the generating reward") {
  auto grid = make_gridworld();
  Rng rng(6);
  LinearReward star{Vector(25)};
  for (double& w : star.weights) w = rng.normal();
  auto pi = soft_value_iteration(grid, star.table(grid), 1.0).policy;
  auto exact = exact_features(grid, pi);
  for (double g : mce_gradient(grid, star, exact)) CHECK(std::abs(g) < 1e-10);

  // With sampled demos the gradient at theta* is sampling noise only.
  TabularEnv env(std::make_shared<const TabularMDP>(grid), "grid");
  const std::size_t n = 500;
  auto demos = rollout(pi, env, n, SeedStream(7));
  auto grad = mce_gradient(grid, star, expert_feature_expectations(demos, grid));
  for (std::size_t s = 0; s < 25; ++s) {
    // Visit counts per episode are bounded by H, so the standard error is at most H / (2 sqrt(n)).
    CHECK(std::abs(grad[s]) <= 4.0 * 20.0 / (2.0 * std::sqrt(double(n))));
  }
}

TEST_CASE("self-consistency from a soft-optimal expert on gridworld") {
  auto mdp = std::make_shared<const TabularMDP>(make_gridworld());
  Rng rng(8);
  LinearReward star{Vector(25, 0.0)};
  for (double& w : star.weights) w = 0.3 * rng.normal();
  star.weights[24] = 1.0;
  auto pi = soft_value_iteration(*mdp, star.table(*mdp), 1.0).policy;
  TabularEnv env(mdp, "grid");
  auto demos = rollout(pi, env, 500, SeedStream(9));
  MceConfig cfg;
  cfg.tol = 1e-2;
  auto fit = mce_irl_fit(mdp, demos, cfg);
  auto expert = expert_feature_expectations(demos, *mdp);
  CHECK(linf_diff(exact_features(*mdp, fit.policy).values, expert.values) <= 1e-2);
}

TEST_CASE("training is resumable and logs every iterate") {
  auto mdp = std::make_shared<const TabularMDP>(make_gridworld());
  auto env = make_env("gridworld-5x5", SeedStream(0));
  auto demos = rollout(*make_expert(*env).policy, *env, 20, SeedStream(10));
  MceConfig cfg;
  cfg.tol = 0.0;
  MceIrl a(mdp, demos, cfg), b(mdp, demos, cfg);
  a.train(30);
  b.train(10);
  b.train(20);
  CHECK(a.result().reward.weights == b.result().reward.weights);
  CHECK(a.result().gap_history == b.result().gap_history);
  CHECK(a.metrics().size() == 30);
  CHECK(a.result().iterations == 30);
}

TEST_CASE("divergence raises an error suggesting a smaller learning rate") {
  auto mdp = std::make_shared<const TabularMDP>(make_gridworld());
  auto uniform = exact_features(*mdp, TabularPolicy(20, 25, 4));
  uniform.values[24] += 1e-3;
  MceConfig cfg;
  cfg.lr = 1e4;
  cfg.tol = 0.0;
  MceIrl irl(mdp, uniform, cfg);
  try {
    irl.train(50);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("smaller learning rate") != std::string::npos);
  }
}
