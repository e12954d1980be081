#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "mimic/preferences.hpp"
#include "oracles.hpp"

using namespace mimic;

namespace {

std::vector<Trajectory> random_rollouts(const Env& env, std::size_t n, std::uint64_t seed) {
  return rollout(UniformPolicy(env.obs_dim(), env.action_count()), env, n, SeedStream(seed));
}

std::vector<PreferencePair> labeled_pairs(const Env& env, std::size_t n, double tau,
                                          std::uint64_t seed) {
  auto trajs = random_rollouts(env, 64, seed);
  auto pairs = sample_fragments(trajs, 5, n, SeedStream(seed + 1));
  SyntheticLabeler labeler(env, tau, SeedStream(seed + 2));
  labeler.label(pairs);
  return pairs;
}

RewardModel zero_model(std::size_t obs_dim, std::size_t actions) {
  return RewardModel(Mlp({obs_dim + actions, 8, 1}, Head::Identity), actions);
}

}  // namespace

TEST_CASE("Bradley-Terry closed forms") {
  CHECK(bradley_terry_prob(std::log(3.0), 0.0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(bradley_terry_prob(2.5, 2.5) == 0.5);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const double a = 10 * rng.normal(), b = 10 * rng.normal();
    CHECK(bradley_terry_prob(a, b) + bradley_terry_prob(b, a) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("Bradley-Terry is invariant to a constant reward shift") {
  auto env = make_env("gridworld-5x5", SeedStream(0));
  auto pairs = labeled_pairs(*env, 40, 0.0, 2);
  RewardModel model(25, 4, {16}, SeedStream(3));
  RewardModel shifted = model;
  // The output bias adds the same constant to every per-step reward.
  auto params = shifted.net().params();
  params[params.size() - 1] += 0.75;
  for (const auto& p : pairs) {
    CHECK(shifted.step_reward(p.a.observations[0], p.a.actions[0]) ==
          doctest::Approx(model.step_reward(p.a.observations[0], p.a.actions[0]) + 0.75));
    CHECK(std::abs(bradley_terry_prob(shifted, p) - bradley_terry_prob(model, p)) <= 1e-12);
    PreferencePair swapped{p.b, p.a, 1.0 - p.label};
    CHECK(bradley_terry_prob(model, p) + bradley_terry_prob(model, swapped) ==
          doctest::Approx(1.0).epsilon(1e-15));
    CHECK(preference_loss(model, p) == doctest::Approx(preference_loss(model, swapped)).epsilon(1e-12));
  }
}

TEST_CASE("fragment offsets are uniform") {
  Rng rng(4);
  auto env = make_env("gridworld-5x5", SeedStream(0));
  auto trajs = random_rollouts(*env, 10, 5);
  auto pairs = sample_fragments(trajs, 5, 5000, SeedStream(6));
  std::vector<double> counts(16, 0.0);
  for (const auto& p : pairs) {
    counts[p.a.offset] += 1;
    counts[p.b.offset] += 1;
    CHECK(p.a.length() == 5);
    CHECK(p.b.observations.size() == 6);
    CHECK(p.a.observations == slice(trajs[p.a.trajectory], p.a.offset, 5).observations);
  }
  const double expected = 10000.0 / 16.0;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 0.99 quantile of chi-squared with 15 degrees of freedom.
  CHECK(chi2 < 30.578);
}

TEST_CASE("fragment sampling boundaries") {
  auto env = make_env("cliffworld", SeedStream(0));
  auto trajs = random_rollouts(*env, 3, 7);
  for (const auto& p : sample_fragments(trajs, 15, 20, SeedStream(8))) {
    CHECK(p.a.offset == 0);
    CHECK(p.a.actions == trajs[p.a.trajectory].actions);
  }
  CHECK(sample_fragments(trajs, 5, 0, SeedStream(8)).empty());
  CHECK_THROWS_AS(sample_fragments(trajs, 16, 1, SeedStream(8)), Error);
  CHECK(sample_fragments(trajs, 5, 10, SeedStream(9)) == sample_fragments(trajs, 5, 10, SeedStream(9)));
  CHECK_THROWS_AS(slice(trajs[0], 12, 4), Error);
}

TEST_CASE("labeler at tau 0 takes the argmax and ties at 0.5") {
  auto env = make_env("gridworld-5x5", SeedStream(0));
  SyntheticLabeler labeler(*env, 0.0, SeedStream(10));
  auto pairs = labeled_pairs(*env, 200, 0.0, 11);
  for (const auto& p : pairs) {
    const double diff = labeler.true_return(p.a) - labeler.true_return(p.b);
    if (std::abs(diff) <= 1e-9) CHECK(p.label == 0.5);
    else CHECK(p.label == (diff > 0 ? 1.0 : 0.0));
  }
  labeler.label(pairs);
  CHECK(labeler.queries() == 200);
  CHECK_THROWS_AS(SyntheticLabeler(*env, -1.0, SeedStream(0)), Error);
}

TEST_CASE("untrained zero model has loss log 2") {
  auto env = make_env("gridworld-5x5", SeedStream(0));
  auto model = zero_model(25, 4);
  for (const auto& p : labeled_pairs(*env, 50, 0.0, 12)) {
    if (p.label == 0.5) continue;
    CHECK(preference_loss(model, p) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  }
}

TEST_CASE("tie labels: loss is bounded below by log 2 and training equalizes") {
  auto env = make_env("gridworld-5x5", SeedStream(0));
  auto pairs = labeled_pairs(*env, 60, 0.0, 13);
  for (auto& p : pairs) p.label = 0.5;
  RewardModel model(25, 4, {16}, SeedStream(14));
  double gap_before = 0.0;
  for (const auto& p : pairs) {
    CHECK(preference_loss(model, p) >= std::log(2.0) - 1e-15);
    gap_before += std::abs(model.fragment_return(p.a) - model.fragment_return(p.b));
  }
  AdamState adam(model.net().parameter_count(), AdamConfig{1e-2});
  Rng rng(15);
  for (int e = 0; e < 200; ++e) reward_model_update(model, adam, pairs, 16, rng);
  double gap_after = 0.0;
  for (const auto& p : pairs) gap_after += std::abs(model.fragment_return(p.a) - model.fragment_return(p.b));
  CHECK(gap_after < 0.2 * gap_before);
  CHECK(std::isnan(preference_accuracy(model, pairs)));
}

TEST_CASE("preference loss gradient matches finite differences") {
  auto env = make_env("lineworld", SeedStream(0));
  auto pairs = labeled_pairs(*env, 6, 0.0, 16);
  RewardModel model(2, 3, {8, 8}, SeedStream(17));
  GradBuffer grads = model.net().make_grad();
  for (const auto& p : pairs) {
    const double z = model.fragment_return(p.a) - model.fragment_return(p.b);
    const double dz = sigmoid(z) - p.label;
    model.accumulate(p.a, dz, grads);
    model.accumulate(p.b, -dz, grads);
  }
  std::vector<double> theta(model.net().params().begin(), model.net().params().end());
  auto loss = [&](std::vector<double>& w) {
    std::copy(w.begin(), w.end(), model.net().params().begin());
    double total = 0.0;
    for (const auto& p : pairs) total += preference_loss(model, p);
    return total;
  };
  Rng rng(18);
  for (int k = 0; k < 60; ++k) {
    const std::size_t i = rng.index(theta.size());
    const double numeric = oracle::central_difference(loss, theta, i);
    if (std::abs(numeric) < 1e-7 && std::abs(grads.values[i]) < 1e-7) continue;
    CHECK(oracle::relative_error(grads.values[i], numeric) < 1e-4);
  }
}

TEST_CASE("separable labels are learned and generalize") {
  auto env = make_env("gridworld-5x5", SeedStream(0));
  auto pairs = labeled_pairs(*env, 500, 0.0, 19);
  std::vector<PreferencePair> train(pairs.begin(), pairs.begin() + 400);
  std::vector<PreferencePair> held(pairs.begin() + 400, pairs.end());
  RewardModel model(25, 4, {32, 32}, SeedStream(20));
  AdamState adam(model.net().parameter_count(), AdamConfig{1e-3});
  Rng rng(21);
  double first = 0.0, last = 0.0;
  for (int e = 0; e < 100; ++e) {
    last = reward_model_update(model, adam, train, 32, rng);
    if (e == 0) first = last;
  }
  CHECK(last < first);
  CHECK(preference_accuracy(model, held) >= 0.9);
}

TEST_CASE("random labels give chance accuracy") {
  auto env = make_env("gridworld-5x5", SeedStream(0));
  auto pairs = labeled_pairs(*env, 1500, 1e9, 22);
  std::vector<PreferencePair> train(pairs.begin(), pairs.begin() + 1000);
  std::vector<PreferencePair> held(pairs.begin() + 1000, pairs.end());
  RewardModel model(25, 4, {32, 32}, SeedStream(23));
  AdamState adam(model.net().parameter_count(), AdamConfig{1e-3});
  Rng rng(24);
  for (int e = 0; e < 20; ++e) reward_model_update(model, adam, train, 32, rng);
  const double acc = preference_accuracy(model, held);
  CHECK(acc > 0.4);
  CHECK(acc < 0.6);
}

TEST_CASE("DRLHP bookkeeping") {
  auto env = make_env("gridworld-5x5", SeedStream(0));
  auto mdp = std::make_shared<const TabularMDP>(*env->tabular());
  DrlhpConfig cfg;
  DrlhpTrainer idle(*env, SyntheticLabeler(*env, 0.0, SeedStream(1)),
                    std::make_unique<TabularOptimizer>(mdp, TabularOptimizerConfig{0.1, 0.0}), cfg,
                    SeedStream(25));
  idle.train(0);
  CHECK(idle.queries() == 0);
  CHECK(dynamic_cast<const TabularPolicy&>(idle.current_policy()).table() ==
        TabularPolicy(20, 25, 4).table());
  CHECK(idle.reward_model().net() == RewardModel(25, 4, cfg.hidden, SeedStream(25)).net());

  DrlhpTrainer trainer(*env, SyntheticLabeler(*env, 0.0, SeedStream(1)),
                       std::make_unique<TabularOptimizer>(mdp, TabularOptimizerConfig{0.1, 0.0}),
                       cfg, SeedStream(26));
  trainer.train(3);
  CHECK(trainer.queries() == 150);
  CHECK(trainer.train_pairs().size() == 120);
  CHECK(trainer.heldout_pairs().size() == 30);
  CHECK(trainer.metrics().size() == 3);
  CHECK(trainer.metrics().records().back()["queries"] == 150);

  cfg.fragment_length = 21;
  CHECK_THROWS_AS(DrlhpTrainer(*env, SyntheticLabeler(*env, 0.0, SeedStream(1)),
                               std::make_unique<TabularOptimizer>(mdp, TabularOptimizerConfig{}),
                               cfg, SeedStream(0)),
                  Error);
}

TEST_CASE("preference persistence round-trip") {
  auto env = make_env("lineworld", SeedStream(0));
  auto pairs = labeled_pairs(*env, 25, 0.0, 27);
  auto dir = std::filesystem::temp_directory_path() / "mimic_test_prefs";
  std::filesystem::create_directories(dir);
  save_preferences(pairs, dir / "prefs.jsonl");
  CHECK(load_preferences(dir / "prefs.jsonl") == pairs);

  std::ofstream(dir / "bad.jsonl") << to_json(pairs[0]).dump() << "\n{\"v\": 1, \"a\": 3}\n";
  try {
    load_preferences(dir / "bad.jsonl");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  Json wrong = to_json(pairs[0]);
  wrong["label"] = 0.3;
  CHECK_THROWS_AS(preference_from_json(wrong), Error);
}
