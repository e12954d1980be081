#include <doctest.h>

#include <cmath>

#include "mimic/adversarial.hpp"
#include "oracles.hpp"

using namespace mimic;

namespace {

// Generator that always plays one fixed action and never learns.
class FixedOptimizer final : public PolicyOptimizer {
 public:
  FixedOptimizer(std::size_t obs_dim, std::size_t actions, std::size_t action)
      : policy_(obs_dim, actions, [action](std::span<const double>, std::size_t) { return action; },
                "fixed") {}
  void improve(const RewardSource&, std::size_t) override {}
  const Policy& policy() const override { return policy_; }
  void reset() override {}

 private:
  FunctionPolicy policy_;
};

// Views point into obs, which must outlive them.
std::vector<StepView> views_at(const std::vector<Vector>& obs, std::size_t action,
                               double log_prob = 0.0) {
  std::vector<StepView> out;
  for (const auto& o : obs) out.push_back({o, 0, action, o, log_prob});
  return out;
}

std::shared_ptr<const TabularMDP> bandit() {
  return std::make_shared<const TabularMDP>(make_bandit({0.0, 0.0}));
}

std::vector<Trajectory> gridworld_demos(const Env& env, std::size_t n) {
  return rollout(*make_expert(env).policy, env, n, SeedStream(99));
}

std::unique_ptr<PolicyOptimizer> tabular_generator(const Env& env) {
  return std::make_unique<TabularOptimizer>(std::make_shared<const TabularMDP>(*env.tabular()),
                                            TabularOptimizerConfig{0.0, 0.5});
}

}  // namespace

TEST_CASE("reward surrogates in closed form") {
  CHECK(gail_reward(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(gail_reward(-20.0) == doctest::Approx(2.0611536e-9).epsilon(1e-6));
  CHECK(gail_reward(-20.0) > 0.0);
  CHECK(gail_reward(5.0) == doctest::Approx(5.006715348).epsilon(1e-9));
  CHECK(airl_reward(1.5, -0.25) == 1.75);
}

TEST_CASE("no non-finite reward for |z| <= 500") {
  for (double z = -500.0; z <= 500.0; z += 0.25) {
    CHECK(std::isfinite(gail_reward(z)));
    CHECK(gail_reward(z) >= 0.0);
    CHECK(std::isfinite(airl_reward(z, -std::abs(z))));
    CHECK(std::isfinite(softplus(-z)));
  }
}

TEST_CASE("zero-weight discriminator has loss log 2") {
  GailDiscriminator gail(2, 2, {4}, SeedStream(1));
  AirlDiscriminator airl(2, 2, {4}, SeedStream(1));
  for (Discriminator* d : {static_cast<Discriminator*>(&gail), static_cast<Discriminator*>(&airl)}) {
    std::fill(d->net().params().begin(), d->net().params().end(), 0.0);
  }
  const std::vector<Vector> eo = {{1, 0}, {1, 0}}, go = {{0, 1}};
  auto e = views_at(eo, 0);
  auto g = views_at(go, 1);
  CHECK(disc_evaluate(gail, e, g).loss == std::log(2.0));
  CHECK(gail.reward(e[0]) == doctest::Approx(std::log(2.0)));
  // AIRL with log pi = 0 also sits at logit 0.
  CHECK(disc_evaluate(airl, e, g).loss == std::log(2.0));
}

TEST_CASE("AIRL logit is f minus log pi") {
  AirlDiscriminator airl(3, 2, {5}, SeedStream(2));
  Vector obs = {0.2, -1.0, 0.5};
  StepView step{obs, 0, 1, obs, -0.7};
  const double f = airl.net_output(obs, 1);
  CHECK(airl.logit(step) == f + 0.7);
  CHECK(airl.reward(step) == f + 0.7);
  CHECK(airl.uses_log_prob());
  // f = log pi is the indistinguishable fixed point.
  step.log_prob = f;
  CHECK(airl.logit(step) == 0.0);
  CHECK(sigmoid(airl.logit(step)) == 0.5);

  GailDiscriminator gail(3, 2, {5}, SeedStream(2));
  StepView a{obs, 0, 1, obs, -0.7}, b{obs, 0, 1, obs, -3.0};
  CHECK(gail.logit(a) == gail.logit(b));
  CHECK_FALSE(gail.uses_log_prob());
}

TEST_CASE("discriminator gradient matches finite differences of the BCE loss") {
  Rng rng(3);
  for (int kind = 0; kind < 2; ++kind) {
    std::unique_ptr<Discriminator> disc;
    if (kind == 0) disc = std::make_unique<GailDiscriminator>(4, 3, std::vector<std::size_t>{8, 8}, SeedStream(4));
    else disc = std::make_unique<AirlDiscriminator>(4, 3, std::vector<std::size_t>{8, 8}, SeedStream(4));
    std::vector<Vector> obs;
    for (int i = 0; i < 12; ++i) obs.push_back({rng.normal(), rng.normal(), rng.normal(), rng.normal()});
    std::vector<StepView> e, g;
    for (int i = 0; i < 6; ++i) e.push_back({obs[i], 0, rng.index(3), obs[i], -rng.uniform()});
    for (int i = 6; i < 12; ++i) g.push_back({obs[i], 0, rng.index(3), obs[i], -rng.uniform()});

    GradBuffer grads = disc->net().make_grad();
    const double inv = 1.0 / 12.0;
    for (const auto& s : e) disc->backward(s, (sigmoid(disc->logit(s)) - 1.0) * inv, grads);
    for (const auto& s : g) disc->backward(s, sigmoid(disc->logit(s)) * inv, grads);

    std::vector<double> theta(disc->net().params().begin(), disc->net().params().end());
    auto loss = [&](std::vector<double>& p) {
      std::copy(p.begin(), p.end(), disc->net().params().begin());
      return disc_evaluate(*disc, e, g).loss;
    };
    for (int k = 0; k < 50; ++k) {
      const std::size_t i = rng.index(theta.size());
      const double numeric = oracle::central_difference(loss, theta, i);
      if (std::abs(numeric) < 1e-7 && std::abs(grads.values[i]) < 1e-7) continue;
      CHECK(oracle::relative_error(grads.values[i], numeric) < 1e-4);
    }
  }
}

TEST_CASE("separable supports drive accuracy to 1") {
  GailDiscriminator disc(2, 1, {8}, SeedStream(5));
  AdamState adam(disc.net().parameter_count(), AdamConfig{0.01});
  const std::vector<Vector> eo(8, Vector{1, 0}), go(8, Vector{0, 1});
  auto e = views_at(eo, 0);
  auto g = views_at(go, 0);
  DiscStats stats;
  for (int i = 0; i < 300; ++i) stats = disc_update(disc, adam, e, g);
  CHECK(stats.accuracy == 1.0);
  CHECK(stats.loss < 0.05);
  // Labels are not interchangeable: swapping the batches inverts the accuracy.
  CHECK(disc_evaluate(disc, g, e).accuracy == 0.0);
}

TEST_CASE("identical distributions drive the loss to log 2") {
  GailDiscriminator disc(2, 2, {8}, SeedStream(6));
  AdamState adam(disc.net().parameter_count(), AdamConfig{0.01});
  const std::vector<Vector> obs = {{1, 0}, {0, 1}, {1, 1}, {0, 0}};
  auto batch = views_at(obs, 1);
  DiscStats stats;
  for (int i = 0; i < 500; ++i) stats = disc_update(disc, adam, batch, batch);
  CHECK(stats.loss == doctest::Approx(std::log(2.0)).epsilon(1e-4));
  for (const auto& s : batch) CHECK(std::abs(disc.logit(s)) < 1e-2);
}

TEST_CASE("GAIL and AIRL run the identical loop") {
  auto env = make_env("gridworld-5x5", SeedStream(0));
  auto demos = gridworld_demos(*env, 10);
  AdversarialConfig cfg;
  cfg.disc_steps = 3;
  Gail gail(*env, demos, tabular_generator(*env), cfg, SeedStream(7));
  Airl airl(*env, demos, tabular_generator(*env), cfg, SeedStream(7));
  gail.train(4);
  airl.train(4);
  CHECK(gail.trace() == airl.trace());
  REQUIRE(gail.trace().size() == 4 * 5);
  CHECK(gail.trace()[0] == "collect");
  CHECK(gail.trace()[1] == "disc");
  CHECK(gail.trace()[4] == "gen");
  CHECK(gail.discriminator().kind() == "gail");
  CHECK(airl.discriminator().kind() == "airl");
  for (const auto& rec : gail.metrics().records()) {
    CHECK(rec.contains("disc_loss"));
    CHECK(rec.contains("disc_acc"));
  }
}

TEST_CASE("budget 0 returns the initial policy") {
  auto env = make_env("gridworld-5x5", SeedStream(0));
  Gail gail(*env, gridworld_demos(*env, 5), tabular_generator(*env), {}, SeedStream(8));
  gail.train(0);
  const auto& pi = dynamic_cast<const TabularPolicy&>(gail.current_policy());
  CHECK(pi.table() == TabularPolicy(20, 25, 4).table());
  CHECK(gail.metrics().size() == 0);
}

TEST_CASE("training is resumable") {
  auto env = make_env("cliffworld", SeedStream(0));
  auto demos = rollout(*make_expert(*env).policy, *env, 5, SeedStream(9));
  Airl a(*env, demos, tabular_generator(*env), {}, SeedStream(10));
  Airl b(*env, demos, tabular_generator(*env), {}, SeedStream(10));
  a.train(5);
  b.train(2);
  b.train(3);
  CHECK(a.discriminator().net() == b.discriminator().net());
  CHECK(dynamic_cast<const TabularPolicy&>(a.current_policy()).table() ==
        dynamic_cast<const TabularPolicy&>(b.current_policy()).table());
  CHECK(a.fresh_disc_stats(4, SeedStream(11)).accuracy ==
        b.fresh_disc_stats(4, SeedStream(11)).accuracy);
}

TEST_CASE("recovered AIRL reward ignores later training") {
  auto env = make_env("gridworld-5x5", SeedStream(0));
  Airl airl(*env, gridworld_demos(*env, 10), tabular_generator(*env), {}, SeedStream(12));
  airl.train(5);
  auto frozen = airl.recovered_reward();
  std::vector<double> before;
  for (std::size_t s = 0; s < 25; ++s) {
    const Vector obs = one_hot(s, 25);
    for (std::size_t a = 0; a < 4; ++a) {
      const double r = frozen.reward({obs, 0, a, obs, -5.0});
      CHECK(r == frozen.reward({obs, 3, a, obs, 0.0}));
      CHECK(r == airl.discriminator().net_output(obs, a));
      before.push_back(r);
    }
  }
  airl.train(5);
  std::size_t i = 0;
  bool any_changed = false;
  for (std::size_t s = 0; s < 25; ++s) {
    const Vector obs = one_hot(s, 25);
    for (std::size_t a = 0; a < 4; ++a, ++i) {
      CHECK(frozen.reward({obs, 0, a, obs, 0.0}) == before[i]);
      any_changed |= airl.discriminator().net_output(obs, a) != before[i];
    }
  }
  CHECK(any_changed);
}

TEST_CASE("saturated discriminator raises a warning in the log") {
  TabularEnv env(bandit(), "bandit");
  std::vector<Trajectory> demos;
  for (int i = 0; i < 8; ++i) {
    Trajectory t;
    t.observations = {Vector{1.0}, Vector{1.0}};
    t.actions = {1};
    demos.push_back(t);
  }
  AdversarialConfig cfg;
  cfg.disc_lr = 0.05;
  cfg.divergence_window = 5;
  Gail gail(env, demos, std::make_unique<FixedOptimizer>(1, 2, 0), cfg, SeedStream(13));
  gail.train(60);
  CHECK(gail.metrics().records().back().contains("warning"));
  CHECK_FALSE(gail.metrics().records().front().contains("warning"));
}

TEST_CASE("constructor validation") {
  auto env = make_env("gridworld-5x5", SeedStream(0));
  CHECK_THROWS_AS(Gail(*env, {}, tabular_generator(*env), {}, SeedStream(0)), Error);
  AdversarialConfig cfg;
  cfg.disc_batch = 1;
  CHECK_THROWS_AS(Gail(*env, gridworld_demos(*env, 1), tabular_generator(*env), cfg, SeedStream(0)),
                  Error);
}
