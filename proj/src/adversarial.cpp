#include "mimic/adversarial.hpp"

#include <cmath>

namespace mimic {

double gail_reward(double logit) { return softplus(logit); }

double airl_reward(double f, double log_prob) { return f - log_prob; }

Discriminator::Discriminator(std::size_t obs_dim, std::size_t action_count,
                             const std::vector<std::size_t>& hidden, const SeedStream& seeds)
    : obs_dim_(obs_dim), action_count_(action_count) {
  std::vector<std::size_t> widths{obs_dim + action_count};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);
  Rng rng = derive_stream(seeds, "disc-init").rng();
  net_ = Mlp::glorot(std::move(widths), Head::Identity, rng);
}

Vector Discriminator::input(std::span<const double> obs, std::size_t action) const {
  if (obs.size() != obs_dim_) throw Error("discriminator: observation size mismatch");
  if (action >= action_count_) throw Error("discriminator: action out of range");
  Vector x(obs.begin(), obs.end());
  x.resize(obs_dim_ + action_count_, 0.0);
  x[obs_dim_ + action] = 1.0;
  return x;
}

double Discriminator::net_output(std::span<const double> obs, std::size_t action) const {
  return net_.forward(input(obs, action))[0];
}

void Discriminator::backward(const StepView& step, double dz, GradBuffer& grads) const {
  const double g[1] = {dz};
  net_.backward(input(step.obs, step.action), g, grads);
}

AirlRecoveredReward::AirlRecoveredReward(Mlp f, std::size_t obs_dim, std::size_t action_count)
    : f_(std::move(f)), obs_dim_(obs_dim), action_count_(action_count) {}

double AirlRecoveredReward::reward(const StepView& step) const {
  if (step.obs.size() != obs_dim_ || step.action >= action_count_) {
    throw Error("recovered reward: input out of range");
  }
  Vector x(step.obs.begin(), step.obs.end());
  x.resize(obs_dim_ + action_count_, 0.0);
  x[obs_dim_ + step.action] = 1.0;
  return f_.forward(x)[0];
}

// ---------------------------------------------------------------------------

DiscStats disc_evaluate(const Discriminator& disc, std::span<const StepView> expert,
                        std::span<const StepView> generator) {
  if (expert.empty() || generator.empty()) throw Error("discriminator batches must be nonempty");
  double loss = 0.0;
  std::size_t correct = 0;
  for (const auto& s : expert) {
    const double z = disc.logit(s);
    loss += softplus(-z);
    correct += z > 0.0;
  }
  for (const auto& s : generator) {
    const double z = disc.logit(s);
    loss += softplus(z);
    correct += z < 0.0;
  }
  const double n = static_cast<double>(expert.size() + generator.size());
  return {loss / n, static_cast<double>(correct) / n};
}

DiscStats disc_update(Discriminator& disc, AdamState& adam, std::span<const StepView> expert,
                      std::span<const StepView> generator) {
  if (expert.empty() || generator.empty()) throw Error("discriminator batches must be nonempty");
  const double inv = 1.0 / static_cast<double>(expert.size() + generator.size());
  GradBuffer grads = disc.net().make_grad();
  for (const auto& s : expert) disc.backward(s, (sigmoid(disc.logit(s)) - 1.0) * inv, grads);
  for (const auto& s : generator) disc.backward(s, sigmoid(disc.logit(s)) * inv, grads);
  adam_step(adam, disc.net().params(), grads.values);
  return disc_evaluate(disc, expert, generator);
}

// ---------------------------------------------------------------------------

ViewBatch::ViewBatch(TransitionBatch batch, const Policy& policy) : data(std::move(batch)) {
  views.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    views[i].obs = data.states[i];
    views[i].t = data.timesteps[i];
    views[i].action = data.actions[i];
    views[i].next_obs = data.next_states[i];
  }
  relabel(policy);
}

void ViewBatch::relabel(const Policy& policy) {
  for (std::size_t i = 0; i < views.size(); ++i) {
    views[i].log_prob = policy.log_prob(views[i].obs, views[i].t, views[i].action);
  }
}

namespace {

TransitionBatch stripped_batch(std::vector<Trajectory> trajs) {
  return flatten(strip_rewards(std::move(trajs)));
}

}  // namespace

AdversarialTrainer::AdversarialTrainer(const Env& env, std::vector<Trajectory> demos,
                                       std::unique_ptr<Discriminator> disc,
                                       std::unique_ptr<PolicyOptimizer> generator,
                                       AdversarialConfig config, const SeedStream& seeds)
    : env_(env.clone()),
      disc_(std::move(disc)),
      generator_(std::move(generator)),
      config_(std::move(config)),
      seeds_(seeds) {
  if (demos.empty()) throw Error("adversarial training needs expert demonstrations");
  if (!disc_ || !generator_) throw Error("adversarial training needs a discriminator and generator");
  if (config_.disc_batch < 2) throw Error("discriminator batch must hold at least two samples");
  if (config_.gen_episodes == 0) throw Error("generator rollouts per iteration must be positive");
  for (const auto& d : demos) validate(d, env.action_count());
  expert_ = ViewBatch(stripped_batch(std::move(demos)), generator_->policy());
  adam_ = AdamState(disc_->net().parameter_count(), AdamConfig{config_.disc_lr});
}

std::vector<StepView> AdversarialTrainer::sample(const ViewBatch& batch, std::size_t n,
                                                 Rng& rng) const {
  std::vector<StepView> out(n);
  for (auto& v : out) v = batch.views[rng.index(batch.views.size())];
  return out;
}

void AdversarialTrainer::train(std::size_t iterations) {
  const std::size_t half = config_.disc_batch / 2;
  for (std::size_t k = 0; k < iterations; ++k) {
    const Policy& policy = generator_->policy();
    const auto rollouts =
        rollout(policy, *env_, config_.gen_episodes, derive_stream(seeds_, "gen-rollout", iter_));
    trace_.push_back("collect");
    const double env_return = mean_return(rollouts);  // reporting only
    ViewBatch gen(stripped_batch(rollouts), policy);
    if (disc_->uses_log_prob()) expert_.relabel(policy);

    Rng rng = derive_stream(seeds_, "disc-batch", iter_).rng();
    DiscStats stats;
    for (std::size_t d = 0; d < config_.disc_steps; ++d) {
      const auto e = sample(expert_, half, rng);
      const auto g = sample(gen, half, rng);
      stats = disc_update(*disc_, adam_, e, g);
      trace_.push_back("disc");
    }

    generator_->improve(DiscriminatorReward(*disc_), config_.gen_steps);
    trace_.push_back("gen");

    Json record{{"iter", iter_},
                {"disc_loss", stats.loss},
                {"disc_acc", stats.accuracy},
                {"mean_return", env_return}};
    saturated_ = (config_.disc_steps > 0 && stats.accuracy == 1.0) ? saturated_ + 1 : 0;
    if (config_.divergence_window > 0 && saturated_ >= config_.divergence_window) {
      record["warning"] = "discriminator accuracy pinned at 1.0 for " +
                          std::to_string(saturated_) + " iterations";
    }
    log_.append(std::move(record));
    ++iter_;
  }
}

DiscStats AdversarialTrainer::fresh_disc_stats(std::size_t batches, const SeedStream& seeds) const {
  const std::size_t half = config_.disc_batch / 2;
  const Policy& policy = generator_->policy();
  const auto rollouts = rollout(policy, *env_, config_.gen_episodes, derive_stream(seeds, "rollout"));
  ViewBatch gen(stripped_batch(rollouts), policy);
  ViewBatch expert(expert_.data, policy);
  Rng rng = derive_stream(seeds, "batch").rng();
  DiscStats total;
  for (std::size_t b = 0; b < batches; ++b) {
    const auto e = sample(expert, half, rng);
    const auto g = sample(gen, half, rng);
    const auto s = disc_evaluate(*disc_, e, g);
    total.loss += s.loss / static_cast<double>(batches);
    total.accuracy += s.accuracy / static_cast<double>(batches);
  }
  return total;
}

// ---------------------------------------------------------------------------

Gail::Gail(const Env& env, std::vector<Trajectory> demos,
           std::unique_ptr<PolicyOptimizer> generator, AdversarialConfig config,
           const SeedStream& seeds)
    : AdversarialTrainer(env, std::move(demos),
                         std::make_unique<GailDiscriminator>(env.obs_dim(), env.action_count(),
                                                             config.hidden, seeds),
                         std::move(generator), config, seeds) {}

Airl::Airl(const Env& env, std::vector<Trajectory> demos,
           std::unique_ptr<PolicyOptimizer> generator, AdversarialConfig config,
           const SeedStream& seeds)
    : AdversarialTrainer(env, std::move(demos),
                         std::make_unique<AirlDiscriminator>(env.obs_dim(), env.action_count(),
                                                             config.hidden, seeds),
                         std::move(generator), config, seeds) {}

AirlRecoveredReward Airl::recovered_reward() const {
  const auto& d = discriminator();
  return AirlRecoveredReward(d.net(), d.obs_dim(), d.action_count());
}

}  // namespace mimic
