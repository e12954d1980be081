#include "mimic/bc_dagger.hpp"

#include <cmath>
#include <numeric>

#include "mimic/policy_opt.hpp"

namespace mimic {

BcTrainer::BcTrainer(TransitionBatch demos, std::size_t obs_dim, std::size_t action_count,
                     BcConfig config, const SeedStream& seeds)
    : demos_(std::move(demos)),
      config_(std::move(config)),
      policy_(make_mlp_policy(obs_dim, action_count, config_.hidden,
                              derive_stream(seeds, "policy-init"))),
      adam_(policy_.net().parameter_count(), AdamConfig{config_.lr}),
      shuffle_rng_(derive_stream(seeds, "data-shuffle").rng()) {
  if (demos_.empty()) throw Error("BC needs a nonempty demonstration batch");
  if (config_.batch_size == 0) throw Error("BC batch size must be positive");
  for (std::size_t a : demos_.actions) {
    if (a >= action_count) throw Error("demonstration action out of range");
  }
  last_nll_ = mean_nll();
}

double BcTrainer::mean_nll() const {
  double total = 0.0;
  for (std::size_t i = 0; i < demos_.size(); ++i) {
    total -= policy_.log_prob(demos_.states[i], 0, demos_.actions[i]);
  }
  return total / static_cast<double>(demos_.size());
}

double BcTrainer::train_epochs(std::size_t epochs) {
  Mlp& net = policy_.net();
  const std::size_t N = demos_.size();
  std::vector<std::size_t> order(N);
  GradBuffer grads = net.make_grad();
  Vector out_grad(net.output_dim());
  for (std::size_t e = 0; e < epochs; ++e) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), shuffle_rng_.engine());
    for (std::size_t start = 0; start < N; start += config_.batch_size) {
      const std::size_t end = std::min(N, start + config_.batch_size);
      const double inv = 1.0 / static_cast<double>(end - start);
      grads.zero();
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        std::fill(out_grad.begin(), out_grad.end(), 0.0);
        out_grad[demos_.actions[i]] = -inv;
        net.backward(demos_.states[i], out_grad, grads);
      }
      adam_step(adam_, net.params(), grads.values);
    }
    ++epochs_;
    const double nll = mean_nll();
    Json record{{"epoch", epochs_}, {"nll", nll}};
    if (nll > last_nll_) record["warning"] = "training NLL increased";
    log_.append(std::move(record));
    last_nll_ = nll;
  }
  return last_nll_;
}

double bc_train(BcTrainer& trainer, std::size_t epochs) { return trainer.train_epochs(epochs); }

// ---------------------------------------------------------------------------

DaggerTrainer::DaggerTrainer(const Env& env, ExpertPolicy expert, DaggerConfig config,
                             const SeedStream& seeds)
    : env_(env.clone()),
      expert_(std::move(expert)),
      config_(std::move(config)),
      seeds_(seeds),
      initial_(make_mlp_policy(env.obs_dim(), env.action_count(), config_.bc.hidden,
                               derive_stream(seeds, "policy-init"))) {
  if (!expert_.policy) throw Error("DAgger needs an expert");
  if (config_.beta_decay < 0.0 || config_.beta_decay > 1.0) {
    throw Error("DAgger beta_decay must lie in [0, 1]");
  }
}

double DaggerTrainer::beta(std::size_t round) const {
  return std::pow(config_.beta_decay, static_cast<double>(round));
}

const Policy& DaggerTrainer::current_policy() const {
  if (learner_) return learner_->current_policy();
  return initial_;
}

DaggerRoundSummary DaggerTrainer::round(std::size_t n_episodes) {
  if (n_episodes == 0) throw Error("DAgger round needs at least one episode");
  const double b = beta(round_);
  const MixturePolicy mixture(*expert_.policy, current_policy(), b);
  const auto episodes = rollout(mixture, *env_, n_episodes, derive_stream(seeds_, "round", round_));

  TransitionBatch fresh = flatten(strip_rewards(episodes));
  for (std::size_t i = 0; i < fresh.size(); ++i) {
    fresh.actions[i] = expert_.act(fresh.states[i], fresh.timesteps[i]);
  }
  dataset_.append(fresh);

  learner_ = std::make_unique<BcTrainer>(dataset_, env_->obs_dim(), env_->action_count(),
                                         config_.bc, derive_stream(seeds_, "bc-round", round_));
  const double nll = learner_->train_epochs(config_.bc_epochs);

  DaggerRoundSummary summary{round_, dataset_.size(), b, nll};
  log_.append({{"round", round_}, {"dataset_size", dataset_.size()}, {"beta", b}, {"nll", nll}});
  ++round_;
  return summary;
}

void DaggerTrainer::train(std::size_t rounds) {
  for (std::size_t i = 0; i < rounds; ++i) round(config_.episodes_per_round);
}

}  // namespace mimic
