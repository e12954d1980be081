#include "mimic/preferences.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace mimic {

Fragment slice(const Trajectory& trajectory, std::size_t offset, std::size_t k,
               std::size_t trajectory_id) {
  if (offset + k > trajectory.length()) throw Error("fragment slice out of bounds");
  Fragment f;
  f.observations.assign(trajectory.observations.begin() + offset,
                        trajectory.observations.begin() + offset + k + 1);
  f.actions.assign(trajectory.actions.begin() + offset, trajectory.actions.begin() + offset + k);
  f.trajectory = trajectory_id;
  f.offset = offset;
  return f;
}

std::vector<PreferencePair> sample_fragments(std::span<const Trajectory> trajectories,
                                             std::size_t k, std::size_t n_pairs,
                                             const SeedStream& seeds) {
  if (n_pairs == 0) return {};
  if (trajectories.empty()) throw Error("fragment sampling needs trajectories");
  if (k == 0) throw Error("fragment length must be positive");
  for (const auto& t : trajectories) {
    if (t.length() < k) {
      throw Error("fragment length " + std::to_string(k) + " exceeds trajectory length " +
                  std::to_string(t.length()));
    }
  }
  Rng rng = seeds.rng();
  auto draw = [&] {
    const std::size_t i = rng.index(trajectories.size());
    const std::size_t offset = rng.index(trajectories[i].length() - k + 1);
    return slice(trajectories[i], offset, k, i);
  };
  std::vector<PreferencePair> pairs(n_pairs);
  for (auto& p : pairs) {
    p.a = draw();
    p.b = draw();
  }
  return pairs;
}

// ---------------------------------------------------------------------------

SyntheticLabeler::SyntheticLabeler(const Env& env, double tau, const SeedStream& seeds,
                                   double eps)
    : env_(env.clone()), tau_(tau), eps_(eps), seeds_(seeds) {
  if (!(tau >= 0.0)) throw Error("labeler temperature must be non-negative");
}

double SyntheticLabeler::true_return(const Fragment& fragment) const {
  double r = 0.0;
  for (std::size_t t = 0; t < fragment.length(); ++t) {
    r += env_->true_reward(fragment.observations[t], fragment.actions[t]);
  }
  return r;
}

void SyntheticLabeler::label(std::span<PreferencePair> pairs) {
  Rng rng = derive_stream(seeds_, "labels", calls_++).rng();
  for (auto& p : pairs) {
    if (p.a.length() != p.b.length()) throw Error("compared fragments differ in length");
    const double diff = true_return(p.a) - true_return(p.b);
    if (tau_ == 0.0) {
      p.label = std::abs(diff) <= eps_ ? 0.5 : (diff > 0.0 ? 1.0 : 0.0);
    } else {
      p.label = rng.bernoulli(sigmoid(diff / tau_)) ? 1.0 : 0.0;
    }
    ++queries_;
  }
}

// ---------------------------------------------------------------------------

RewardModel::RewardModel(std::size_t obs_dim, std::size_t action_count,
                         const std::vector<std::size_t>& hidden, const SeedStream& seeds)
    : action_count_(action_count) {
  std::vector<std::size_t> widths{obs_dim + action_count};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);
  Rng rng = derive_stream(seeds, "reward-init").rng();
  net_ = Mlp::glorot(std::move(widths), Head::Identity, rng);
}

RewardModel::RewardModel(Mlp net, std::size_t action_count)
    : net_(std::move(net)), action_count_(action_count) {
  if (net_.output_dim() != 1 || net_.input_dim() <= action_count_) {
    throw Error("reward model network has the wrong shape");
  }
}

Vector RewardModel::input(std::span<const double> obs, std::size_t action) const {
  if (obs.size() != obs_dim()) throw Error("reward model: observation size mismatch");
  if (action >= action_count_) throw Error("reward model: action out of range");
  Vector x(obs.begin(), obs.end());
  x.resize(net_.input_dim(), 0.0);
  x[obs.size() + action] = 1.0;
  return x;
}

double RewardModel::step_reward(std::span<const double> obs, std::size_t action) const {
  return net_.forward(input(obs, action))[0];
}

double RewardModel::reward(const StepView& step) const { return step_reward(step.obs, step.action); }

double RewardModel::fragment_return(const Fragment& fragment) const {
  double r = 0.0;
  for (std::size_t t = 0; t < fragment.length(); ++t) {
    r += step_reward(fragment.observations[t], fragment.actions[t]);
  }
  return r;
}

void RewardModel::accumulate(const Fragment& fragment, double scale, GradBuffer& grads) const {
  const double g[1] = {scale};
  for (std::size_t t = 0; t < fragment.length(); ++t) {
    net_.backward(input(fragment.observations[t], fragment.actions[t]), g, grads);
  }
}

double bradley_terry_prob(double return_a, double return_b) {
  return sigmoid(return_a - return_b);
}

double bradley_terry_prob(const RewardModel& model, const PreferencePair& pair) {
  return bradley_terry_prob(model.fragment_return(pair.a), model.fragment_return(pair.b));
}

double preference_loss(const RewardModel& model, const PreferencePair& pair) {
  const double z = model.fragment_return(pair.a) - model.fragment_return(pair.b);
  // -y log sigmoid(z) - (1 - y) log sigmoid(-z)
  return softplus(z) - pair.label * z;
}

double reward_model_update(RewardModel& model, AdamState& adam,
                           std::span<const PreferencePair> pairs, std::size_t batch_size,
                           Rng& rng) {
  if (pairs.empty()) throw Error("reward model update needs labeled pairs");
  if (batch_size == 0) throw Error("batch size must be positive");
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng.engine());
  GradBuffer grads = model.net().make_grad();
  double total = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    const double inv = 1.0 / static_cast<double>(end - start);
    grads.zero();
    double loss = 0.0;
    for (std::size_t k = start; k < end; ++k) {
      const auto& p = pairs[order[k]];
      const double z = model.fragment_return(p.a) - model.fragment_return(p.b);
      loss += softplus(z) - p.label * z;
      const double dz = (sigmoid(z) - p.label) * inv;
      model.accumulate(p.a, dz, grads);
      model.accumulate(p.b, -dz, grads);
    }
    adam_step(adam, model.net().params(), grads.values);
    total += loss * inv;
    ++batches;
  }
  return total / static_cast<double>(batches);
}

double preference_accuracy(const RewardModel& model, std::span<const PreferencePair> pairs) {
  std::size_t n = 0, correct = 0;
  for (const auto& p : pairs) {
    if (p.label == 0.5) continue;
    ++n;
    const double prob = bradley_terry_prob(model, p);
    correct += (p.label == 1.0) ? prob > 0.5 : prob < 0.5;
  }
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(correct) / static_cast<double>(n);
}

// ---------------------------------------------------------------------------

DrlhpTrainer::DrlhpTrainer(const Env& env, SyntheticLabeler labeler,
                           std::unique_ptr<PolicyOptimizer> optimizer, DrlhpConfig config,
                           const SeedStream& seeds)
    : env_(env.clone()),
      labeler_(std::move(labeler)),
      optimizer_(std::move(optimizer)),
      config_(std::move(config)),
      seeds_(seeds),
      model_(env.obs_dim(), env.action_count(), config_.hidden, seeds),
      adam_(model_.net().parameter_count(), AdamConfig{config_.lr}),
      shuffle_rng_(derive_stream(seeds, "pair-shuffle").rng()) {
  if (!optimizer_) throw Error("DRLHP needs a policy optimizer");
  if (config_.fragment_length == 0 || config_.fragment_length > env.horizon()) {
    throw Error("fragment length must lie in [1, horizon]");
  }
  if (config_.holdout_fraction < 0.0 || config_.holdout_fraction >= 1.0) {
    throw Error("holdout fraction must lie in [0, 1)");
  }
}

void DrlhpTrainer::train(std::size_t rounds) {
  for (std::size_t r = 0; r < rounds; ++r) {
    const auto episodes = strip_rewards(rollout(optimizer_->policy(), *env_,
                                                config_.episodes_per_round,
                                                derive_stream(seeds_, "rollout", round_)));
    auto pairs = sample_fragments(episodes, config_.fragment_length, config_.pairs_per_round,
                                  derive_stream(seeds_, "fragments", round_));
    labeler_.label(pairs);
    const auto n_held = static_cast<std::size_t>(
        std::floor(config_.holdout_fraction * static_cast<double>(pairs.size())));
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      (i + n_held >= pairs.size() ? heldout_ : train_).push_back(std::move(pairs[i]));
    }

    double loss = std::numeric_limits<double>::quiet_NaN();
    if (!train_.empty()) {
      for (std::size_t e = 0; e < config_.model_epochs; ++e) {
        loss = reward_model_update(model_, adam_, train_, config_.batch_size, shuffle_rng_);
      }
    }
    optimizer_->improve(model_, config_.gen_steps);

    Json record{{"round", round_}, {"queries", queries()}, {"loss", loss}};
    const double acc = heldout_accuracy();
    record["heldout_acc"] = std::isnan(acc) ? Json(nullptr) : Json(acc);
    log_.append(std::move(record));
    ++round_;
  }
}

// ---------------------------------------------------------------------------

Json to_json(const Fragment& fragment) {
  return {{"obs", fragment.observations},
          {"acts", fragment.actions},
          {"traj", fragment.trajectory},
          {"offset", fragment.offset}};
}

Fragment fragment_from_json(const Json& record) {
  Fragment f;
  f.observations = record.at("obs").get<std::vector<Vector>>();
  f.actions = record.at("acts").get<std::vector<std::size_t>>();
  f.trajectory = record.at("traj").get<std::size_t>();
  f.offset = record.at("offset").get<std::size_t>();
  if (f.observations.size() != f.actions.size() + 1) {
    throw Error("fragment needs one more observation than actions");
  }
  return f;
}

Json to_json(const PreferencePair& pair) {
  return {{"v", kFormatVersion}, {"a", to_json(pair.a)}, {"b", to_json(pair.b)},
          {"label", pair.label}};
}

PreferencePair preference_from_json(const Json& record) {
  if (record.contains("v") && record.at("v").get<int>() != kFormatVersion) {
    throw Error("unsupported format version " + record.at("v").dump());
  }
  PreferencePair p{fragment_from_json(record.at("a")), fragment_from_json(record.at("b")),
                   record.at("label").get<double>()};
  if (p.label != 0.0 && p.label != 0.5 && p.label != 1.0) {
    throw Error("preference label must be 0, 0.5 or 1");
  }
  if (p.a.length() != p.b.length()) throw Error("compared fragments differ in length");
  return p;
}

void save_preferences(std::span<const PreferencePair> pairs, const std::filesystem::path& path) {
  std::vector<Json> records;
  records.reserve(pairs.size());
  for (const auto& p : pairs) records.push_back(to_json(p));
  write_json_lines(records, path);
}

std::vector<PreferencePair> load_preferences(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<PreferencePair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(preference_from_json(Json::parse(line)));
    } catch (const std::exception& e) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace mimic
