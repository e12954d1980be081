#include "mimic/policy.hpp"

#include <algorithm>
#include <cmath>

namespace mimic {

double Policy::log_prob(std::span<const double> obs, std::size_t t, std::size_t action) const {
  const Vector p = action_probs(obs, t);
  return std::log(p.at(action));
}

Json Policy::to_json() const { throw Error("policy type does not support checkpoints"); }

Vector Policy::action_probs(std::span<const double> obs, std::size_t t) const {
  Vector out(action_count());
  action_probs(obs, t, out);
  return out;
}

std::size_t Policy::sample(std::span<const double> obs, std::size_t t, Rng& rng) const {
  const Vector p = action_probs(obs, t);
  return rng.categorical(p);
}

std::size_t Policy::greedy(std::span<const double> obs, std::size_t t) const {
  const Vector p = action_probs(obs, t);
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

std::size_t one_hot_index(std::span<const double> obs) {
  std::size_t hot = obs.size();
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (obs[i] == 1.0) {
      if (hot != obs.size()) throw Error("observation is not one-hot");
      hot = i;
    } else if (obs[i] != 0.0) {
      throw Error("observation is not one-hot");
    }
  }
  if (hot == obs.size()) throw Error("observation is not one-hot");
  return hot;
}

Vector one_hot(std::size_t index, std::size_t size) {
  Vector v(size, 0.0);
  v.at(index) = 1.0;
  return v;
}

void UniformPolicy::action_probs(std::span<const double> obs, std::size_t,
                                 std::span<double> out) const {
  if (obs.size() != obs_dim_) throw Error("UniformPolicy: observation dimension mismatch");
  std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(action_count_));
}

Json UniformPolicy::to_json() const {
  return {{"v", kFormatVersion}, {"kind", "uniform"}, {"obs_dim", obs_dim_},
          {"actions", action_count_}};
}

TabularPolicy::TabularPolicy(std::size_t horizon, std::size_t states, std::size_t actions)
    : horizon_(horizon),
      states_(states),
      actions_(actions),
      probs_(horizon * states * actions, 1.0 / static_cast<double>(actions)) {}

TabularPolicy::TabularPolicy(std::size_t horizon, std::size_t states, std::size_t actions,
                             std::vector<double> probs)
    : horizon_(horizon), states_(states), actions_(actions), probs_(std::move(probs)) {
  if (probs_.size() != horizon * states * actions) throw Error("TabularPolicy: table size mismatch");
}

void TabularPolicy::action_probs(std::span<const double> obs, std::size_t t,
                                 std::span<double> out) const {
  if (obs.size() != states_) throw Error("TabularPolicy: observation dimension mismatch");
  const std::size_t s = one_hot_index(obs);
  const auto r = row(std::min(t, horizon_ - 1), s);
  std::copy(r.begin(), r.end(), out.begin());
}

void TabularPolicy::validate(double tol) const {
  for (std::size_t t = 0; t < horizon_; ++t) {
    for (std::size_t s = 0; s < states_; ++s) {
      double sum = 0.0;
      for (double p : row(t, s)) {
        if (p < -tol || !std::isfinite(p)) throw Error("TabularPolicy: invalid probability");
        sum += p;
      }
      if (std::abs(sum - 1.0) > tol) throw Error("TabularPolicy: row does not sum to 1");
    }
  }
}

Json TabularPolicy::to_json() const {
  return {{"v", kFormatVersion}, {"kind", "tabular"}, {"horizon", horizon_},
          {"states", states_},   {"actions", actions_}, {"probs", probs_}};
}

MlpPolicy::MlpPolicy(Mlp net) : net_(std::move(net)) {
  if (net_.head() != Head::LogSoftmax) throw Error("MlpPolicy requires a log-softmax head");
}

void MlpPolicy::action_probs(std::span<const double> obs, std::size_t,
                             std::span<double> out) const {
  const Vector logp = net_.forward(obs);
  for (std::size_t a = 0; a < logp.size(); ++a) out[a] = std::exp(logp[a]);
}

double MlpPolicy::log_prob(std::span<const double> obs, std::size_t, std::size_t action) const {
  return net_.forward(obs).at(action);
}

Json MlpPolicy::to_json() const {
  Json record = mimic::to_json(net_);
  record["kind"] = "mlp";
  return record;
}

MixturePolicy::MixturePolicy(const Policy& first, const Policy& second, double beta)
    : first_(first), second_(second), beta_(beta) {
  if (beta < 0.0 || beta > 1.0) throw Error("MixturePolicy: beta must lie in [0, 1]");
  if (first.action_count() != second.action_count() || first.obs_dim() != second.obs_dim()) {
    throw Error("MixturePolicy: component spaces differ");
  }
}

void MixturePolicy::action_probs(std::span<const double> obs, std::size_t t,
                                 std::span<double> out) const {
  if (beta_ == 1.0) return first_.action_probs(obs, t, out);
  if (beta_ == 0.0) return second_.action_probs(obs, t, out);
  Vector a(out.size());
  Vector b(out.size());
  first_.action_probs(obs, t, a);
  second_.action_probs(obs, t, b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = beta_ * a[i] + (1.0 - beta_) * b[i];
}

void GreedyPolicy::action_probs(std::span<const double> obs, std::size_t t,
                                std::span<double> out) const {
  const std::size_t a = base_.greedy(obs, t);
  std::fill(out.begin(), out.end(), 0.0);
  out[a] = 1.0;
}

FunctionPolicy::FunctionPolicy(std::size_t obs_dim, std::size_t action_count, Fn fn,
                               std::string name)
    : obs_dim_(obs_dim), action_count_(action_count), fn_(std::move(fn)), name_(std::move(name)) {}

void FunctionPolicy::action_probs(std::span<const double> obs, std::size_t t,
                                  std::span<double> out) const {
  if (obs.size() != obs_dim_) throw Error("FunctionPolicy: observation dimension mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  out[fn_(obs, t)] = 1.0;
}

Json FunctionPolicy::to_json() const {
  return {{"v", kFormatVersion}, {"kind", "builtin"}, {"name", name_}, {"obs_dim", obs_dim_},
          {"actions", action_count_}};
}

TabularPolicy tabulate(const Policy& policy, std::size_t horizon, std::size_t states) {
  if (policy.obs_dim() != states) throw Error("tabulate: policy is not over one-hot states");
  const std::size_t A = policy.action_count();
  TabularPolicy out(horizon, states, A);
  for (std::size_t s = 0; s < states; ++s) {
    const Vector obs = one_hot(s, states);
    for (std::size_t t = 0; t < horizon; ++t) policy.action_probs(obs, t, out.row(t, s));
  }
  return out;
}

std::unique_ptr<Policy> policy_from_json(const Json& record) {
  if (record.value("v", 0) != kFormatVersion) throw Error("unsupported checkpoint version");
  const std::string kind = record.value("kind", "");
  if (kind == "uniform") {
    return std::make_unique<UniformPolicy>(record.at("obs_dim").get<std::size_t>(),
                                           record.at("actions").get<std::size_t>());
  }
  if (kind == "tabular") {
    auto p = std::make_unique<TabularPolicy>(
        record.at("horizon").get<std::size_t>(), record.at("states").get<std::size_t>(),
        record.at("actions").get<std::size_t>(), record.at("probs").get<std::vector<double>>());
    p->validate(1e-9);
    return p;
  }
  if (kind == "mlp") return std::make_unique<MlpPolicy>(mlp_from_json(record));
  throw Error("unknown policy checkpoint kind '" + kind + "'");
}

}  // namespace mimic
