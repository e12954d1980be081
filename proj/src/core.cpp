#include "mimic/core.hpp"

#include <cmath>
#include <numeric>

namespace mimic {

double Trajectory::total_reward() const {
  if (!rewards) throw Error("trajectory has no rewards");
  return std::accumulate(rewards->begin(), rewards->end(), 0.0);
}

void validate(const Trajectory& trajectory, std::size_t action_count) {
  if (trajectory.observations.size() != trajectory.actions.size() + 1) {
    throw Error("observation count " + std::to_string(trajectory.observations.size()) +
                " != action count + 1 (" + std::to_string(trajectory.actions.size() + 1) + ")");
  }
  if (trajectory.rewards && trajectory.rewards->size() != trajectory.actions.size()) {
    throw Error("reward count " + std::to_string(trajectory.rewards->size()) +
                " != action count " + std::to_string(trajectory.actions.size()));
  }
  for (std::size_t a : trajectory.actions) {
    if (a >= action_count) throw Error("action index " + std::to_string(a) + " out of range");
  }
  if (!trajectory.observations.empty()) {
    const std::size_t dim = trajectory.observations.front().size();
    for (const auto& obs : trajectory.observations) {
      if (obs.size() != dim) throw Error("ragged observation vectors");
    }
  }
}

std::vector<Trajectory> strip_rewards(std::vector<Trajectory> trajectories) {
  for (auto& t : trajectories) t.rewards.reset();
  return trajectories;
}

void TransitionBatch::append(const TransitionBatch& other) {
  states.insert(states.end(), other.states.begin(), other.states.end());
  actions.insert(actions.end(), other.actions.begin(), other.actions.end());
  next_states.insert(next_states.end(), other.next_states.begin(), other.next_states.end());
  rewards.insert(rewards.end(), other.rewards.begin(), other.rewards.end());
  dones.insert(dones.end(), other.dones.begin(), other.dones.end());
  timesteps.insert(timesteps.end(), other.timesteps.begin(), other.timesteps.end());
}

TransitionBatch flatten(std::span<const Trajectory> trajectories) {
  TransitionBatch batch;
  std::size_t total = 0;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    try {
      validate(trajectories[i]);
    } catch (const Error& e) {
      throw Error("trajectory " + std::to_string(i) + ": " + e.what());
    }
    total += trajectories[i].length();
  }
  batch.states.reserve(total);
  batch.actions.reserve(total);
  batch.next_states.reserve(total);
  batch.rewards.reserve(total);
  batch.dones.reserve(total);
  batch.timesteps.reserve(total);
  for (const auto& traj : trajectories) {
    const std::size_t T = traj.length();
    for (std::size_t t = 0; t < T; ++t) {
      batch.states.push_back(traj.observations[t]);
      batch.actions.push_back(traj.actions[t]);
      batch.next_states.push_back(traj.observations[t + 1]);
      batch.rewards.push_back(traj.rewards ? (*traj.rewards)[t]
                                           : std::numeric_limits<double>::quiet_NaN());
      batch.dones.push_back(t + 1 == T);
      batch.timesteps.push_back(t);
    }
  }
  return batch;
}

std::size_t Rng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw Error("categorical: weights must have positive mass");
  double u = uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  // Rounding can leave u just above the last bucket; return the last nonzero one.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return weights.size() - 1;
}

std::uint64_t SeedStream::mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

SeedStream derive_stream(const SeedStream& seeds, std::string_view name) {
  if (name.empty()) throw Error("derive_stream: name must be nonempty");
  // FNV-1a over the name, folded into the parent state.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return SeedStream(seeds.root_, SeedStream::mix(seeds.state_ ^ SeedStream::mix(h)));
}

SeedStream derive_stream(const SeedStream& seeds, std::string_view name, std::size_t index) {
  return derive_stream(seeds, std::string(name) + "/" + std::to_string(index));
}

}  // namespace mimic
