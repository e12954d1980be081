#pragma once

// Trajectory data model, flattened transition batches and seeded random streams.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mimic {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Vector = std::vector<double>;

inline constexpr std::size_t kAnyActionCount = std::numeric_limits<std::size_t>::max();

/// One fixed-horizon episode. Rewards are absent for reward-free demonstrations.
struct Trajectory {
  std::vector<Vector> observations;  // T + 1 entries
  std::vector<std::size_t> actions;  // T entries
  std::optional<std::vector<double>> rewards;
  bool terminal = false;

  std::size_t length() const { return actions.size(); }
  double total_reward() const;

  bool operator==(const Trajectory&) const = default;
};

/// Throws Error if the trajectory breaks its length or action-range invariants.
void validate(const Trajectory& trajectory, std::size_t action_count = kAnyActionCount);

/// Drops reward channels so downstream learners cannot read ground truth.
std::vector<Trajectory> strip_rewards(std::vector<Trajectory> trajectories);

/// Parallel flat arrays, one entry per transition. Missing rewards are NaN.
struct TransitionBatch {
  std::vector<Vector> states;
  std::vector<std::size_t> actions;
  std::vector<Vector> next_states;
  std::vector<double> rewards;
  std::vector<bool> dones;
  std::vector<std::size_t> timesteps;

  std::size_t size() const { return actions.size(); }
  bool empty() const { return actions.empty(); }
  void append(const TransitionBatch& other);
};

/// Concatenates trajectories in order; dones marks each trajectory's final step.
TransitionBatch flatten(std::span<const Trajectory> trajectories);

/// Thin wrapper over a 64-bit Mersenne twister with the draws the library needs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  bool bernoulli(double p) { return uniform() < p; }
  /// Samples an index from unnormalized non-negative weights.
  std::size_t categorical(std::span<const double> weights);
  std::uint64_t next() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// A named, reproducible source of seeds. Substreams are derived by name.
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t root_seed) : root_(root_seed), state_(mix(root_seed)) {}

  std::uint64_t root_seed() const { return root_; }
  std::uint64_t seed() const { return state_; }
  Rng rng() const { return Rng(state_); }

  bool operator==(const SeedStream&) const = default;

 private:
  friend SeedStream derive_stream(const SeedStream& seeds, std::string_view name);
  SeedStream(std::uint64_t root, std::uint64_t state) : root_(root), state_(state) {}
  static std::uint64_t mix(std::uint64_t x);

  std::uint64_t root_;
  std::uint64_t state_;
};

/// Pure function of (parent stream, name). Throws on an empty name.
SeedStream derive_stream(const SeedStream& seeds, std::string_view name);
SeedStream derive_stream(const SeedStream& seeds, std::string_view name, std::size_t index);

}  // namespace mimic
