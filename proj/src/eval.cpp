#include "mimic/eval.hpp"

#include <omp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "mimic/runner.hpp"

namespace mimic {

namespace {

constexpr std::array<double, 30> kT975 = {
    12.7062, 4.3027, 3.1824, 2.7764, 2.5706, 2.4469, 2.3646, 2.3060, 2.2622, 2.2281,
    2.2010,  2.1788, 2.1604, 2.1448, 2.1314, 2.1199, 2.1098, 2.1009, 2.0930, 2.0860,
    2.0796,  2.0739, 2.0687, 2.0639, 2.0595, 2.0555, 2.0518, 2.0484, 2.0452, 2.0423};

std::string format_double(double x) {
  // Shortest decimal that round-trips, via the JSON serializer.
  return Json(x).dump();
}

std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  return buf;
}

}  // namespace

double t_quantile_975(std::size_t df) {
  if (df == 0) throw Error("t quantile needs at least one degree of freedom");
  if (df <= kT975.size()) return kT975[df - 1];
  // Cornish-Fisher expansion around the normal quantile.
  const double z = 1.959963984540054;
  const double d = static_cast<double>(df);
  const double z3 = z * z * z, z5 = z3 * z * z, z7 = z5 * z * z, z9 = z7 * z * z;
  const double g1 = (z3 + z) / 4.0;
  const double g2 = (5 * z5 + 16 * z3 + 3 * z) / 96.0;
  const double g3 = (3 * z7 + 19 * z5 + 17 * z3 - 15 * z) / 384.0;
  const double g4 = (79 * z9 + 776 * z7 + 1482 * z5 - 1920 * z3 - 945 * z) / 92160.0;
  return z + g1 / d + g2 / (d * d) + g3 / (d * d * d) + g4 / (d * d * d * d);
}

ConfidenceInterval t_confidence_interval(std::span<const double> per_seed_means, double level) {
  if (level != 0.95) throw Error("only 95% intervals are supported");
  const std::size_t n = per_seed_means.size();
  if (n < 2) throw Error("a confidence interval needs at least 2 samples");
  const double mean = std::accumulate(per_seed_means.begin(), per_seed_means.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : per_seed_means) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return {mean, t_quantile_975(n - 1) * sd / std::sqrt(static_cast<double>(n))};
}

double normalized_return(double mean, double random_mean, double expert_mean) {
  const double gap = expert_mean - random_mean;
  if (gap == 0.0) throw Error("normalized_return: expert and random returns coincide");
  return (mean - random_mean) / gap;
}

EvalStats summarize(std::span<const double> per_seed_means, double random_mean,
                    double expert_mean) {
  EvalStats stats;
  stats.n = per_seed_means.size();
  if (stats.n == 0) throw Error("summarize: no samples");
  if (stats.n >= 2) {
    const auto ci = t_confidence_interval(per_seed_means);
    stats.mean = ci.mean;
    double ss = 0.0;
    for (double x : per_seed_means) ss += (x - ci.mean) * (x - ci.mean);
    stats.std_error = std::sqrt(ss / static_cast<double>(stats.n - 1)) /
                      std::sqrt(static_cast<double>(stats.n));
    stats.ci_low = ci.mean - ci.half_width;
    stats.ci_high = ci.mean + ci.half_width;
  } else {
    stats.mean = stats.ci_low = stats.ci_high = per_seed_means[0];
  }
  stats.normalized = normalized_return(stats.mean, random_mean, expert_mean);
  return stats;
}

double evaluate_policy(const Policy& policy, const Env& env, std::size_t episodes,
                       const SeedStream& seeds, EvalMode mode) {
  if (episodes == 0) throw Error("evaluation needs at least one episode");
  if (mode == EvalMode::Greedy) {
    const GreedyPolicy greedy(policy);
    return mean_return(rollout(greedy, env, episodes, seeds));
  }
  return mean_return(rollout(policy, env, episodes, seeds));
}

namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

SeedStream eval_stream(std::uint64_t seed) { return derive_stream(SeedStream(seed), "eval"); }

}  // namespace

Baselines compute_baselines(const Env& env, std::size_t n_seeds, std::size_t episodes,
                            std::uint64_t root_seed) {
  if (n_seeds == 0) throw Error("baselines need at least one seed");
  const UniformPolicy random(env.obs_dim(), env.action_count());
  const auto expert = make_expert(env);
  Baselines b;
  for (std::size_t i = 0; i < n_seeds; ++i) {
    const auto seeds = eval_stream(root_seed + i);
    b.random_per_seed.push_back(evaluate_policy(random, env, episodes, seeds, EvalMode::Sample));
    b.expert_per_seed.push_back(
        evaluate_policy(*expert.policy, env, episodes, seeds, EvalMode::Greedy));
  }
  b.random_mean = mean_of(b.random_per_seed);
  b.expert_mean = mean_of(b.expert_per_seed);
  return b;
}

Json to_json(const Baselines& b) {
  return {{"v", kFormatVersion},
          {"random", b.random_per_seed},
          {"expert", b.expert_per_seed}};
}

Baselines baselines_from_json(const Json& record) {
  Baselines b;
  b.random_per_seed = record.at("random").get<std::vector<double>>();
  b.expert_per_seed = record.at("expert").get<std::vector<double>>();
  if (b.random_per_seed.empty() || b.expert_per_seed.empty()) throw Error("empty baseline record");
  b.random_mean = mean_of(b.random_per_seed);
  b.expert_mean = mean_of(b.expert_per_seed);
  return b;
}

// ---------------------------------------------------------------------------

std::vector<BenchmarkCell> run_benchmark(const std::vector<SuiteEntry>& suite,
                                         const BenchmarkOptions& options) {
  if (options.n_seeds == 0) throw Error("benchmark needs at least one seed");
  std::vector<std::string> envs;
  for (const auto& e : suite) {
    if (std::find(envs.begin(), envs.end(), e.env) == envs.end()) envs.push_back(e.env);
  }

  // Resolve every config up front so usage errors surface before any training.
  std::vector<RunConfig> configs;
  for (const auto& e : suite) {
    RunConfig c;
    c.env = e.env;
    c.algorithm = e.algorithm;
    c.budget = e.budget;
    c.n_demos = options.n_demos;
    c.hyper = e.hyper;
    c.seed = options.root_seed;
    configs.push_back(c.resolved());
  }

  std::vector<BenchmarkCell> cells;
  std::map<std::string, Baselines> baselines;
  for (const auto& name : envs) {
    const auto env = make_env(name, SeedStream(options.root_seed));
    auto b = compute_baselines(*env, options.n_seeds, options.eval_episodes, options.root_seed);
    cells.push_back({"Random", name, b.random_per_seed, {}, {}});
    cells.push_back({"Expert", name, b.expert_per_seed, {}, {}});
    baselines.emplace(name, std::move(b));
  }
  const std::size_t first = cells.size();
  for (const auto& c : configs) cells.push_back({c.algorithm, c.env, {}, {}, {}});

  const std::size_t n_seeds = options.n_seeds;
  const std::size_t n_tasks = configs.size() * n_seeds;
  std::vector<double> results(n_tasks, 0.0);
  std::vector<std::string> errors(n_tasks);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t task = 0; task < n_tasks; ++task) {
    const std::size_t cell = task / n_seeds, seed = task % n_seeds;
    try {
      RunConfig c = configs[cell];
      c.seed = options.root_seed + seed;
      const TrainedRun run = train_run(c);
      results[task] = evaluate_policy(run.algorithm->current_policy(), *run.env,
                                      options.eval_episodes, eval_stream(c.seed),
                                      EvalMode::Greedy);
    } catch (const std::exception& e) {
      errors[task] = e.what();
    }
  }

  for (std::size_t k = 0; k < configs.size(); ++k) {
    BenchmarkCell& cell = cells[first + k];
    for (std::size_t s = 0; s < n_seeds; ++s) {
      const std::size_t task = k * n_seeds + s;
      if (!errors[task].empty()) {
        cell.error = "seed " + std::to_string(options.root_seed + s) + ": " + errors[task];
        cell.per_seed_means.clear();
        break;
      }
      cell.per_seed_means.push_back(results[task]);
    }
  }
  for (auto& cell : cells) {
    if (!cell.ok()) continue;
    const auto& b = baselines.at(cell.env);
    cell.stats = summarize(cell.per_seed_means, b.random_mean, b.expert_mean);
  }
  return cells;
}

std::string benchmark_csv(const std::vector<BenchmarkCell>& cells) {
  std::ostringstream out;
  out << "algo,env,seed_count,mean_return,ci_half_width,normalized_mean,per_seed_means\n";
  for (const auto& c : cells) {
    out << c.algorithm << ',' << c.env << ',';
    if (!c.ok()) {
      out << "0,nan,nan,nan,\n";
      continue;
    }
    std::string joined;
    for (double x : c.per_seed_means) joined += (joined.empty() ? "" : ";") + format_double(x);
    out << c.stats.n << ',' << format_double(c.stats.mean) << ','
        << format_double(c.stats.ci_high - c.stats.mean) << ','
        << format_double(c.stats.normalized) << ',' << joined << '\n';
  }
  return out.str();
}

std::string benchmark_table(const std::vector<BenchmarkCell>& cells) {
  std::vector<std::string> algos, envs;
  for (const auto& c : cells) {
    if (std::find(algos.begin(), algos.end(), c.algorithm) == algos.end()) algos.push_back(c.algorithm);
    if (std::find(envs.begin(), envs.end(), c.env) == envs.end()) envs.push_back(c.env);
  }
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> header{"algorithm"};
  header.insert(header.end(), envs.begin(), envs.end());
  header.push_back("normalized");
  grid.push_back(header);
  for (const auto& a : algos) {
    std::vector<std::string> row{a};
    double norm = 0.0;
    std::size_t n_norm = 0;
    for (const auto& e : envs) {
      const auto it = std::find_if(cells.begin(), cells.end(), [&](const BenchmarkCell& c) {
        return c.algorithm == a && c.env == e;
      });
      if (it == cells.end()) {
        row.push_back("-");
      } else if (!it->ok()) {
        row.push_back("error");
      } else {
        row.push_back(fixed(it->stats.mean, 2) + " ± " + fixed(it->stats.ci_high - it->stats.mean, 2));
        norm += it->stats.normalized;
        ++n_norm;
      }
    }
    row.push_back(n_norm ? fixed(norm / static_cast<double>(n_norm), 3) : "-");
    grid.push_back(row);
  }

  // Column widths in displayed characters; "±" is two bytes in UTF-8.
  auto width = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char ch : s) w += (ch & 0xC0) != 0x80;
    return w;
  };
  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& row : grid) {
    for (std::size_t j = 0; j < row.size(); ++j) widths[j] = std::max(widths[j], width(row[j]));
  }
  std::ostringstream out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = 0; j < grid[i].size(); ++j) {
      const auto& cell = grid[i][j];
      const std::string pad(widths[j] - width(cell), ' ');
      out << (j ? "  " : "") << (j ? pad + cell : cell + pad);
    }
    out << '\n';
    if (i == 0) {
      std::size_t total = 0;
      for (std::size_t w : widths) total += w;
      out << std::string(total + 2 * (widths.size() - 1), '-') << '\n';
    }
  }
  return out.str();
}

}  // namespace mimic
