#include "mimic/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "mimic/runner.hpp"

namespace mimic {

std::filesystem::path default_out_root() {
  const char* env = std::getenv("MIMIC_OUT_DIR");
  return (env && *env) ? std::filesystem::path(env) : std::filesystem::path(".");
}

namespace {

std::size_t get_count(const Json& record, const char* key, std::size_t fallback) {
  if (!record.contains(key)) return fallback;
  const Json& v = record.at(key);
  if (!v.is_number_unsigned()) {
    throw ConfigError(std::string("suite key \"") + key + "\" must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::vector<std::string> get_names(const Json& record, const char* key) {
  const Json& v = record.at(key);
  if (!v.is_array()) throw ConfigError(std::string("suite key \"") + key + "\" must be a list");
  std::vector<std::string> out;
  for (const auto& x : v) {
    if (!x.is_string()) throw ConfigError(std::string("suite key \"") + key + "\" must list names");
    out.push_back(x.get<std::string>());
  }
  return out;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::unique_ptr<Env> env_or_usage(const std::string& name, std::uint64_t seed) {
  try {
    return make_env(name, SeedStream(seed));
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

SuiteConfig SuiteConfig::from_json(const Json& record) {
  if (!record.is_object()) throw ConfigError("suite config must be a JSON object");
  static const std::vector<std::string> known = {"envs",          "algorithms", "entries",
                                                 "n_seeds",       "eval_episodes", "root_seed",
                                                 "n_demos"};
  for (const auto& [key, _] : record.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown suite key \"" + key + "\"");
    }
  }
  SuiteConfig s;
  s.options.n_seeds = get_count(record, "n_seeds", kDefaultSeeds);
  s.options.eval_episodes = get_count(record, "eval_episodes", kEvalEpisodes);
  s.options.root_seed = get_count(record, "root_seed", 0);
  s.options.n_demos = get_count(record, "n_demos", 50);
  if (record.contains("envs") != record.contains("algorithms")) {
    throw ConfigError("suite needs both \"envs\" and \"algorithms\" or neither");
  }
  if (record.contains("envs")) {
    const auto algos = get_names(record, "algorithms");
    for (const auto& env : get_names(record, "envs")) {
      for (const auto& a : algos) s.entries.push_back({a, env, Json::object(), 0});
    }
  }
  if (record.contains("entries")) {
    const Json& entries = record.at("entries");
    if (!entries.is_array()) throw ConfigError("suite key \"entries\" must be a list");
    for (const auto& e : entries) {
      if (!e.is_object()) throw ConfigError("suite entries must be objects");
      SuiteEntry entry;
      for (const auto& [key, v] : e.items()) {
        if (key == "algorithm" && v.is_string()) {
          entry.algorithm = v.get<std::string>();
        } else if (key == "env" && v.is_string()) {
          entry.env = v.get<std::string>();
        } else if (key == "hyper" && v.is_object()) {
          entry.hyper = v;
        } else if (key == "budget" && v.is_number_unsigned()) {
          entry.budget = v.get<std::size_t>();
        } else {
          throw ConfigError("bad suite entry key \"" + key + "\"");
        }
      }
      if (entry.algorithm.empty() || entry.env.empty()) {
        throw ConfigError("suite entries need \"algorithm\" and \"env\"");
      }
      s.entries.push_back(std::move(entry));
    }
  }
  if (s.entries.empty()) throw ConfigError("suite has no entries");
  return s;
}

SuiteConfig SuiteConfig::full() {
  SuiteConfig s;
  for (const auto& env : env_registry()) {
    for (const auto& a : algorithm_registry()) s.entries.push_back({a, env, Json::object(), 0});
  }
  return s;
}

Baselines cached_baselines(const std::filesystem::path& root, const std::string& env,
                           std::size_t n_seeds, std::size_t episodes, std::uint64_t root_seed) {
  const auto path = root / "baselines" /
                    (env + "-s" + std::to_string(n_seeds) + "-e" + std::to_string(episodes) +
                     "-r" + std::to_string(root_seed) + ".json");
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    try {
      return baselines_from_json(Json::parse(in));
    } catch (const std::exception&) {
      // Unreadable cache entries are recomputed below.
    }
  }
  const auto e = make_env(env, SeedStream(root_seed));
  auto b = compute_baselines(*e, n_seeds, episodes, root_seed);
  write_text(path, to_json(b).dump() + "\n");
  return b;
}

// ---------------------------------------------------------------------------

namespace {

struct Options {
  std::string config;
  std::string env;
  std::vector<std::string> envs;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  std::size_t episodes = 0;
  std::string demos;
  std::string checkpoint;
  std::size_t seeds = kDefaultSeeds;
  bool stochastic = false;
};

std::filesystem::path out_root(const Options& o) {
  return o.out.empty() ? default_out_root() : std::filesystem::path(o.out);
}

int cmd_expert(const Options& o, std::ostream& out) {
  const auto env = env_or_usage(o.env, o.seed);
  const auto expert = make_expert(*env);
  const std::size_t n = o.episodes ? o.episodes : 100;
  const auto trajs =
      rollout(*expert.policy, *env, n, derive_stream(SeedStream(o.seed), "expert-demos"));
  std::filesystem::path path = o.out.empty()
                                   ? default_out_root() / (o.env + "-expert.jsonl")
                                   : std::filesystem::path(o.out);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  save_trajectories(trajs, path);
  out << "expert (" << expert.provenance << ") on " << o.env << ": mean return "
      << mean_return(trajs) << " over " << n << " episodes\n"
      << "wrote " << path.string() << '\n';
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  RunConfig c = RunConfig::load(o.config);
  if (!o.env.empty()) c.env = o.env;
  if (o.seed_set) c.seed = o.seed;
  if (!o.demos.empty()) c.demos = o.demos;
  if (!o.out.empty()) {
    c.out = o.out;
  } else if (c.out.empty()) {
    c.out = default_out_root().string();
  }
  const auto dir = train_and_save(c);
  out << "wrote " << dir.string() << '\n';
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const auto env = env_or_usage(o.env, o.seed);
  const auto policy = load_policy_checkpoint(o.checkpoint);
  if (policy->obs_dim() != env->obs_dim() || policy->action_count() != env->action_count()) {
    throw Error("checkpoint spaces (" + std::to_string(policy->obs_dim()) + " obs, " +
                std::to_string(policy->action_count()) + " actions) do not match " + o.env);
  }
  if (o.seeds == 0) throw ConfigError("--seeds must be positive");
  const std::size_t episodes = o.episodes ? o.episodes : kEvalEpisodes;
  const auto base = cached_baselines(out_root(o), o.env, o.seeds, episodes, o.seed);
  std::vector<double> means;
  for (std::size_t i = 0; i < o.seeds; ++i) {
    means.push_back(evaluate_policy(*policy, *env, episodes,
                                    derive_stream(SeedStream(o.seed + i), "eval"),
                                    o.stochastic ? EvalMode::Sample : EvalMode::Greedy));
  }
  BenchmarkCell cell{"checkpoint", o.env, means,
                     summarize(means, base.random_mean, base.expert_mean), {}};
  const double hw = cell.stats.ci_high - cell.stats.mean;
  out << "mean return " << cell.stats.mean << " ± " << hw << " (95% t, n=" << cell.stats.n
      << "), normalized " << cell.stats.normalized << '\n';
  const std::string csv = benchmark_csv({cell});
  out << csv.substr(csv.find('\n') + 1);
  return kExitOk;
}

int cmd_benchmark(const Options& o, std::ostream& out) {
  SuiteConfig suite = o.config.empty() ? SuiteConfig::full()
                                       : SuiteConfig::from_json(read_json_file(o.config));
  if (!o.envs.empty()) {
    std::erase_if(suite.entries, [&](const SuiteEntry& e) {
      return std::find(o.envs.begin(), o.envs.end(), e.env) == o.envs.end();
    });
    if (suite.entries.empty()) throw ConfigError("no suite entries match the requested envs");
  }
  if (o.seed_set) suite.options.root_seed = o.seed;
  if (o.episodes) suite.options.eval_episodes = o.episodes;
  const auto cells = run_benchmark(suite.entries, suite.options);
  const auto root = out_root(o);
  const std::string csv = benchmark_csv(cells), table = benchmark_table(cells);
  write_text(root / "benchmark.csv", csv);
  write_text(root / "benchmark.txt", table);
  out << table;
  for (const auto& c : cells) {
    if (!c.ok()) out << "error in " << c.algorithm << " on " << c.env << ": " << c.error << '\n';
  }
  out << "wrote " << (root / "benchmark.csv").string() << " and "
      << (root / "benchmark.txt").string() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Imitation and reward learning on small environments"};
  app.require_subcommand(1);
  Options o;
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& s) { o.seed = s; o.seed_set = true; }, "Root seed");
  };

  auto* expert = app.add_subcommand("expert", "Roll out the oracle expert and save demonstrations");
  expert->add_option("--env", o.env, "Environment name")->required();
  expert->add_option("--out", o.out, "Output trajectory file");
  expert->add_option("--episodes", o.episodes, "Number of episodes (default 100)");
  add_seed(expert);

  auto* train = app.add_subcommand("train", "Train an algorithm from a run config");
  train->add_option("--config", o.config, "Run config (JSON)")->required();
  train->add_option("--env", o.env, "Override the config's environment");
  train->add_option("--out", o.out, "Output root");
  train->add_option("--demos", o.demos, "Demonstration file");
  add_seed(train);

  auto* eval = app.add_subcommand("eval", "Evaluate a policy checkpoint");
  eval->add_option("--checkpoint", o.checkpoint, "policy.ckpt path")->required();
  eval->add_option("--env", o.env, "Environment name")->required();
  eval->add_option("--episodes", o.episodes, "Episodes per seed (default 50)");
  eval->add_option("--seeds", o.seeds, "Number of evaluation seeds (default 5)");
  eval->add_option("--out", o.out, "Root for the baseline cache");
  eval->add_flag("--stochastic", o.stochastic, "Sample actions instead of acting greedily");
  add_seed(eval);

  auto* bench = app.add_subcommand("benchmark", "Run the benchmark suite");
  bench->add_option("--config", o.config, "Suite config (JSON); default is the full suite");
  bench->add_option("--env", o.envs, "Restrict to these environments (repeatable)");
  bench->add_option("--out", o.out, "Output directory for benchmark.csv and benchmark.txt");
  bench->add_option("--episodes", o.episodes, "Evaluation episodes per seed");
  add_seed(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*expert) return cmd_expert(o, out);
    if (*train) return cmd_train(o, out);
    if (*eval) return cmd_eval(o, out);
    return cmd_benchmark(o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace mimic
