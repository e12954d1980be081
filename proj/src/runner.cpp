#include "mimic/runner.hpp"

#include <fstream>

#include "mimic/adversarial.hpp"
#include "mimic/bc_dagger.hpp"
#include "mimic/density.hpp"
#include "mimic/mce_irl.hpp"
#include "mimic/preferences.hpp"

namespace mimic {

namespace {

bool is_tabular(const Env& env) { return dynamic_cast<const TabularEnv*>(&env) != nullptr; }

Json tabular_generator(double temperature, double step_size) {
  return {{"kind", "tabular"}, {"temperature", temperature}, {"step_size", step_size}};
}

Json reinforce_generator() {
  return {{"kind", "reinforce"},
          {"batch_episodes", 16},
          {"lr", 0.003},
          {"entropy_coef", 0.01},
          {"hidden", kDefaultHidden},
          {"clip_norm", 0.0}};
}

Json generator_defaults(const std::string& kind, const std::string& algorithm) {
  if (kind == "reinforce") return reinforce_generator();
  if (kind != "tabular") throw ConfigError("unknown generator kind \"" + kind + "\"");
  // Adversarial rewards move every iteration, so the generator takes mirror-descent
  // steps; fixed learned rewards are solved exactly.
  if (algorithm == "gail" || algorithm == "airl") return tabular_generator(0.0, 0.5);
  // Preference queries only carry signal if rollouts keep exploring.
  if (algorithm == "drlhp") return tabular_generator(0.1, 0.0);
  return tabular_generator(0.01, 0.0);
}

std::string type_name(const Json& j) {
  if (j.is_number_unsigned()) return "non-negative integer";
  if (j.is_number()) return "number";
  return j.type_name();
}

bool same_kind(const Json& def, const Json& value) {
  if (def.is_number_unsigned()) return value.is_number_unsigned();
  if (def.is_number()) return value.is_number();
  return def.type() == value.type();
}

/// Overlays user values on defaults, rejecting unknown keys and type changes.
Json merge_strict(const Json& defaults, const Json& user, const std::string& where) {
  if (!user.is_object()) throw ConfigError(where + " must be an object");
  Json out = defaults;
  for (const auto& [key, value] : user.items()) {
    const std::string path = where + "." + key;
    if (!defaults.contains(key)) throw ConfigError("unknown config key \"" + path + "\"");
    const Json& def = defaults.at(key);
    if (def.is_object()) {
      out[key] = merge_strict(def, value, path);
    } else if (!same_kind(def, value)) {
      throw ConfigError("config key \"" + path + "\" must be a " + type_name(def));
    } else {
      out[key] = value;
    }
  }
  return out;
}

std::vector<std::size_t> widths(const Json& j) { return j.get<std::vector<std::size_t>>(); }

std::unique_ptr<PolicyOptimizer> make_generator(const Json& g, const Env& env,
                                                const SeedStream& seeds) {
  if (g.at("kind") == "tabular") {
    const auto* tab = dynamic_cast<const TabularEnv*>(&env);
    if (!tab) throw Error("the tabular generator needs a tabular environment");
    return std::make_unique<TabularOptimizer>(
        tab->model(), TabularOptimizerConfig{g.at("temperature").get<double>(),
                                             g.at("step_size").get<double>()});
  }
  ReinforceConfig rc;
  rc.batch_episodes = g.at("batch_episodes").get<std::size_t>();
  rc.lr = g.at("lr").get<double>();
  rc.entropy_coef = g.at("entropy_coef").get<double>();
  rc.hidden = widths(g.at("hidden"));
  rc.clip_norm = g.at("clip_norm").get<double>();
  return std::make_unique<ReinforceOptimizer>(env, rc, derive_stream(seeds, "generator"));
}

BcConfig bc_config(const Json& h) {
  return {widths(h.at("hidden")), h.at("lr").get<double>(), h.at("batch_size").get<std::size_t>()};
}

const TabularMDP& require_tabular(const Env& env, const std::string& algorithm) {
  const auto* mdp = env.tabular();
  if (!mdp) throw Error(algorithm + " needs a tabular environment; " + env.name() + " is continuous");
  return *mdp;
}

}  // namespace

const std::vector<std::string>& algorithm_registry() {
  static const std::vector<std::string> names = {"bc",   "dagger", "mce_irl", "density",
                                                 "gail", "airl",   "drlhp"};
  return names;
}

Json default_hyper(const std::string& algorithm, const Env& env) {
  const std::string gen = is_tabular(env) ? "tabular" : "reinforce";
  if (algorithm == "bc") return {{"lr", 1e-3}, {"batch_size", 32}, {"hidden", kDefaultHidden}};
  if (algorithm == "dagger") {
    return {{"episodes_per_round", 10}, {"bc_epochs", 100}, {"beta_decay", 0.5},
            {"lr", 1e-3},               {"batch_size", 32}, {"hidden", kDefaultHidden}};
  }
  if (algorithm == "mce_irl") return {{"lr", 0.05}, {"tol", 1e-3}, {"exact_occupancy", false}};
  if (algorithm == "density") {
    return {{"mode", "auto"},   {"alpha", 1.0},
            {"bandwidth", 0.1}, {"scott", false},
            {"floor", kDensityFloor}, {"generator", generator_defaults(gen, algorithm)}};
  }
  if (algorithm == "gail" || algorithm == "airl") {
    return {{"disc_steps", 2},     {"disc_batch", 128},
            {"gen_episodes", 16},  {"gen_steps", 1},
            {"disc_lr", 1e-3},     {"hidden", kDefaultHidden},
            {"generator", generator_defaults(gen, algorithm)}};
  }
  if (algorithm == "drlhp") {
    return {{"pairs_per_round", 50}, {"fragment_length", 5},
            {"episodes_per_round", 16}, {"model_epochs", 20},
            {"gen_steps", is_tabular(env) ? 1 : 20}, {"batch_size", 32},
            {"lr", 1e-3},            {"tau", 0.0},
            {"holdout_fraction", 0.2}, {"hidden", kDefaultHidden},
            {"generator", generator_defaults(gen, algorithm)}};
  }
  std::string known;
  for (const auto& n : algorithm_registry()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown algorithm \"" + algorithm + "\" (known: " + known + ")");
}

std::size_t default_budget(const std::string& algorithm, const Env& env) {
  const bool tab = is_tabular(env);
  if (algorithm == "bc") return 200;
  if (algorithm == "dagger") return 5;
  if (algorithm == "mce_irl") return 20000;
  if (algorithm == "density") return tab ? 1 : 300;
  if (algorithm == "gail") return tab ? 300 : 500;
  if (algorithm == "airl") return tab ? 1000 : 500;
  if (algorithm == "drlhp") return 10;
  default_hyper(algorithm, env);  // throws for unknown names
  return 0;
}

// ---------------------------------------------------------------------------

RunConfig RunConfig::from_json(const Json& record) {
  if (!record.is_object()) throw ConfigError("run config must be a JSON object");
  RunConfig c;
  for (const auto& [key, value] : record.items()) {
    auto expect = [&](bool ok) {
      if (!ok) throw ConfigError("config key \"" + key + "\" has the wrong type");
    };
    if (key == "env") {
      expect(value.is_string());
      c.env = value.get<std::string>();
    } else if (key == "algorithm") {
      expect(value.is_string());
      c.algorithm = value.get<std::string>();
    } else if (key == "seed") {
      expect(value.is_number_unsigned());
      c.seed = value.get<std::uint64_t>();
    } else if (key == "budget") {
      expect(value.is_number_unsigned());
      c.budget = value.get<std::size_t>();
    } else if (key == "n_demos") {
      expect(value.is_number_unsigned());
      c.n_demos = value.get<std::size_t>();
    } else if (key == "demos") {
      expect(value.is_string() || value.is_null());
      if (value.is_string()) c.demos = value.get<std::string>();
    } else if (key == "out") {
      expect(value.is_string());
      c.out = value.get<std::string>();
    } else if (key == "hyper") {
      expect(value.is_object());
      c.hyper = value;
    } else {
      throw ConfigError("unknown config key \"" + key + "\"");
    }
  }
  if (c.env.empty()) throw ConfigError("config needs \"env\"");
  if (c.algorithm.empty()) throw ConfigError("config needs \"algorithm\"");
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

RunConfig RunConfig::resolved() const {
  std::unique_ptr<Env> e;
  try {
    e = make_env(env, SeedStream(seed));
  } catch (const Error& err) {
    throw ConfigError(err.what());
  }
  RunConfig r = *this;
  Json defaults = default_hyper(algorithm, *e);
  // A generator kind switch swaps in that kind's defaults before merging.
  if (hyper.contains("generator") && hyper["generator"].is_object() &&
      hyper["generator"].contains("kind") && defaults.contains("generator")) {
    const Json& kind = hyper["generator"]["kind"];
    if (!kind.is_string()) throw ConfigError("config key \"hyper.generator.kind\" must be a string");
    defaults["generator"] = generator_defaults(kind.get<std::string>(), algorithm);
  }
  r.hyper = merge_strict(defaults, hyper, "hyper");
  if (r.budget == 0) r.budget = default_budget(algorithm, *e);
  if (r.out.empty()) r.out = ".";
  return r;
}

Json RunConfig::to_json() const {
  return {{"env", env},
          {"algorithm", algorithm},
          {"seed", seed},
          {"budget", budget},
          {"n_demos", n_demos},
          {"demos", demos ? Json(*demos) : Json(nullptr)},
          {"out", out},
          {"hyper", hyper}};
}

// ---------------------------------------------------------------------------

std::vector<Trajectory> run_demos(const RunConfig& config, const Env& env) {
  if (config.demos) {
    auto demos = load_trajectories(*config.demos);
    for (const auto& d : demos) {
      validate(d, env.action_count());
      if (!d.observations.empty() && d.observations[0].size() != env.obs_dim()) {
        throw Error("demonstrations in " + *config.demos + " do not match " + env.name());
      }
    }
    return strip_rewards(std::move(demos));
  }
  if (config.n_demos == 0) throw Error("a run needs at least one demonstration");
  const auto expert = make_expert(env);
  return strip_rewards(
      rollout(*expert.policy, env, config.n_demos, derive_stream(SeedStream(config.seed), "demos")));
}

TrainedRun train_run(const RunConfig& config) {
  TrainedRun run;
  run.env = make_env(config.env, SeedStream(config.seed));
  const Env& env = *run.env;
  const Json& h = config.hyper;
  const std::string& algo = config.algorithm;
  const SeedStream seeds = derive_stream(SeedStream(config.seed), "train");

  if (algo == "bc") {
    const auto demos = run_demos(config, env);
    auto bc = std::make_unique<BcTrainer>(flatten(demos), env.obs_dim(), env.action_count(),
                                          bc_config(h), seeds);
    bc->train(config.budget);
    run.algorithm = std::move(bc);
  } else if (algo == "dagger") {
    DaggerConfig dc;
    dc.episodes_per_round = h.at("episodes_per_round").get<std::size_t>();
    dc.bc_epochs = h.at("bc_epochs").get<std::size_t>();
    dc.beta_decay = h.at("beta_decay").get<double>();
    dc.bc = bc_config(h);
    auto dagger = std::make_unique<DaggerTrainer>(env, make_expert(env), dc, seeds);
    dagger->train(config.budget);
    run.algorithm = std::move(dagger);
  } else if (algo == "mce_irl") {
    require_tabular(env, algo);
    const auto mdp = dynamic_cast<const TabularEnv&>(env).model();
    MceConfig mc{h.at("lr").get<double>(), config.budget, h.at("tol").get<double>()};
    std::unique_ptr<MceIrl> irl;
    if (h.at("exact_occupancy").get<bool>()) {
      const auto expert = tabulate(*make_expert(env).policy, mdp->horizon(), mdp->state_count());
      irl = std::make_unique<MceIrl>(
          mdp, occupancy_feature_expectations(*mdp, occupancy(*mdp, expert)), mc);
    } else {
      const auto demos = run_demos(config, env);
      irl = std::make_unique<MceIrl>(mdp, demos, mc);
    }
    irl->train(config.budget);
    const auto fit = irl->result();
    run.reward = {{"kind", "linear"}, {"weights", fit.reward.weights}, {"best_gap", fit.best_gap}};
    run.algorithm = std::move(irl);
  } else if (algo == "density") {
    const auto demos = run_demos(config, env);
    DensityConfig dc;
    const auto mode = h.at("mode").get<std::string>();
    if (mode == "state") {
      dc.mode = DensityMode::State;
    } else if (mode == "state-action") {
      dc.mode = DensityMode::StateAction;
    } else if (mode != "auto") {
      throw ConfigError("hyper.mode must be auto, state or state-action");
    }
    dc.alpha = h.at("alpha").get<double>();
    dc.bandwidth = h.at("bandwidth").get<double>();
    dc.scott = h.at("scott").get<bool>();
    dc.floor = h.at("floor").get<double>();
    auto d = std::make_unique<DensityIrl>(demos, env.action_count(), dc,
                                          make_generator(h.at("generator"), env, seeds));
    d->train(config.budget);
    const auto& r = d->reward();
    run.reward = {{"kind", "density"},
                  {"mode", r.mode() == DensityMode::State ? "state" : "state-action"},
                  {"estimator", r.estimator() == DensityEstimator::Histogram ? "histogram" : "kde"},
                  {"floor", r.floor()},
                  {"bandwidth", r.bandwidth()},
                  {"counts", r.counts()}};
    run.algorithm = std::move(d);
  } else if (algo == "gail" || algo == "airl") {
    auto demos = run_demos(config, env);
    AdversarialConfig ac;
    ac.disc_steps = h.at("disc_steps").get<std::size_t>();
    ac.disc_batch = h.at("disc_batch").get<std::size_t>();
    ac.gen_episodes = h.at("gen_episodes").get<std::size_t>();
    ac.gen_steps = h.at("gen_steps").get<std::size_t>();
    ac.disc_lr = h.at("disc_lr").get<double>();
    ac.hidden = widths(h.at("hidden"));
    auto gen = make_generator(h.at("generator"), env, seeds);
    if (algo == "gail") {
      auto g = std::make_unique<Gail>(env, std::move(demos), std::move(gen), ac, seeds);
      g->train(config.budget);
      run.algorithm = std::move(g);
    } else {
      auto a = std::make_unique<Airl>(env, std::move(demos), std::move(gen), ac, seeds);
      a->train(config.budget);
      run.reward = {{"kind", "airl"}, {"f", mimic::to_json(a->recovered_reward().net())}};
      run.algorithm = std::move(a);
    }
  } else if (algo == "drlhp") {
    DrlhpConfig dc;
    dc.pairs_per_round = h.at("pairs_per_round").get<std::size_t>();
    dc.fragment_length = h.at("fragment_length").get<std::size_t>();
    dc.episodes_per_round = h.at("episodes_per_round").get<std::size_t>();
    dc.model_epochs = h.at("model_epochs").get<std::size_t>();
    dc.gen_steps = h.at("gen_steps").get<std::size_t>();
    dc.batch_size = h.at("batch_size").get<std::size_t>();
    dc.lr = h.at("lr").get<double>();
    dc.holdout_fraction = h.at("holdout_fraction").get<double>();
    dc.hidden = widths(h.at("hidden"));
    SyntheticLabeler labeler(env, h.at("tau").get<double>(), derive_stream(seeds, "labeler"));
    auto d = std::make_unique<DrlhpTrainer>(env, std::move(labeler),
                                            make_generator(h.at("generator"), env, seeds), dc,
                                            seeds);
    d->train(config.budget);
    run.reward = {{"kind", "preference-model"}, {"net", mimic::to_json(d->reward_model().net())},
                  {"queries", d->queries()}};
    run.algorithm = std::move(d);
  } else {
    default_hyper(algo, env);  // throws ConfigError listing the registry
  }
  return run;
}

std::filesystem::path run_directory(const RunConfig& config) {
  return std::filesystem::path(config.out) /
         (config.algorithm + "-" + config.env + "-" + std::to_string(config.seed));
}

Json checkpoint_json(const RunConfig& config, const TrainedRun& run) {
  Json j{{"v", kFormatVersion},
         {"algorithm", config.algorithm},
         {"env", config.env},
         {"seed", config.seed},
         {"policy", run.algorithm->current_policy().to_json()}};
  if (!run.reward.is_null()) j["reward"] = run.reward;
  return j;
}

std::filesystem::path train_and_save(const RunConfig& config) {
  const RunConfig resolved = config.resolved();
  const auto dir = run_directory(resolved);
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "config.resolved");
    if (!out) throw Error("cannot write " + (dir / "config.resolved").string());
    out << resolved.to_json().dump(2) << '\n';
  }
  const TrainedRun run = train_run(resolved);
  {
    std::ofstream out(dir / "policy.ckpt");
    if (!out) throw Error("cannot write " + (dir / "policy.ckpt").string());
    out << checkpoint_json(resolved, run).dump() << '\n';
  }
  run.algorithm->metrics().write(dir / "metrics.log");
  return dir;
}

std::unique_ptr<Policy> load_policy_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(path.string() + ": " + e.what());
  }
  const Json& p = j.contains("policy") ? j.at("policy") : j;
  if (p.value("kind", "") == "builtin") {
    const auto name = p.at("name").get<std::string>();
    if (name == "lineworld-controller") {
      const auto env = make_env("lineworld", SeedStream(0));
      auto expert = make_expert(*env);
      return std::make_unique<FunctionPolicy>(
          2, 3, [e = expert.policy](std::span<const double> o, std::size_t t) {
            return e->greedy(o, t);
          },
          name);
    }
    throw Error("unknown builtin policy \"" + name + "\"");
  }
  return policy_from_json(p);
}

}  // namespace mimic
