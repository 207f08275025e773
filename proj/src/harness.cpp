#include "aes/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "aes/errors.hpp"

namespace aes::harness {
namespace {

using json = nlohmann::json;

void expect_keys(const json& obj, const std::string& where,
                 const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

double normal_tail(double mean, double stddev, double threshold) {
  return 0.5 * std::erfc((threshold - mean) / (stddev * std::sqrt(2.0)));
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

const std::set<std::string>& metric_registry() {
  static const std::set<std::string> names = {
      "irl_utility",        "empirical_utility",  "random_utility",
      "default_utility",    "irl_match_rate",     "d3pg_reward",
      "ablation_reward",    "static_reward",      "random_reward",
      "oracle_reward",      "d3pg_top_power_user", "irl_single_round_cells",
      "empirical_single_round_cells",             "default_single_round_cells",
      "d3pg_final_episode_reward",                "irl_final_disc_loss",
  };
  return names;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("config: at least one seed required");
  if (name.empty()) throw ConfigError("config: experiment name required");
  channel.validate();
  catalog.validate();
  irl.validate();
  d3pg.validate();
  qoe.validate();
  if (demo.num_prompts < 1) throw ConfigError("config: demo.num_prompts must be >= 1");
  if (demo.embed_dim < 2) throw ConfigError("config: demo.embed_dim must be >= 2");
  if (demo.power_grid.empty()) throw ConfigError("config: demo.power_grid required");
  for (double p : demo.power_grid)
    if (p <= 0.0 || p > channel.p_total)
      throw ConfigError("config: demo powers must be in (0, p_total]");
  if (demo.distance <= 0.0) throw ConfigError("config: demo.distance must be positive");
  if (demo.kappa < 0.0) throw ConfigError("config: demo.kappa must be >= 0");
  if (scenario.empty()) throw ConfigError("config: scenario needs at least one user");
  for (const auto& u : scenario) {
    if (u.class_id < 0 || u.class_id >= catalog.num_classes())
      throw ConfigError("config: scenario class_id out of catalog range");
    if (u.quality_threshold < 0.0 || u.quality_threshold > 10.0)
      throw ConfigError("config: scenario threshold must be in [0,10]");
    if (u.distance <= 0.0) throw ConfigError("config: scenario distance must be positive");
    if (u.complexity < 0.0 || u.complexity > 1.0)
      throw ConfigError("config: scenario complexity must be in [0,1]");
  }
  if (rounds.q_steps < 1 || rounds.n_min < 1 || rounds.n_max < rounds.n_min)
    throw ConfigError("config: malformed rounds grid");
  if (rounds.confidence <= 0.0 || rounds.confidence >= 1.0)
    throw ConfigError("config: rounds confidence must be in (0,1)");
  if (rounds.sample_draws < 1) throw ConfigError("config: rounds sample_draws must be >= 1");
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.name = "default";
  c.seeds = {1, 2, 3};
  c.out_dir = "results";
  c.scenario = {
      {2, 0.6, 7.6, 50.0},  // dog prompt
      {3, 0.6, 8.2, 50.0},  // garden prompt
      {1, 0.6, 8.5, 50.0},  // city prompt
  };
  c.d3pg.episodes = 1200;
  return c;
}

namespace {

channel::ChannelParams parse_channel(const json& j) {
  expect_keys(j, "channel", {"m", "psi", "xi", "sigma_s", "n0", "p_total"});
  channel::ChannelParams c;
  read_field(j, "m", c.m);
  read_field(j, "psi", c.psi);
  read_field(j, "xi", c.xi);
  read_field(j, "sigma_s", c.sigma_s);
  read_field(j, "n0", c.n0);
  read_field(j, "p_total", c.p_total);
  return c;
}

DemoConfig parse_demo(const json& j) {
  expect_keys(j, "demo",
              {"num_prompts", "power_grid", "distance", "kappa", "embed_dim", "embed_seed"});
  DemoConfig d;
  read_field(j, "num_prompts", d.num_prompts);
  read_field(j, "power_grid", d.power_grid);
  read_field(j, "distance", d.distance);
  read_field(j, "kappa", d.kappa);
  read_field(j, "embed_dim", d.embed_dim);
  read_field(j, "embed_seed", d.embed_seed);
  return d;
}

imitation::IrlConfig parse_irl(const json& j) {
  expect_keys(j, "irl",
              {"clip_epsilon", "discount", "epochs", "batch_size", "generator_lr",
               "critic_lr", "discriminator_lr", "history_length", "hidden_width",
               "ppo_epochs", "discriminator_steps", "eval_states"});
  imitation::IrlConfig c;
  read_field(j, "clip_epsilon", c.clip_epsilon);
  read_field(j, "discount", c.discount);
  read_field(j, "epochs", c.epochs);
  read_field(j, "batch_size", c.batch_size);
  read_field(j, "generator_lr", c.generator_lr);
  read_field(j, "critic_lr", c.critic_lr);
  read_field(j, "discriminator_lr", c.discriminator_lr);
  read_field(j, "history_length", c.history_length);
  read_field(j, "hidden_width", c.hidden_width);
  read_field(j, "ppo_epochs", c.ppo_epochs);
  read_field(j, "discriminator_steps", c.discriminator_steps);
  read_field(j, "eval_states", c.eval_states);
  return c;
}

d3pg::D3pgConfig parse_d3pg(const json& j) {
  expect_keys(j, "d3pg",
              {"actor_kind", "diffusion_steps", "beta_start", "beta_end", "temb_dim",
               "hidden_width", "batch_size", "discount", "soft_update_rate",
               "noise_std_start", "noise_std_end", "actor_lr", "critic_lr",
               "bound_weight", "episodes", "steps_per_episode", "buffer_capacity",
               "updates_per_step", "eval_interval", "eval_rounds", "final_eval_rounds"});
  d3pg::D3pgConfig c;
  if (j.contains("actor_kind")) {
    const std::string kind = j.at("actor_kind").get<std::string>();
    if (kind == "diffusion") c.actor_kind = d3pg::ActorKind::kDiffusion;
    else if (kind == "gaussian") c.actor_kind = d3pg::ActorKind::kGaussian;
    else throw ConfigError("d3pg: actor_kind must be 'diffusion' or 'gaussian'");
  }
  read_field(j, "diffusion_steps", c.diffusion_steps);
  read_field(j, "beta_start", c.beta_start);
  read_field(j, "beta_end", c.beta_end);
  read_field(j, "temb_dim", c.temb_dim);
  read_field(j, "hidden_width", c.hidden_width);
  read_field(j, "batch_size", c.batch_size);
  read_field(j, "discount", c.discount);
  read_field(j, "soft_update_rate", c.soft_update_rate);
  read_field(j, "noise_std_start", c.noise_std_start);
  read_field(j, "noise_std_end", c.noise_std_end);
  read_field(j, "actor_lr", c.actor_lr);
  read_field(j, "critic_lr", c.critic_lr);
  read_field(j, "bound_weight", c.bound_weight);
  read_field(j, "episodes", c.episodes);
  read_field(j, "steps_per_episode", c.steps_per_episode);
  read_field(j, "buffer_capacity", c.buffer_capacity);
  read_field(j, "updates_per_step", c.updates_per_step);
  read_field(j, "eval_interval", c.eval_interval);
  read_field(j, "eval_rounds", c.eval_rounds);
  read_field(j, "final_eval_rounds", c.final_eval_rounds);
  return c;
}

provision::QoEConfig parse_qoe(const json& j) {
  expect_keys(j, "qoe",
              {"l_max", "t_inference", "c_inference", "eta_q", "eta_c", "penalty", "n_max"});
  provision::QoEConfig c;
  read_field(j, "l_max", c.l_max);
  read_field(j, "t_inference", c.t_inference);
  read_field(j, "c_inference", c.c_inference);
  read_field(j, "eta_q", c.eta_q);
  read_field(j, "eta_c", c.eta_c);
  read_field(j, "penalty", c.penalty);
  read_field(j, "n_max", c.n_max);
  return c;
}

std::vector<ScenarioUser> parse_scenario(const json& j) {
  expect_keys(j, "scenario", {"users"});
  std::vector<ScenarioUser> users;
  for (const auto& ju : j.at("users")) {
    expect_keys(ju, "scenario user",
                {"class_id", "complexity", "quality_threshold", "distance"});
    ScenarioUser u;
    read_field(ju, "class_id", u.class_id);
    read_field(ju, "complexity", u.complexity);
    read_field(ju, "quality_threshold", u.quality_threshold);
    read_field(ju, "distance", u.distance);
    users.push_back(u);
  }
  return users;
}

RoundsGridConfig parse_rounds(const json& j) {
  expect_keys(j, "rounds",
              {"q_min", "q_max", "q_steps", "n_min", "n_max", "confidence", "sample_draws"});
  RoundsGridConfig c;
  read_field(j, "q_min", c.q_min);
  read_field(j, "q_max", c.q_max);
  read_field(j, "q_steps", c.q_steps);
  read_field(j, "n_min", c.n_min);
  read_field(j, "n_max", c.n_max);
  read_field(j, "confidence", c.confidence);
  read_field(j, "sample_draws", c.sample_draws);
  return c;
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what());
  }
  expect_keys(j, "config",
              {"name", "seeds", "out_dir", "channel", "catalog_path", "demo", "irl",
               "d3pg", "qoe", "scenario", "rounds"});
  ExperimentConfig c = default_config();
  read_field(j, "name", c.name);
  read_field(j, "seeds", c.seeds);
  read_field(j, "out_dir", c.out_dir);
  if (j.contains("channel")) c.channel = parse_channel(j.at("channel"));
  read_field(j, "catalog_path", c.catalog_path);
  if (j.contains("demo")) c.demo = parse_demo(j.at("demo"));
  if (j.contains("irl")) c.irl = parse_irl(j.at("irl"));
  if (j.contains("d3pg")) c.d3pg = parse_d3pg(j.at("d3pg"));
  if (j.contains("qoe")) c.qoe = parse_qoe(j.at("qoe"));
  if (j.contains("scenario")) c.scenario = parse_scenario(j.at("scenario"));
  if (j.contains("rounds")) c.rounds = parse_rounds(j.at("rounds"));
  return c;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ExperimentConfig c = config_from_json(text);
  if (!c.catalog_path.empty()) {
    std::filesystem::path cat(c.catalog_path);
    if (cat.is_relative()) cat = std::filesystem::path(path).parent_path() / cat;
    if (!std::filesystem::exists(cat))
      throw ConfigError("config: catalog file does not exist: " + cat.string());
    c.catalog_path = cat.string();
    c.catalog = genmodel::load_catalog(c.catalog_path);
  }
  c.validate();
  return c;
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["seeds"] = c.seeds;
  j["out_dir"] = c.out_dir;
  j["channel"] = {{"m", c.channel.m},         {"psi", c.channel.psi},
                  {"xi", c.channel.xi},       {"sigma_s", c.channel.sigma_s},
                  {"n0", c.channel.n0},       {"p_total", c.channel.p_total}};
  if (!c.catalog_path.empty()) j["catalog_path"] = c.catalog_path;
  j["demo"] = {{"num_prompts", c.demo.num_prompts}, {"power_grid", c.demo.power_grid},
               {"distance", c.demo.distance},       {"kappa", c.demo.kappa},
               {"embed_dim", c.demo.embed_dim},     {"embed_seed", c.demo.embed_seed}};
  j["irl"] = {{"clip_epsilon", c.irl.clip_epsilon},
              {"discount", c.irl.discount},
              {"epochs", c.irl.epochs},
              {"batch_size", c.irl.batch_size},
              {"generator_lr", c.irl.generator_lr},
              {"critic_lr", c.irl.critic_lr},
              {"discriminator_lr", c.irl.discriminator_lr},
              {"history_length", c.irl.history_length},
              {"hidden_width", c.irl.hidden_width},
              {"ppo_epochs", c.irl.ppo_epochs},
              {"discriminator_steps", c.irl.discriminator_steps},
              {"eval_states", c.irl.eval_states}};
  j["d3pg"] = {{"actor_kind",
                c.d3pg.actor_kind == d3pg::ActorKind::kDiffusion ? "diffusion" : "gaussian"},
               {"diffusion_steps", c.d3pg.diffusion_steps},
               {"beta_start", c.d3pg.beta_start},
               {"beta_end", c.d3pg.beta_end},
               {"temb_dim", c.d3pg.temb_dim},
               {"hidden_width", c.d3pg.hidden_width},
               {"batch_size", c.d3pg.batch_size},
               {"discount", c.d3pg.discount},
               {"soft_update_rate", c.d3pg.soft_update_rate},
               {"noise_std_start", c.d3pg.noise_std_start},
               {"noise_std_end", c.d3pg.noise_std_end},
               {"actor_lr", c.d3pg.actor_lr},
               {"critic_lr", c.d3pg.critic_lr},
               {"bound_weight", c.d3pg.bound_weight},
               {"episodes", c.d3pg.episodes},
               {"steps_per_episode", c.d3pg.steps_per_episode},
               {"buffer_capacity", c.d3pg.buffer_capacity},
               {"updates_per_step", c.d3pg.updates_per_step},
               {"eval_interval", c.d3pg.eval_interval},
               {"eval_rounds", c.d3pg.eval_rounds},
               {"final_eval_rounds", c.d3pg.final_eval_rounds}};
  j["qoe"] = {{"l_max", c.qoe.l_max},
              {"t_inference", c.qoe.t_inference},
              {"c_inference", c.qoe.c_inference},
              {"eta_q", c.qoe.eta_q},
              {"eta_c", c.qoe.eta_c},
              {"penalty", c.qoe.penalty},
              {"n_max", c.qoe.n_max}};
  json users = json::array();
  for (const auto& u : c.scenario)
    users.push_back({{"class_id", u.class_id},
                     {"complexity", u.complexity},
                     {"quality_threshold", u.quality_threshold},
                     {"distance", u.distance}});
  j["scenario"] = {{"users", users}};
  j["rounds"] = {{"q_min", c.rounds.q_min},         {"q_max", c.rounds.q_max},
                 {"q_steps", c.rounds.q_steps},     {"n_min", c.rounds.n_min},
                 {"n_max", c.rounds.n_max},         {"confidence", c.rounds.confidence},
                 {"sample_draws", c.rounds.sample_draws}};
  return j.dump(2);
}

provision::ProvisionState scenario_state(const ExperimentConfig& config) {
  std::vector<genmodel::PromptSpec> prompts;
  std::vector<double> distances;
  int id = 0;
  for (const auto& u : config.scenario) {
    prompts.push_back(genmodel::make_prompt(id++, u.class_id, u.complexity,
                                            u.quality_threshold, config.demo.embed_dim,
                                            config.demo.embed_seed));
    distances.push_back(u.distance);
  }
  return provision::make_state(std::move(prompts), std::move(distances), config.channel);
}

std::optional<int> service_rounds(double mean, double stddev, double threshold,
                                  int images_per_round, double confidence) {
  if (stddev <= 0.0) throw std::invalid_argument("service_rounds: stddev must be positive");
  if (images_per_round < 1)
    throw std::invalid_argument("service_rounds: images_per_round must be >= 1");
  if (confidence <= 0.0 || confidence >= 1.0)
    throw std::invalid_argument("service_rounds: confidence must be in (0,1)");
  const double p_image = normal_tail(mean, stddev, threshold);
  if (p_image <= 0.0) return std::nullopt;  // unbounded
  const double p_round = 1.0 - std::pow(1.0 - p_image, images_per_round);
  if (p_round >= 1.0) return 1;
  // smallest r with 1 - (1 - p_round)^r >= confidence
  int r = static_cast<int>(std::ceil(std::log1p(-confidence) / std::log1p(-p_round)));
  r = std::max(r, 1);
  while (1.0 - std::pow(1.0 - p_round, r) < confidence) ++r;
  while (r > 1 && 1.0 - std::pow(1.0 - p_round, r - 1) >= confidence) --r;
  return r;
}

std::vector<RoundsCell> rounds_grid(double mean, double stddev,
                                    const RoundsGridConfig& grid) {
  std::vector<RoundsCell> cells;
  for (int qi = 0; qi < grid.q_steps; ++qi) {
    const double q =
        grid.q_steps == 1
            ? grid.q_min
            : grid.q_min + (grid.q_max - grid.q_min) * qi / (grid.q_steps - 1);
    for (int n = grid.n_min; n <= grid.n_max; ++n) {
      RoundsCell cell;
      cell.threshold = q;
      cell.images_per_round = n;
      cell.rounds = service_rounds(mean, stddev, q, n, grid.confidence);
      cells.push_back(cell);
    }
  }
  return cells;
}

int count_single_round_cells(const std::vector<RoundsCell>& cells) {
  int count = 0;
  for (const auto& c : cells)
    if (c.rounds && *c.rounds == 1) ++count;
  return count;
}

QualityStats sample_policy_quality(const imitation::StrategySelector& selector,
                                   const std::vector<genmodel::PromptSpec>& prompts,
                                   const genmodel::StrategyCatalog& catalog,
                                   const std::vector<double>& power_grid, int draws,
                                   RngStream& rng) {
  if (draws < 1) throw std::invalid_argument("sample_policy_quality: draws must be >= 1");
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const auto& prompt = prompts[rng.uniform_int(prompts.size())];
    const double power = power_grid[rng.uniform_int(power_grid.size())];
    const int strategy = selector(prompt, power, rng);
    const double quality = genmodel::raw_quality(catalog, prompt, strategy, rng);
    sum += quality;
    sum_sq += quality * quality;
  }
  QualityStats stats;
  stats.mean = sum / draws;
  stats.stddev = std::sqrt(std::max(1e-12, sum_sq / draws - stats.mean * stats.mean));
  return stats;
}

bool is_known_metric(const std::string& name) { return metric_registry().count(name) > 0; }

void write_metrics(const std::vector<MetricsRow>& rows, const std::string& path) {
  std::ostringstream out;
  out << "experiment,seed,step,metric,value\n";
  for (const auto& r : rows) {
    if (!is_known_metric(r.metric))
      throw std::invalid_argument("write_metrics: unknown metric '" + r.metric + "'");
    out << r.experiment << "," << r.seed << "," << r.step << "," << r.metric << ","
        << format_value(r.value) << "\n";
  }
  write_text_file(path, out.str());
}

namespace {

std::string rounds_csv(const std::vector<std::pair<std::string, std::vector<RoundsCell>>>&
                           per_policy_cells) {
  std::ostringstream out;
  out << "policy,threshold,images_per_round,rounds\n";
  for (const auto& [policy, cells] : per_policy_cells) {
    for (const auto& c : cells) {
      out << policy << "," << format_value(c.threshold) << "," << c.images_per_round
          << ",";
      if (c.rounds) out << *c.rounds;
      else out << "unbounded";
      out << "\n";
    }
  }
  return out.str();
}

std::string irl_curve_csv(const std::vector<imitation::IrlCurvePoint>& curve) {
  std::ostringstream out;
  out << "epoch,disc_loss,gen_reward,expert_match_rate,utility\n";
  for (const auto& p : curve)
    out << p.epoch << "," << format_value(p.disc_loss) << ","
        << format_value(p.gen_reward) << "," << format_value(p.expert_match_rate) << ","
        << format_value(p.utility) << "\n";
  return out.str();
}

std::string d3pg_curve_csv(const std::vector<d3pg::EpisodeStats>& curve) {
  std::ostringstream out;
  out << "episode,reward,qoe_sum,cost_sum,constraint_violations\n";
  for (const auto& p : curve)
    out << p.episode << "," << format_value(p.reward) << "," << format_value(p.qoe_sum)
        << "," << format_value(p.cost_sum) << "," << p.violations << "\n";
  return out.str();
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& config) {
  config.validate();
  namespace fs = std::filesystem;
  fs::create_directories(config.out_dir);
  const fs::path out(config.out_dir);

  write_text_file((out / "catalog.json").string(), genmodel::catalog_to_json(config.catalog));
  write_text_file((out / "config.json").string(), config_to_json(config));

  genmodel::DemoOptions demo_options;
  demo_options.distance = config.demo.distance;
  demo_options.kappa = config.demo.kappa;

  RunSummary summary;
  summary.experiment = config.name;
  std::vector<MetricsRow> metrics;
  auto push_metric = [&](std::uint64_t seed, const std::string& name, double value) {
    metrics.push_back({config.name, seed, 0, name, value});
  };

  const provision::ProvisionState state = scenario_state(config);
  int highest_threshold_user = 0;
  for (int u = 1; u < state.num_users(); ++u)
    if (state.threshold(u) > state.threshold(highest_threshold_user))
      highest_threshold_user = u;

  int top_power_votes = 0;

  for (const std::uint64_t seed : config.seeds) {
    const std::string tag = "_seed" + std::to_string(seed);
    RngStream root(seed);
    RngStream oracle_rng = root.substream("oracle");
    RngStream irl_rng = root.substream("irl");
    RngStream d3pg_rng = root.substream("d3pg");
    RngStream ablation_rng = root.substream("d3pg-ablation");
    RngStream eval_rng = root.substream("eval");

    // Stage 1: demonstration dataset and expert extraction.
    const auto prompts = genmodel::make_demo_prompts(config.demo.num_prompts,
                                                     config.demo.embed_dim,
                                                     config.demo.embed_seed, config.catalog);
    const auto demos = genmodel::build_demo_dataset(
        prompts, config.catalog, config.demo.power_grid, config.channel, demo_options,
        oracle_rng);
    genmodel::save_demo_dataset(demos, (out / ("demos" + tag + ".ndjson")).string());
    const auto expert = genmodel::expert_policy(demos);

    // Stage 2: imitation training.
    const auto irl = imitation::train_irl(demos, expert, config.catalog, config.channel,
                                          demo_options, config.irl, irl_rng);
    write_text_file((out / ("irl_curve" + tag + ".csv")).string(),
                    irl_curve_csv(irl.curve));
    approx::save_mlp(irl.policy.network(), (out / ("irl_policy" + tag + ".json")).string());

    SeedOutcome outcome;
    outcome.seed = seed;
    const int eval_trials = 4000;
    outcome.irl_utility =
        imitation::evaluate_policy(
            imitation::policy_selector(irl.policy, config.channel.p_total), prompts,
            config.catalog, config.channel, demo_options, config.demo.power_grid,
            eval_trials, eval_rng)
            .mean_score;
    outcome.empirical_utility =
        imitation::evaluate_policy(
            imitation::fixed_selector(config.catalog.num_strategies() - 1), prompts,
            config.catalog, config.channel, demo_options, config.demo.power_grid,
            eval_trials, eval_rng)
            .mean_score;
    outcome.random_utility =
        imitation::evaluate_policy(
            imitation::random_selector(config.catalog.num_strategies()), prompts,
            config.catalog, config.channel, demo_options, config.demo.power_grid,
            eval_trials, eval_rng)
            .mean_score;
    outcome.default_utility =
        imitation::evaluate_policy(imitation::fixed_selector(0), prompts, config.catalog,
                                   config.channel, demo_options, config.demo.power_grid,
                                   eval_trials, eval_rng)
            .mean_score;
    outcome.irl_match_rate = imitation::expert_match_rate(
        imitation::policy_selector(irl.policy, config.channel.p_total), expert, prompts,
        config.demo.power_grid, 1000, eval_rng);

    // Stage 3: service-round grid on raw generation quality.
    const auto irl_stats = sample_policy_quality(
        imitation::policy_selector(irl.policy, config.channel.p_total), prompts,
        config.catalog, config.demo.power_grid, config.rounds.sample_draws, eval_rng);
    const auto empirical_stats = sample_policy_quality(
        imitation::fixed_selector(config.catalog.num_strategies() - 1), prompts,
        config.catalog, config.demo.power_grid, config.rounds.sample_draws, eval_rng);
    const auto default_stats = sample_policy_quality(
        imitation::fixed_selector(0), prompts, config.catalog, config.demo.power_grid,
        config.rounds.sample_draws, eval_rng);
    const auto irl_cells = rounds_grid(irl_stats.mean, irl_stats.stddev, config.rounds);
    const auto empirical_cells =
        rounds_grid(empirical_stats.mean, empirical_stats.stddev, config.rounds);
    const auto default_cells =
        rounds_grid(default_stats.mean, default_stats.stddev, config.rounds);
    outcome.irl_single_round_cells = count_single_round_cells(irl_cells);
    outcome.empirical_single_round_cells = count_single_round_cells(empirical_cells);
    outcome.default_single_round_cells = count_single_round_cells(default_cells);
    write_text_file((out / ("rounds" + tag + ".csv")).string(),
                    rounds_csv({{"irl", irl_cells},
                                {"empirical", empirical_cells},
                                {"default", default_cells}}));

    // Stage 4: provisioning training, ablation, baselines, oracle.
    const auto greedy = provision::greedy_policy_selector(irl.policy, config.channel.p_total);
    imitation::StrategySelector env_selector =
        [greedy](const genmodel::PromptSpec& p, double power, RngStream&) {
          return greedy(p, power);
        };
    const provision::ServiceEnv env(state, config.catalog, config.channel, config.qoe,
                                    config.demo.kappa, env_selector);

    const auto d3pg_result = d3pg::train_d3pg(env, config.d3pg, d3pg_rng);
    write_text_file((out / ("d3pg_curve" + tag + ".csv")).string(),
                    d3pg_curve_csv(d3pg_result.curve));
    approx::save_mlp(d3pg_result.actor.network(), (out / ("actor" + tag + ".json")).string());

    d3pg::D3pgConfig ablation_config = config.d3pg;
    ablation_config.actor_kind = d3pg::ActorKind::kGaussian;
    const auto ablation_result = d3pg::train_d3pg(env, ablation_config, ablation_rng);
    write_text_file((out / ("ablation_curve" + tag + ".csv")).string(),
                    d3pg_curve_csv(ablation_result.curve));

    outcome.d3pg_reward = d3pg_result.final_eval_reward;
    outcome.ablation_reward = ablation_result.final_eval_reward;
    const auto static_action = provision::static_baseline(state, config.qoe);
    const int baseline_rounds = 400;
    double static_sum = 0.0, random_sum = 0.0;
    for (int r = 0; r < baseline_rounds; ++r) {
      static_sum += env.step(static_action, eval_rng).reward;
      random_sum +=
          env.step(provision::random_baseline(state, config.qoe, eval_rng), eval_rng).reward;
    }
    outcome.static_reward = static_sum / baseline_rounds;
    outcome.random_reward = random_sum / baseline_rounds;
    outcome.oracle_reward =
        provision::brute_force_oracle(state, config.qoe, config.catalog, config.channel,
                                      config.demo.kappa, greedy)
            .expected_reward;
    outcome.d3pg_top_power_user = static_cast<int>(
        std::max_element(d3pg_result.mean_power_share.begin(),
                         d3pg_result.mean_power_share.end()) -
        d3pg_result.mean_power_share.begin());
    if (outcome.d3pg_top_power_user == highest_threshold_user) ++top_power_votes;

    push_metric(seed, "irl_utility", outcome.irl_utility);
    push_metric(seed, "empirical_utility", outcome.empirical_utility);
    push_metric(seed, "random_utility", outcome.random_utility);
    push_metric(seed, "default_utility", outcome.default_utility);
    push_metric(seed, "irl_match_rate", outcome.irl_match_rate);
    push_metric(seed, "d3pg_reward", outcome.d3pg_reward);
    push_metric(seed, "ablation_reward", outcome.ablation_reward);
    push_metric(seed, "static_reward", outcome.static_reward);
    push_metric(seed, "random_reward", outcome.random_reward);
    push_metric(seed, "oracle_reward", outcome.oracle_reward);
    push_metric(seed, "d3pg_top_power_user", outcome.d3pg_top_power_user);
    push_metric(seed, "irl_single_round_cells", outcome.irl_single_round_cells);
    push_metric(seed, "empirical_single_round_cells", outcome.empirical_single_round_cells);
    push_metric(seed, "default_single_round_cells", outcome.default_single_round_cells);
    push_metric(seed, "d3pg_final_episode_reward", d3pg_result.curve.back().reward);
    push_metric(seed, "irl_final_disc_loss", irl.curve.back().disc_loss);

    summary.per_seed.push_back(outcome);
  }

  auto collect = [&](auto field) {
    std::vector<double> v;
    for (const auto& o : summary.per_seed) v.push_back(field(o));
    return v;
  };
  summary.irl_utility = median(collect([](const SeedOutcome& o) { return o.irl_utility; }));
  summary.empirical_utility =
      median(collect([](const SeedOutcome& o) { return o.empirical_utility; }));
  summary.random_utility =
      median(collect([](const SeedOutcome& o) { return o.random_utility; }));
  summary.d3pg_reward = median(collect([](const SeedOutcome& o) { return o.d3pg_reward; }));
  summary.ablation_reward =
      median(collect([](const SeedOutcome& o) { return o.ablation_reward; }));
  summary.static_reward =
      median(collect([](const SeedOutcome& o) { return o.static_reward; }));
  summary.irl_beats_empirical = summary.irl_utility > summary.empirical_utility;
  summary.empirical_beats_random = summary.empirical_utility > summary.random_utility;
  summary.d3pg_beats_ablation = summary.d3pg_reward >= summary.ablation_reward;
  summary.d3pg_beats_static = summary.d3pg_reward > summary.static_reward;
  summary.top_power_to_highest_threshold =
      2 * top_power_votes > static_cast<int>(config.seeds.size());
  bool rounds_ok = true;
  for (const auto& o : summary.per_seed)
    rounds_ok = rounds_ok && o.irl_single_round_cells > o.default_single_round_cells;
  summary.irl_rounds_beat_default = rounds_ok;

  write_metrics(metrics, (out / "metrics.csv").string());
  write_text_file((out / "summary.json").string(), summary_to_json(summary));
  return summary;
}

std::string summary_to_json(const RunSummary& s) {
  json j;
  j["experiment"] = s.experiment;
  json per_seed = json::array();
  for (const auto& o : s.per_seed) {
    per_seed.push_back({{"seed", o.seed},
                        {"irl_utility", o.irl_utility},
                        {"empirical_utility", o.empirical_utility},
                        {"random_utility", o.random_utility},
                        {"default_utility", o.default_utility},
                        {"irl_match_rate", o.irl_match_rate},
                        {"d3pg_reward", o.d3pg_reward},
                        {"ablation_reward", o.ablation_reward},
                        {"static_reward", o.static_reward},
                        {"random_reward", o.random_reward},
                        {"oracle_reward", o.oracle_reward},
                        {"d3pg_top_power_user", o.d3pg_top_power_user},
                        {"irl_single_round_cells", o.irl_single_round_cells},
                        {"empirical_single_round_cells", o.empirical_single_round_cells},
                        {"default_single_round_cells", o.default_single_round_cells}});
  }
  j["per_seed"] = per_seed;
  j["medians"] = {{"irl_utility", s.irl_utility},
                  {"empirical_utility", s.empirical_utility},
                  {"random_utility", s.random_utility},
                  {"d3pg_reward", s.d3pg_reward},
                  {"ablation_reward", s.ablation_reward},
                  {"static_reward", s.static_reward}};
  j["orderings"] = {{"irl_beats_empirical", s.irl_beats_empirical},
                    {"empirical_beats_random", s.empirical_beats_random},
                    {"d3pg_beats_ablation", s.d3pg_beats_ablation},
                    {"d3pg_beats_static", s.d3pg_beats_static},
                    {"top_power_to_highest_threshold", s.top_power_to_highest_threshold},
                    {"irl_rounds_beat_default", s.irl_rounds_beat_default}};
  j["notes"] = json::array({channel::kClosedFormBerNote});
  return j.dump(2);
}

}  // namespace aes::harness
