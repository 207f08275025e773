// aigc-edge-sim: command line front end for the mobile generative-service
// simulator. Subcommands cover the BER comparison table, demonstration
// dataset construction, imitation training, provisioning training, the
// brute-force oracle, the service-round grid, and the full pipeline.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aes/channel.hpp"
#include "aes/d3pg.hpp"
#include "aes/errors.hpp"
#include "aes/genmodel.hpp"
#include "aes/harness.hpp"
#include "aes/imitation.hpp"
#include "aes/provision.hpp"

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

int log_level() {  // 0 quiet, 1 info, 2 debug
  const char* env = std::getenv("AES_LOG");
  if (!env) return 0;
  const std::string v(env);
  if (v == "debug") return 2;
  if (v == "info") return 1;
  return 0;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[aigc-edge-sim] " << msg << "\n";
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw aes::IoError("cannot open for writing: " + path);
  out << text;
}

aes::harness::ExperimentConfig load_config(const std::string& config_path,
                                           std::optional<std::uint64_t> seed,
                                           const std::string& out_dir) {
  aes::harness::ExperimentConfig config = config_path.empty()
                                              ? aes::harness::default_config()
                                              : aes::harness::parse_config(config_path);
  if (seed) config.seeds = {*seed};
  if (!out_dir.empty()) config.out_dir = out_dir;
  config.validate();
  return config;
}

// Optional scenario override file: {"users": [...], "channel": {...}}.
void apply_scenario_file(aes::harness::ExperimentConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw aes::IoError("cannot open scenario: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw aes::ParseError(e.what());
  }
  if (j.contains("users")) {
    config.scenario.clear();
    for (const auto& ju : j.at("users")) {
      aes::harness::ScenarioUser u;
      u.class_id = ju.at("class_id").get<int>();
      u.complexity = ju.value("complexity", 0.6);
      u.quality_threshold = ju.at("quality_threshold").get<double>();
      u.distance = ju.at("distance").get<double>();
      config.scenario.push_back(u);
    }
  }
  if (j.contains("channel")) {
    const auto& jc = j.at("channel");
    if (jc.contains("m")) config.channel.m = jc.at("m").get<double>();
    if (jc.contains("psi")) config.channel.psi = jc.at("psi").get<double>();
    if (jc.contains("xi")) config.channel.xi = jc.at("xi").get<double>();
    if (jc.contains("sigma_s")) config.channel.sigma_s = jc.at("sigma_s").get<double>();
    if (jc.contains("n0")) config.channel.n0 = jc.at("n0").get<double>();
    if (jc.contains("p_total")) config.channel.p_total = jc.at("p_total").get<double>();
  }
  if (j.contains("qoe")) {
    const auto& jq = j.at("qoe");
    if (jq.contains("l_max")) config.qoe.l_max = jq.at("l_max").get<double>();
    if (jq.contains("t_inference")) config.qoe.t_inference = jq.at("t_inference").get<double>();
    if (jq.contains("c_inference")) config.qoe.c_inference = jq.at("c_inference").get<double>();
    if (jq.contains("eta_q")) config.qoe.eta_q = jq.at("eta_q").get<double>();
    if (jq.contains("eta_c")) config.qoe.eta_c = jq.at("eta_c").get<double>();
    if (jq.contains("penalty")) config.qoe.penalty = jq.at("penalty").get<double>();
    if (jq.contains("n_max")) config.qoe.n_max = jq.at("n_max").get<int>();
  }
  config.validate();
}

aes::genmodel::DemoOptions demo_options_of(const aes::harness::ExperimentConfig& config) {
  aes::genmodel::DemoOptions opts;
  opts.distance = config.demo.distance;
  opts.kappa = config.demo.kappa;
  return opts;
}

int cmd_ber_table(const std::vector<double>& m_values, double snr_db_min,
                  double snr_db_max, double snr_db_step, const std::string& out_path) {
  std::vector<double> snr_db_values;
  for (double snr = snr_db_min; snr <= snr_db_max + 1e-12; snr += snr_db_step)
    snr_db_values.push_back(snr);
  std::ostringstream table;
  aes::channel::write_ber_table(table, m_values, snr_db_values);
  if (out_path.empty()) {
    std::cout << table.str();
  } else {
    write_file(out_path, table.str());
    log_info("wrote " + out_path);
  }
  return 0;
}

int cmd_build_demos(const aes::harness::ExperimentConfig& config) {
  fs::create_directories(config.out_dir);
  write_file((fs::path(config.out_dir) / "catalog.json").string(),
             aes::genmodel::catalog_to_json(config.catalog));
  for (const auto seed : config.seeds) {
    aes::RngStream root(seed);
    aes::RngStream oracle_rng = root.substream("oracle");
    const auto prompts = aes::genmodel::make_demo_prompts(
        config.demo.num_prompts, config.demo.embed_dim, config.demo.embed_seed,
        config.catalog);
    const auto demos = aes::genmodel::build_demo_dataset(
        prompts, config.catalog, config.demo.power_grid, config.channel,
        demo_options_of(config), oracle_rng);
    const std::string path =
        (fs::path(config.out_dir) / ("demos_seed" + std::to_string(seed) + ".ndjson"))
            .string();
    aes::genmodel::save_demo_dataset(demos, path);
    log_info("wrote " + path);
  }
  return 0;
}

aes::genmodel::DemoDataset demos_for_seed(const aes::harness::ExperimentConfig& config,
                                          std::uint64_t seed,
                                          const std::string& dataset_path) {
  const auto prompts = aes::genmodel::make_demo_prompts(
      config.demo.num_prompts, config.demo.embed_dim, config.demo.embed_seed,
      config.catalog);
  if (!dataset_path.empty()) {
    std::ifstream in(dataset_path);
    if (!in) throw aes::IoError("cannot open dataset: " + dataset_path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    aes::genmodel::DemoDataset ds;
    ds.records = aes::genmodel::demo_records_from_ndjson(text);
    ds.power_grid = config.demo.power_grid;
    ds.prompts = prompts;
    return ds;
  }
  aes::RngStream root(seed);
  aes::RngStream oracle_rng = root.substream("oracle");
  return aes::genmodel::build_demo_dataset(prompts, config.catalog,
                                           config.demo.power_grid, config.channel,
                                           demo_options_of(config), oracle_rng);
}

int cmd_train_irl(const aes::harness::ExperimentConfig& config,
                  const std::string& dataset_path, const std::string& policy_out) {
  fs::create_directories(config.out_dir);
  for (const auto seed : config.seeds) {
    const std::string tag = "_seed" + std::to_string(seed);
    const auto demos = demos_for_seed(config, seed, dataset_path);
    const auto expert = aes::genmodel::expert_policy(demos);
    aes::RngStream root(seed);
    aes::RngStream irl_rng = root.substream("irl");
    const auto result =
        aes::imitation::train_irl(demos, expert, config.catalog, config.channel,
                                  demo_options_of(config), config.irl, irl_rng);
    std::ostringstream csv;
    csv << "epoch,disc_loss,gen_reward,expert_match_rate,utility\n";
    for (const auto& p : result.curve)
      csv << p.epoch << "," << format_value(p.disc_loss) << ","
          << format_value(p.gen_reward) << "," << format_value(p.expert_match_rate)
          << "," << format_value(p.utility) << "\n";
    const std::string curve_path =
        (fs::path(config.out_dir) / ("irl_curve" + tag + ".csv")).string();
    write_file(curve_path, csv.str());
    const std::string policy_path =
        policy_out.empty()
            ? (fs::path(config.out_dir) / ("irl_policy" + tag + ".json")).string()
            : policy_out;
    aes::approx::save_mlp(result.policy.network(), policy_path);
    log_info("wrote " + curve_path + " and " + policy_path);
    std::cout << "seed " << seed
              << " expert_match_rate=" << result.curve.back().expert_match_rate
              << " utility=" << result.curve.back().utility << "\n";
  }
  return 0;
}

aes::imitation::StrategySelector selector_from_policy_file(
    const aes::harness::ExperimentConfig& config, const std::string& policy_path,
    bool greedy) {
  const auto net = aes::approx::load_mlp(policy_path);
  aes::imitation::PromptPolicy policy(net, config.catalog.num_strategies(),
                                      config.irl.history_length);
  return aes::imitation::policy_selector(policy, config.channel.p_total, greedy);
}

int cmd_train_d3pg(const aes::harness::ExperimentConfig& config, bool ablation,
                   const std::string& policy_path) {
  fs::create_directories(config.out_dir);
  aes::d3pg::D3pgConfig d3pg_config = config.d3pg;
  if (ablation) d3pg_config.actor_kind = aes::d3pg::ActorKind::kGaussian;
  const auto state = aes::harness::scenario_state(config);
  for (const auto seed : config.seeds) {
    const std::string tag = std::string(ablation ? "_ablation" : "") + "_seed" +
                            std::to_string(seed);
    aes::imitation::StrategySelector selector =
        policy_path.empty()
            ? aes::imitation::fixed_selector(config.catalog.num_strategies() - 1)
            : selector_from_policy_file(config, policy_path, /*greedy=*/true);
    const aes::provision::ServiceEnv env(state, config.catalog, config.channel,
                                         config.qoe, config.demo.kappa, selector);
    aes::RngStream root(seed);
    aes::RngStream rng = root.substream(ablation ? "d3pg-ablation" : "d3pg");
    const auto result = aes::d3pg::train_d3pg(env, d3pg_config, rng);
    std::ostringstream csv;
    csv << "episode,reward,qoe_sum,cost_sum,constraint_violations\n";
    for (const auto& p : result.curve)
      csv << p.episode << "," << format_value(p.reward) << "," << format_value(p.qoe_sum)
          << "," << format_value(p.cost_sum) << "," << p.violations << "\n";
    const std::string curve_path =
        (fs::path(config.out_dir) / ("d3pg_curve" + tag + ".csv")).string();
    write_file(curve_path, csv.str());
    aes::approx::save_mlp(result.actor.network(),
                          (fs::path(config.out_dir) / ("actor" + tag + ".json")).string());
    std::cout << "seed " << seed << " final_eval_reward="
              << format_value(result.final_eval_reward) << "\n";
  }
  return 0;
}

int cmd_oracle(const aes::harness::ExperimentConfig& config, const std::string& policy_path,
               int grid_units) {
  const auto state = aes::harness::scenario_state(config);
  aes::provision::DeterministicSelector selector =
      aes::provision::fixed_deterministic_selector(config.catalog.num_strategies() - 1);
  if (!policy_path.empty()) {
    const auto net = aes::approx::load_mlp(policy_path);
    aes::imitation::PromptPolicy policy(net, config.catalog.num_strategies(),
                                        config.irl.history_length);
    selector = aes::provision::greedy_policy_selector(policy, config.channel.p_total);
  }
  const auto result = aes::provision::brute_force_oracle(
      state, config.qoe, config.catalog, config.channel, config.demo.kappa, selector,
      grid_units);
  json j;
  j["expected_reward"] = result.expected_reward;
  j["actions_evaluated"] = result.actions_evaluated;
  j["trials"] = result.action.trials;
  j["powers"] = result.action.powers;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_rounds(const aes::harness::ExperimentConfig& config, const std::string& policy_path) {
  fs::create_directories(config.out_dir);
  const auto prompts = aes::genmodel::make_demo_prompts(
      config.demo.num_prompts, config.demo.embed_dim, config.demo.embed_seed,
      config.catalog);
  for (const auto seed : config.seeds) {
    aes::RngStream root(seed);
    aes::RngStream eval_rng = root.substream("eval");
    std::ostringstream csv;
    csv << "policy,threshold,images_per_round,rounds\n";
    auto emit = [&](const std::string& name,
                    const aes::imitation::StrategySelector& sel) {
      const auto stats = aes::harness::sample_policy_quality(
          sel, prompts, config.catalog, config.demo.power_grid,
          config.rounds.sample_draws, eval_rng);
      const auto cells = aes::harness::rounds_grid(stats.mean, stats.stddev, config.rounds);
      for (const auto& c : cells) {
        csv << name << "," << format_value(c.threshold) << "," << c.images_per_round << ",";
        if (c.rounds) csv << *c.rounds;
        else csv << "unbounded";
        csv << "\n";
      }
      return aes::harness::count_single_round_cells(cells);
    };
    const int default_cells = emit("default", aes::imitation::fixed_selector(0));
    const int empirical_cells =
        emit("empirical",
             aes::imitation::fixed_selector(config.catalog.num_strategies() - 1));
    int irl_cells = -1;
    if (!policy_path.empty())
      irl_cells = emit("irl", selector_from_policy_file(config, policy_path, false));
    const std::string path =
        (fs::path(config.out_dir) / ("rounds_seed" + std::to_string(seed) + ".csv"))
            .string();
    write_file(path, csv.str());
    std::cout << "seed " << seed << " single_round_cells default=" << default_cells
              << " empirical=" << empirical_cells;
    if (irl_cells >= 0) std::cout << " irl=" << irl_cells;
    std::cout << "\n";
  }
  return 0;
}

int cmd_run(const aes::harness::ExperimentConfig& config) {
  log_info("running full pipeline into " + config.out_dir);
  const auto summary = aes::harness::run_experiment(config);
  std::cout << aes::harness::summary_to_json(summary) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale mobile generative-service provisioning simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir, dataset_path, policy_path, scenario_path;
  std::optional<std::uint64_t> seed;

  // channel ber-table
  auto* channel_cmd = app.add_subcommand("channel", "Wireless channel utilities");
  channel_cmd->require_subcommand(1);
  auto* ber_cmd = channel_cmd->add_subcommand(
      "ber-table", "CSV of numeric vs closed-form BER over an SNR grid");
  std::vector<double> m_values = {1.0, 2.0, 4.0};
  double snr_db_min = 0.0, snr_db_max = 20.0, snr_db_step = 2.0;
  std::string ber_out;
  ber_cmd->add_option("--m", m_values, "fading severity values");
  ber_cmd->add_option("--snr-db-min", snr_db_min, "lowest mean SNR in dB");
  ber_cmd->add_option("--snr-db-max", snr_db_max, "highest mean SNR in dB");
  ber_cmd->add_option("--snr-db-step", snr_db_step, "SNR grid step in dB");
  ber_cmd->add_option("--out", ber_out, "output file (default stdout)");

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config JSON");
    cmd->add_option("--seed", seed, "override the config seed list with one seed");
    cmd->add_option("--out", out_dir, "output directory override");
  };

  auto* demos_cmd = app.add_subcommand("build-demos", "Construct demonstration datasets");
  add_common(demos_cmd);

  auto* irl_cmd = app.add_subcommand("train-irl", "Train the prompt policy by imitation");
  add_common(irl_cmd);
  irl_cmd->add_option("--dataset", dataset_path, "demonstration NDJSON (default: build)");
  std::string policy_out;
  irl_cmd->add_option("--policy-out", policy_out, "trained policy snapshot path");

  auto* d3pg_cmd = app.add_subcommand("train-d3pg", "Train the provisioning policy");
  add_common(d3pg_cmd);
  bool ablation = false;
  d3pg_cmd->add_flag("--ablation", ablation, "use the Gaussian-actor ablation");
  d3pg_cmd->add_option("--policy", policy_path, "prompt policy snapshot for the env");
  d3pg_cmd->add_option("--scenario", scenario_path, "scenario override JSON");

  auto* oracle_cmd = app.add_subcommand("oracle", "Brute-force expected-reward argmax");
  add_common(oracle_cmd);
  int grid_units = 0;
  oracle_cmd->add_option("--policy", policy_path, "prompt policy snapshot");
  oracle_cmd->add_option("--scenario", scenario_path, "scenario override JSON");
  oracle_cmd->add_option("--grid-units", grid_units, "power simplex resolution");

  auto* rounds_cmd = app.add_subcommand("rounds", "Service-round grid analysis");
  add_common(rounds_cmd);
  rounds_cmd->add_option("--policy", policy_path, "prompt policy snapshot");

  auto* run_cmd = app.add_subcommand("run", "Full experiment pipeline");
  add_common(run_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (ber_cmd->parsed())
      return cmd_ber_table(m_values, snr_db_min, snr_db_max, snr_db_step, ber_out);
    auto config = load_config(config_path, seed, out_dir);
    if (!scenario_path.empty()) apply_scenario_file(config, scenario_path);
    if (demos_cmd->parsed()) return cmd_build_demos(config);
    if (irl_cmd->parsed()) return cmd_train_irl(config, dataset_path, policy_out);
    if (d3pg_cmd->parsed()) return cmd_train_d3pg(config, ablation, policy_path);
    if (oracle_cmd->parsed()) return cmd_oracle(config, policy_path, grid_units);
    if (rounds_cmd->parsed()) return cmd_rounds(config, policy_path);
    if (run_cmd->parsed()) return cmd_run(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
