#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aes/channel.hpp"
#include "aes/d3pg.hpp"
#include "aes/genmodel.hpp"
#include "aes/imitation.hpp"
#include "aes/provision.hpp"

namespace aes::harness {

struct DemoConfig {
  int num_prompts = 20;
  std::vector<double> power_grid = {0.1, 0.2, 1.8, 2.4, 3.0};
  double distance = 50.0;
  double kappa = 4.0;
  int embed_dim = 8;
  std::uint64_t embed_seed = 9001;  // embeddings stay fixed across run seeds
};

struct ScenarioUser {
  int class_id = 0;
  double complexity = 0.6;
  double quality_threshold = 8.0;
  double distance = 50.0;
};

struct RoundsGridConfig {
  double q_min = 7.5;
  double q_max = 8.5;
  int q_steps = 11;
  int n_min = 1;
  int n_max = 5;
  double confidence = 0.9;
  int sample_draws = 4000;  // per-policy quality draws behind the fitted stats
};

struct ExperimentConfig {
  std::string name = "default";
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string out_dir = "results";
  channel::ChannelParams channel;
  std::string catalog_path;  // empty: built-in default catalog
  genmodel::StrategyCatalog catalog = genmodel::default_catalog();
  DemoConfig demo;
  imitation::IrlConfig irl;
  d3pg::D3pgConfig d3pg;
  provision::QoEConfig qoe;
  std::vector<ScenarioUser> scenario;
  RoundsGridConfig rounds;

  void validate() const;
};

/// Shipped defaults: the three-user scenario with thresholds 7.6/8.2/8.5.
ExperimentConfig default_config();

/// Strict JSON loader: unknown keys are rejected (ConfigError), malformed
/// files raise ParseError with the parser's line information, and every
/// invariant is checked. Relative catalog paths resolve against the config
/// file's directory.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& config);

/// Scenario users -> provisioning state (embeddings from the demo settings).
provision::ProvisionState scenario_state(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Service-round analysis

/// Rounds needed so that, with per-image success probability
/// P(Normal(mean, stddev) >= threshold) and images_per_round draws per
/// round, at least one round succeeds with the given confidence. nullopt
/// means unbounded (zero per-image success probability).
std::optional<int> service_rounds(double mean, double stddev, double threshold,
                                  int images_per_round, double confidence);

struct RoundsCell {
  double threshold = 0.0;
  int images_per_round = 0;
  std::optional<int> rounds;
};

/// Full grid for one policy's fitted quality statistics.
std::vector<RoundsCell> rounds_grid(double mean, double stddev,
                                    const RoundsGridConfig& grid);

int count_single_round_cells(const std::vector<RoundsCell>& cells);

/// Fit mean/std of raw generation quality achieved by a strategy selector
/// over random (prompt, power) draws.
struct QualityStats {
  double mean = 0.0;
  double stddev = 0.0;
};
QualityStats sample_policy_quality(const imitation::StrategySelector& selector,
                                   const std::vector<genmodel::PromptSpec>& prompts,
                                   const genmodel::StrategyCatalog& catalog,
                                   const std::vector<double>& power_grid, int draws,
                                   RngStream& rng);

// ---------------------------------------------------------------------------
// Metrics output

struct MetricsRow {
  std::string experiment;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
  std::string metric;
  double value = 0.0;
};

/// Registry of metric names accepted by write_metrics.
bool is_known_metric(const std::string& name);

/// CSV with header experiment,seed,step,metric,value; UTF-8, LF endings,
/// values printed with 17 significant digits so parse-back is exact.
void write_metrics(const std::vector<MetricsRow>& rows, const std::string& path);

// ---------------------------------------------------------------------------
// Experiment pipeline

struct SeedOutcome {
  std::uint64_t seed = 0;
  double irl_utility = 0.0;
  double empirical_utility = 0.0;
  double random_utility = 0.0;
  double default_utility = 0.0;
  double irl_match_rate = 0.0;
  double d3pg_reward = 0.0;
  double ablation_reward = 0.0;
  double static_reward = 0.0;
  double random_reward = 0.0;
  double oracle_reward = 0.0;
  int d3pg_top_power_user = -1;  // index receiving the largest mean share
  int irl_single_round_cells = 0;
  int empirical_single_round_cells = 0;
  int default_single_round_cells = 0;
};

struct RunSummary {
  std::string experiment;
  std::vector<SeedOutcome> per_seed;
  // medians across seeds
  double irl_utility = 0.0, empirical_utility = 0.0, random_utility = 0.0;
  double d3pg_reward = 0.0, ablation_reward = 0.0, static_reward = 0.0;
  bool irl_beats_empirical = false;
  bool empirical_beats_random = false;
  bool d3pg_beats_ablation = false;
  bool d3pg_beats_static = false;
  bool top_power_to_highest_threshold = false;
  bool irl_rounds_beat_default = false;
};

/// Runs the full pipeline per seed -- demonstration build, imitation
/// training, provisioning training plus baselines and the Gaussian-actor
/// ablation, the service-round grid, and the oracle comparison -- writing
/// CSV/JSON artifacts into config.out_dir. Deterministic per seed; reruns
/// produce byte-identical files.
RunSummary run_experiment(const ExperimentConfig& config);

std::string summary_to_json(const RunSummary& summary);

}  // namespace aes::harness
