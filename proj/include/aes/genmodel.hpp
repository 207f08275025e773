#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "aes/channel.hpp"
#include "aes/rng.hpp"

namespace aes::genmodel {

/// One service request: archetype class, transmission-loss sensitivity
/// (complexity in [0,1]), personal quality threshold in [0,10], and a fixed
/// embedding whose final coordinate is the complexity.
struct PromptSpec {
  int id = 0;
  int class_id = 0;
  double complexity = 0.5;
  double quality_threshold = 8.0;
  Eigen::VectorXd embedding;
};

/// The filtered prompt-engineering strategy space. Strategy 0 is always the
/// raw prompt. Generation quality for (class c, strategy k) is modeled as
/// Normal(means[c][k], sigma) clamped to [0,10]; loss_sensitivity[k] scales
/// how strongly a strategy's output degrades with transmission errors
/// (elaborate suffixes produce detail that corrupts first).
struct StrategyCatalog {
  std::vector<std::string> strategy_names;
  std::vector<std::string> class_names;
  std::vector<std::vector<double>> means;  // [class][strategy]
  std::vector<double> loss_sensitivity;    // [strategy]
  double sigma = 0.6;

  int num_strategies() const { return static_cast<int>(strategy_names.size()); }
  int num_classes() const { return static_cast<int>(class_names.size()); }
  double mean(int class_id, int strategy) const;
  void validate() const;
};

/// Built-in catalog: 6 classes x 7 strategies, sigma 0.6, strategy 6 with
/// the highest mean for every class and strategy 0 the lowest. Strategy 5
/// trades a lower mean for strong robustness to transmission loss, so the
/// best strategy flips with allocated power.
StrategyCatalog default_catalog();

std::string catalog_to_json(const StrategyCatalog& catalog);
StrategyCatalog catalog_from_json(const std::string& text);
StrategyCatalog load_catalog(const std::string& path);

/// Number of distinct suffix arrangements of a corpus of size corpus_size:
/// sum over k of corpus_size! / (corpus_size - k)!. Throws for
/// corpus_size > 20 (would overflow 64 bits).
std::uint64_t count_optimized_prompts(int corpus_size);

/// One generation-quality draw: Normal(mean, sigma) clamped to [0,10].
double raw_quality(const StrategyCatalog& catalog, const PromptSpec& prompt,
                   int strategy, RngStream& rng);

/// Score after transmission: raw * max(0, 1 - kappa * complexity * ber).
/// Equals raw at ber 0; non-increasing in ber and complexity.
double user_side_score(double raw_score, double ber, double complexity, double kappa);

/// Complexity as experienced by one strategy's output: prompt complexity
/// scaled by the strategy's loss sensitivity.
double effective_complexity(const StrategyCatalog& catalog, int strategy,
                            double prompt_complexity);

/// Deterministic embedding: seeded random unit vector for the class with the
/// complexity appended as the final coordinate. embed_dim >= 2.
Eigen::VectorXd embed_prompt(int class_id, double complexity, int embed_dim,
                             std::uint64_t seed);

PromptSpec make_prompt(int id, int class_id, double complexity, double quality_threshold,
                       int embed_dim, std::uint64_t seed);

/// Deterministic default demonstration set: classes cycle, complexities and
/// thresholds sweep fixed ranges.
std::vector<PromptSpec> make_demo_prompts(int count, int embed_dim, std::uint64_t seed,
                                          const StrategyCatalog& catalog);

// ---------------------------------------------------------------------------
// Demonstration dataset

struct DemoRecord {
  double power = 0.0;
  int prompt_id = 0;
  int strategy_id = 0;
  std::string corpus_tag;
  double score = 0.0;  // user-side score in [0,10]
};

struct DemoDataset {
  std::vector<DemoRecord> records;
  std::vector<double> power_grid;
  std::vector<PromptSpec> prompts;
};

struct DemoOptions {
  double distance = 50.0;  // meters, generation-to-user reference link
  double kappa = 4.0;      // transmission degradation strength
};

/// One record per (prompt x strategy x power). A strategy's raw quality is
/// drawn once per prompt and then degraded at every power level, mirroring a
/// pipeline that generates each image once and re-transmits it. BER comes
/// from expected_ber_shadowed, so records are deterministic given the rng.
DemoDataset build_demo_dataset(const std::vector<PromptSpec>& prompts,
                               const StrategyCatalog& catalog,
                               const std::vector<double>& power_grid,
                               const channel::ChannelParams& channel_params,
                               const DemoOptions& options, RngStream& rng);

/// Newline-delimited JSON with fields power, prompt_id, strategy_id,
/// corpus_tag, score.
std::string demo_dataset_to_ndjson(const DemoDataset& dataset);
void save_demo_dataset(const DemoDataset& dataset, const std::string& path);
std::vector<DemoRecord> demo_records_from_ndjson(const std::string& text);

/// Best recorded strategy per (prompt, power-grid bucket); ties resolve to
/// the lowest strategy id. Lookup quantizes power to the nearest grid point.
class ExpertPolicy {
 public:
  ExpertPolicy() = default;
  ExpertPolicy(std::vector<double> power_grid, int num_prompts, int num_strategies);

  int lookup(int prompt_id, double power) const;      // throws NotFoundError
  int lookup_bucket(int prompt_id, int power_index) const;
  int bucket_of(double power) const;
  const std::vector<double>& power_grid() const { return power_grid_; }

  void record(int prompt_id, int power_index, int strategy, double score);

 private:
  std::vector<double> power_grid_;
  std::vector<int> best_strategy_;   // [prompt * buckets + bucket], -1 = missing
  std::vector<double> best_score_;
  int num_buckets_ = 0;
};

ExpertPolicy expert_policy(const DemoDataset& dataset);

}  // namespace aes::genmodel
