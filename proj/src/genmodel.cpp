#include "aes/genmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "aes/errors.hpp"

namespace aes::genmodel {
namespace {

using json = nlohmann::json;

constexpr double kScoreMax = 10.0;

double clamp_score(double x) { return std::min(kScoreMax, std::max(0.0, x)); }

}  // namespace

double StrategyCatalog::mean(int class_id, int strategy) const {
  if (class_id < 0 || class_id >= num_classes())
    throw std::invalid_argument("catalog: unknown class id");
  if (strategy < 0 || strategy >= num_strategies())
    throw std::invalid_argument("catalog: unknown strategy id");
  return means[class_id][strategy];
}

void StrategyCatalog::validate() const {
  if (strategy_names.empty()) throw ConfigError("catalog: no strategies");
  if (class_names.empty()) throw ConfigError("catalog: no classes");
  if (sigma <= 0.0) throw ConfigError("catalog: sigma must be positive");
  if (means.size() != class_names.size())
    throw ConfigError("catalog: one mean row per class required");
  for (const auto& row : means)
    if (row.size() != strategy_names.size())
      throw ConfigError("catalog: one mean per strategy required");
  if (loss_sensitivity.size() != strategy_names.size())
    throw ConfigError("catalog: one loss sensitivity per strategy required");
  for (double s : loss_sensitivity)
    if (s < 0.0 || s > 1.0)
      throw ConfigError("catalog: loss sensitivity must be in [0,1]");
}

StrategyCatalog default_catalog() {
  StrategyCatalog c;
  c.strategy_names = {"raw prompt",
                      "object description",
                      "object description + environment",
                      "object description + mood",
                      "object description + lighting",
                      "object description + quality booster",
                      "object description + negative effects"};
  c.class_names = {"grassland", "city", "dog", "garden", "mountain", "beach"};
  c.means = {
      {6.05, 6.30, 6.45, 6.55, 6.65, 7.20, 8.50},  // grassland
      {6.15, 6.40, 6.55, 6.65, 6.75, 7.30, 8.60},  // city
      {6.00, 6.25, 6.40, 6.50, 6.60, 7.15, 8.45},  // dog
      {6.05, 6.30, 6.45, 6.55, 6.65, 7.20, 8.50},  // garden
      {6.10, 6.35, 6.50, 6.60, 6.70, 7.25, 8.55},  // mountain
      {6.00, 6.20, 6.35, 6.45, 6.55, 7.10, 8.40},  // beach
  };
  c.loss_sensitivity = {0.30, 0.55, 0.65, 0.70, 0.75, 0.15, 1.00};
  c.sigma = 0.6;
  return c;
}

std::string catalog_to_json(const StrategyCatalog& catalog) {
  json j;
  j["sigma"] = catalog.sigma;
  j["strategy_names"] = catalog.strategy_names;
  j["class_names"] = catalog.class_names;
  j["means"] = catalog.means;
  j["loss_sensitivity"] = catalog.loss_sensitivity;
  return j.dump(2);
}

StrategyCatalog catalog_from_json(const std::string& text) {
  json j = json::parse(text);
  StrategyCatalog c;
  c.sigma = j.at("sigma").get<double>();
  c.strategy_names = j.at("strategy_names").get<std::vector<std::string>>();
  c.class_names = j.at("class_names").get<std::vector<std::string>>();
  c.means = j.at("means").get<std::vector<std::vector<double>>>();
  c.loss_sensitivity = j.at("loss_sensitivity").get<std::vector<double>>();
  c.validate();
  return c;
}

StrategyCatalog load_catalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open catalog: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return catalog_from_json(text);
}

std::uint64_t count_optimized_prompts(int corpus_size) {
  if (corpus_size < 0)
    throw std::invalid_argument("count_optimized_prompts: corpus size must be >= 0");
  if (corpus_size > 20)
    throw std::invalid_argument("count_optimized_prompts: corpus size > 20 overflows");
  // sum_k of falling factorials L * (L-1) * ... * (L-k+1), k = 0..L.
  std::uint64_t total = 1;  // k = 0: the raw prompt
  std::uint64_t falling = 1;
  for (int k = 1; k <= corpus_size; ++k) {
    falling *= static_cast<std::uint64_t>(corpus_size - k + 1);
    total += falling;
  }
  return total;
}

double raw_quality(const StrategyCatalog& catalog, const PromptSpec& prompt,
                   int strategy, RngStream& rng) {
  if (strategy < 0 || strategy >= catalog.num_strategies())
    throw std::invalid_argument("raw_quality: unknown strategy");
  const double mu = catalog.mean(prompt.class_id, strategy);
  return clamp_score(rng.normal(mu, catalog.sigma));
}

double user_side_score(double raw_score, double ber, double complexity, double kappa) {
  if (raw_score < 0.0 || raw_score > kScoreMax)
    throw std::invalid_argument("user_side_score: raw score out of [0,10]");
  if (ber < 0.0 || ber > 0.5) throw std::invalid_argument("user_side_score: ber out of [0,0.5]");
  if (complexity < 0.0 || complexity > 1.0)
    throw std::invalid_argument("user_side_score: complexity out of [0,1]");
  if (kappa < 0.0) throw std::invalid_argument("user_side_score: kappa must be >= 0");
  return raw_score * std::max(0.0, 1.0 - kappa * complexity * ber);
}

double effective_complexity(const StrategyCatalog& catalog, int strategy,
                            double prompt_complexity) {
  if (strategy < 0 || strategy >= catalog.num_strategies())
    throw std::invalid_argument("effective_complexity: unknown strategy");
  return prompt_complexity * catalog.loss_sensitivity[strategy];
}

Eigen::VectorXd embed_prompt(int class_id, double complexity, int embed_dim,
                             std::uint64_t seed) {
  if (embed_dim < 2) throw std::invalid_argument("embed_prompt: embed_dim must be >= 2");
  RngStream rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(class_id + 1)),
                "embed");
  Eigen::VectorXd v(embed_dim);
  double norm_sq = 0.0;
  for (int i = 0; i < embed_dim - 1; ++i) {
    v[i] = rng.normal();
    norm_sq += v[i] * v[i];
  }
  const double norm = std::sqrt(norm_sq);
  for (int i = 0; i < embed_dim - 1; ++i) v[i] /= norm;
  v[embed_dim - 1] = complexity;
  return v;
}

PromptSpec make_prompt(int id, int class_id, double complexity, double quality_threshold,
                       int embed_dim, std::uint64_t seed) {
  PromptSpec p;
  p.id = id;
  p.class_id = class_id;
  p.complexity = complexity;
  p.quality_threshold = quality_threshold;
  p.embedding = embed_prompt(class_id, complexity, embed_dim, seed);
  return p;
}

std::vector<PromptSpec> make_demo_prompts(int count, int embed_dim, std::uint64_t seed,
                                          const StrategyCatalog& catalog) {
  if (count <= 0) throw std::invalid_argument("make_demo_prompts: count must be positive");
  std::vector<PromptSpec> prompts;
  prompts.reserve(count);
  for (int i = 0; i < count; ++i) {
    const int class_id = i % catalog.num_classes();
    const double complexity = 0.45 + 0.5 * static_cast<double>(i % 8) / 7.0;
    const double threshold = 7.5 + static_cast<double>(i % 5) * 0.25;
    prompts.push_back(make_prompt(i, class_id, complexity, threshold, embed_dim, seed));
  }
  return prompts;
}

DemoDataset build_demo_dataset(const std::vector<PromptSpec>& prompts,
                               const StrategyCatalog& catalog,
                               const std::vector<double>& power_grid,
                               const channel::ChannelParams& channel_params,
                               const DemoOptions& options, RngStream& rng) {
  if (prompts.empty()) throw std::invalid_argument("build_demo_dataset: no prompts");
  if (power_grid.empty()) throw std::invalid_argument("build_demo_dataset: empty power grid");
  catalog.validate();
  for (double p : power_grid)
    if (p <= 0.0 || p > channel_params.p_total)
      throw std::invalid_argument("build_demo_dataset: powers must be in (0, p_total]");

  // BER depends only on the power level; compute each once.
  std::vector<double> ber(power_grid.size());
  for (std::size_t i = 0; i < power_grid.size(); ++i)
    ber[i] = channel::expected_ber_shadowed(channel_params, power_grid[i], options.distance);

  DemoDataset ds;
  ds.power_grid = power_grid;
  ds.prompts = prompts;
  ds.records.reserve(prompts.size() * catalog.num_strategies() * power_grid.size());
  for (const PromptSpec& prompt : prompts) {
    for (int k = 0; k < catalog.num_strategies(); ++k) {
      // One generation per optimized prompt; every power level re-transmits
      // the same output.
      const double raw = raw_quality(catalog, prompt, k, rng);
      const double c_eff = effective_complexity(catalog, k, prompt.complexity);
      for (std::size_t pi = 0; pi < power_grid.size(); ++pi) {
        DemoRecord rec;
        rec.power = power_grid[pi];
        rec.prompt_id = prompt.id;
        rec.strategy_id = k;
        rec.corpus_tag = "corpus:p" + std::to_string(prompt.id);
        rec.score = user_side_score(raw, ber[pi], c_eff, options.kappa);
        ds.records.push_back(std::move(rec));
      }
    }
  }
  return ds;
}

std::string demo_dataset_to_ndjson(const DemoDataset& dataset) {
  std::ostringstream out;
  for (const DemoRecord& r : dataset.records) {
    json j;
    j["power"] = r.power;
    j["prompt_id"] = r.prompt_id;
    j["strategy_id"] = r.strategy_id;
    j["corpus_tag"] = r.corpus_tag;
    j["score"] = r.score;
    out << j.dump() << "\n";
  }
  return out.str();
}

void save_demo_dataset(const DemoDataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << demo_dataset_to_ndjson(dataset);
  if (!out) throw IoError("write failed: " + path);
}

std::vector<DemoRecord> demo_records_from_ndjson(const std::string& text) {
  std::vector<DemoRecord> records;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    DemoRecord r;
    r.power = j.at("power").get<double>();
    r.prompt_id = j.at("prompt_id").get<int>();
    r.strategy_id = j.at("strategy_id").get<int>();
    r.corpus_tag = j.at("corpus_tag").get<std::string>();
    r.score = j.at("score").get<double>();
    records.push_back(std::move(r));
  }
  return records;
}

ExpertPolicy::ExpertPolicy(std::vector<double> power_grid, int num_prompts,
                           int num_strategies)
    : power_grid_(std::move(power_grid)), num_buckets_(static_cast<int>(power_grid_.size())) {
  (void)num_strategies;
  best_strategy_.assign(static_cast<std::size_t>(num_prompts) * num_buckets_, -1);
  best_score_.assign(best_strategy_.size(), -std::numeric_limits<double>::infinity());
}

int ExpertPolicy::bucket_of(double power) const {
  int best = 0;
  double best_dist = std::abs(power - power_grid_[0]);
  for (int i = 1; i < num_buckets_; ++i) {
    const double d = std::abs(power - power_grid_[i]);
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return best;
}

void ExpertPolicy::record(int prompt_id, int power_index, int strategy, double score) {
  const std::size_t idx = static_cast<std::size_t>(prompt_id) * num_buckets_ + power_index;
  if (idx >= best_strategy_.size()) throw std::invalid_argument("expert: prompt id out of range");
  // Strict improvement only, so equal scores keep the lowest strategy id
  // (records arrive in ascending strategy order).
  if (score > best_score_[idx]) {
    best_score_[idx] = score;
    best_strategy_[idx] = strategy;
  }
}

int ExpertPolicy::lookup_bucket(int prompt_id, int power_index) const {
  const std::size_t idx = static_cast<std::size_t>(prompt_id) * num_buckets_ + power_index;
  if (idx >= best_strategy_.size() || best_strategy_[idx] < 0)
    throw NotFoundError("expert: no record for prompt " + std::to_string(prompt_id) +
                        " power bucket " + std::to_string(power_index));
  return best_strategy_[idx];
}

int ExpertPolicy::lookup(int prompt_id, double power) const {
  return lookup_bucket(prompt_id, bucket_of(power));
}

ExpertPolicy expert_policy(const DemoDataset& dataset) {
  if (dataset.records.empty()) throw std::invalid_argument("expert_policy: empty dataset");
  int max_prompt = 0;
  int max_strategy = 0;
  for (const DemoRecord& r : dataset.records) {
    max_prompt = std::max(max_prompt, r.prompt_id);
    max_strategy = std::max(max_strategy, r.strategy_id);
  }
  ExpertPolicy expert(dataset.power_grid, max_prompt + 1, max_strategy + 1);
  for (const DemoRecord& r : dataset.records)
    expert.record(r.prompt_id, expert.bucket_of(r.power), r.strategy_id, r.score);
  return expert;
}

}  // namespace aes::genmodel
