#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "aes/approx.hpp"
#include "aes/genmodel.hpp"
#include "aes/rng.hpp"

namespace aes::imitation {

struct IrlConfig {
  double clip_epsilon = 0.2;   // PPO ratio clip
  double discount = 0.99;      // inert at horizon 1, kept for config fidelity
  int epochs = 400;
  int batch_size = 256;
  double generator_lr = 5e-4;  // the discriminator must not lag the generator
  double critic_lr = 1e-3;
  double discriminator_lr = 2e-3;
  int history_length = 3;
  int hidden_width = 64;
  int ppo_epochs = 2;
  int discriminator_steps = 4;
  double prob_clamp = 1e-6;
  double entropy_coef = 0.01;     // keeps the categorical policy off corners
  double exploration_mix = 0.05;  // rollout fraction drawn uniformly
  int eval_states = 1000;

  void validate() const;
};

/// Decision context for one prompt-optimization step: the last
/// history_length strategy ids (-1 marks an empty slot, encoded as zeros),
/// the prompt embedding, and the allocated power normalized by the budget.
struct IrlState {
  std::vector<int> history;
  Eigen::VectorXd embedding;
  double power_norm = 1.0;
};

int encoded_state_size(int num_strategies, int history_length, int embed_dim);
Eigen::VectorXd encode_irl_state(const IrlState& state, int num_strategies,
                                 int history_length);

/// Categorical policy over strategies: MLP logits + softmax.
class PromptPolicy {
 public:
  PromptPolicy() = default;
  PromptPolicy(approx::MlpParams net, int num_strategies, int history_length);

  Eigen::VectorXd probabilities(const Eigen::VectorXd& encoded_state) const;
  int sample(const Eigen::VectorXd& encoded_state, RngStream& rng) const;
  int greedy(const Eigen::VectorXd& encoded_state) const;

  const approx::MlpParams& network() const { return net_; }
  approx::MlpParams& network() { return net_; }
  int num_strategies() const { return num_strategies_; }
  int history_length() const { return history_length_; }

 private:
  approx::MlpParams net_;
  int num_strategies_ = 0;
  int history_length_ = 0;
};

/// Fresh policy whose final layer is zeroed, so the initial distribution is
/// uniform over strategies.
PromptPolicy make_uniform_policy(int state_size, int num_strategies, int history_length,
                                 int hidden_width, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Adversarial pieces (all pure; probabilities clamped to [1e-6, 1-1e-6])

/// Discriminator probability D(s, a containing): sigmoid of the network's
/// scalar output on [state, one-hot action].
double discriminator_probability(const approx::MlpParams& disc,
                                 const Eigen::VectorXd& state_action);

Eigen::VectorXd concat_state_action(const Eigen::VectorXd& encoded_state, int action,
                                    int num_strategies);

/// -(mean log D(expert) + mean log(1 - D(policy))), the negated
/// discriminator maximization objective. Throws on empty batches.
double discriminator_loss(const approx::MlpParams& disc,
                          const std::vector<Eigen::VectorXd>& expert_batch,
                          const std::vector<Eigen::VectorXd>& policy_batch);

/// Imitation reward -log(1 - D(s,a)): non-negative, increasing in D.
double gail_reward(const approx::MlpParams& disc, const Eigen::VectorXd& state_action);

/// One-step advantage: r + discount * v_next - v_now.
double advantage(double reward, double discount, double v_now, double v_next);

/// Standardize to zero mean / unit variance in place (no-op on singletons).
void standardize(std::vector<double>& values);

/// Clipped-surrogate objective (to maximize):
/// mean of min(ratio * adv, clip(ratio, 1-eps, 1+eps) * adv).
double ppo_clip_loss(const std::vector<double>& ratios,
                     const std::vector<double>& advantages, double clip_epsilon);

// ---------------------------------------------------------------------------
// Training

struct IrlCurvePoint {
  int epoch = 0;
  double disc_loss = 0.0;
  double gen_reward = 0.0;        // mean GAIL reward of the policy batch
  double expert_match_rate = 0.0; // on the held-out evaluation states
  double utility = 0.0;           // mean user-side score on evaluation states
};

struct IrlTrainResult {
  PromptPolicy policy;
  approx::MlpParams discriminator;
  approx::MlpParams value_net;
  std::vector<IrlCurvePoint> curve;
};

/// Adversarial imitation of the expert policy: alternates discriminator
/// steps on expert-vs-policy batches, clipped-surrogate generator steps on
/// the imitation reward, and value regression on reward targets.
/// Deterministic given the rng stream.
IrlTrainResult train_irl(const genmodel::DemoDataset& dataset,
                         const genmodel::ExpertPolicy& expert,
                         const genmodel::StrategyCatalog& catalog,
                         const channel::ChannelParams& channel_params,
                         const genmodel::DemoOptions& demo_options,
                         const IrlConfig& config, RngStream& rng);

// ---------------------------------------------------------------------------
// Evaluation

/// A strategy selector: prompt + allocated power -> strategy id. Adapters
/// exist for trained policies, fixed strategies, the expert table, and
/// uniform random choice.
using StrategySelector =
    std::function<int(const genmodel::PromptSpec&, double power, RngStream&)>;

StrategySelector policy_selector(const PromptPolicy& policy, double p_total,
                                 bool greedy = false);
StrategySelector fixed_selector(int strategy);
StrategySelector random_selector(int num_strategies);
StrategySelector expert_selector(const genmodel::ExpertPolicy& expert);

struct PolicyEvalResult {
  double mean_score = 0.0;
  std::vector<int> strategy_histogram;
  // Per-strategy user-side score statistics over the evaluation draws.
  std::vector<double> per_strategy_mean;
  std::vector<double> per_strategy_std;
};

/// Runs the selector over random (prompt, power) draws, samples generation
/// quality, degrades it through the channel, and aggregates.
PolicyEvalResult evaluate_policy(const StrategySelector& selector,
                                 const std::vector<genmodel::PromptSpec>& prompts,
                                 const genmodel::StrategyCatalog& catalog,
                                 const channel::ChannelParams& channel_params,
                                 const genmodel::DemoOptions& demo_options,
                                 const std::vector<double>& power_grid, int n_trials,
                                 RngStream& rng);

/// Fraction of held-out states where the selector's choice matches the
/// expert table.
double expert_match_rate(const StrategySelector& selector,
                         const genmodel::ExpertPolicy& expert,
                         const std::vector<genmodel::PromptSpec>& prompts,
                         const std::vector<double>& power_grid, int n_states,
                         RngStream& rng);

}  // namespace aes::imitation
