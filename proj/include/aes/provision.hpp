#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "aes/channel.hpp"
#include "aes/genmodel.hpp"
#include "aes/imitation.hpp"
#include "aes/rng.hpp"

namespace aes::provision {

/// Weights and bounds of the QoE-minus-cost objective.
struct QoEConfig {
  double l_max = 10.0;        // service latency upper bound, seconds
  double t_inference = 1.0;   // seconds per generative inference
  double c_inference = 0.25;  // compute cost units per inference
  double eta_q = 1.0;         // QoE weight
  double eta_c = 0.1;         // cost weight
  double penalty = 5.0;       // per-user constraint penalty
  int n_max = 5;              // trial cap used by decoders and the oracle

  void validate() const;
};

/// Environment observation: per-user prompt embeddings, link distances,
/// quality thresholds, the power budget, and a channel-state summary
/// (expected SNR at a 1 m reference distance).
struct ProvisionState {
  std::vector<genmodel::PromptSpec> prompts;
  std::vector<double> distances;
  double p_total = 3.0;
  double snr_ref = 0.0;

  int num_users() const { return static_cast<int>(prompts.size()); }
  double threshold(int user) const { return prompts[user].quality_threshold; }
  void validate() const;
};

ProvisionState make_state(std::vector<genmodel::PromptSpec> prompts,
                          std::vector<double> distances,
                          const channel::ChannelParams& channel_params);

/// Flat encoding for function approximators. Per user: embedding,
/// distance/100, threshold/10; then p_total and log10(1 + snr_ref) / 6.
Eigen::VectorXd encode_state(const ProvisionState& state);
int encoded_state_size(const ProvisionState& state);

/// Decision variables: inference trials and transmit power per user.
struct ProvisionAction {
  std::vector<int> trials;
  std::vector<double> powers;
};

// ---------------------------------------------------------------------------
// Objective pieces

struct QoeOutcome {
  double value = 0.0;
  bool latency_ok = true;    // n * t_inference <= l_max
  bool threshold_ok = true;  // max quality >= q_th
};

/// Per-user QoE: latency factor times ln(max quality / threshold). The
/// latency factor is log base n of l_max/(n*t_inference) for n >= 2 and the
/// natural log of the same argument for n = 1 (the base-1 log is undefined;
/// the natural base keeps the factor finite and sign-consistent). The value
/// field is only meaningful when both flags hold; violations are signaled,
/// not folded into the product.
QoeOutcome qoe(int n, const std::vector<double>& qualities, double q_th,
               const QoEConfig& config);

/// Resource consumption n * (c_inference + power).
double cost(int n, double power, double c_inference);

/// Objective of one provisioning decision. Over-budget power returns
/// -num_users * penalty outright; otherwise each user contributes
/// eta_q * qoe - eta_c * cost, with -penalty substituted for users that
/// violate the trial, threshold, or latency constraints.
double reward(const ProvisionState& state, const ProvisionAction& action,
              const std::vector<std::vector<double>>& user_side_qualities,
              const QoEConfig& config);

// ---------------------------------------------------------------------------
// Service environment

struct UserDiagnostics {
  int strategy = 0;
  double ber = 0.0;
  double best_quality = 0.0;
  double qoe_value = 0.0;
  double cost_value = 0.0;
  bool latency_ok = true;
  bool threshold_ok = true;
};

struct StepResult {
  double reward = 0.0;
  double qoe_sum = 0.0;   // over satisfied users
  double cost_sum = 0.0;
  int violations = 0;
  std::vector<UserDiagnostics> users;
};

/// One service round: per user, pick a strategy, run the requested number of
/// inference trials, degrade the best output through the expected channel
/// error rate, and score the round. Randomness is confined to the quality
/// draws (and any stochastic strategy selector), so a fixed rng stream makes
/// rounds reproducible.
class ServiceEnv {
 public:
  ServiceEnv(ProvisionState state, genmodel::StrategyCatalog catalog,
             channel::ChannelParams channel_params, QoEConfig qoe_config, double kappa,
             imitation::StrategySelector selector);

  StepResult step(const ProvisionAction& action, RngStream& rng) const;

  const ProvisionState& state() const { return state_; }
  const QoEConfig& qoe_config() const { return qoe_config_; }
  const channel::ChannelParams& channel_params() const { return channel_params_; }
  const genmodel::StrategyCatalog& catalog() const { return catalog_; }
  double kappa() const { return kappa_; }
  Eigen::VectorXd encoded_state() const { return encode_state(state_); }

 private:
  ProvisionState state_;
  genmodel::StrategyCatalog catalog_;
  channel::ChannelParams channel_params_;
  QoEConfig qoe_config_;
  double kappa_ = 4.0;
  imitation::StrategySelector selector_;
};

// ---------------------------------------------------------------------------
// Oracle and baselines

/// Deterministic strategy choice used by the expectation-mode oracle.
using DeterministicSelector = std::function<int(const genmodel::PromptSpec&, double power)>;

DeterministicSelector fixed_deterministic_selector(int strategy);
DeterministicSelector greedy_policy_selector(const imitation::PromptPolicy& policy,
                                             double p_total);

struct OracleResult {
  ProvisionAction action;
  double expected_reward = 0.0;
  std::size_t actions_evaluated = 0;
};

/// Exhaustive argmax of the expected reward over trials in {1..n_max}^Q and
/// an integer power simplex (grid_units shares, every user at least one).
/// Expected QoE terms integrate the max-of-n clamped-normal quality law by
/// quadrature, so this path is independent of the sampling implementation.
/// grid_units == 0 picks a default divisible by the user count. Guards:
/// Q <= 4, n_max <= 6, <= 21 grid points per axis.
OracleResult brute_force_oracle(const ProvisionState& state, const QoEConfig& config,
                                const genmodel::StrategyCatalog& catalog,
                                const channel::ChannelParams& channel_params, double kappa,
                                const DeterministicSelector& selector, int grid_units = 0);

/// Expected per-user objective term for a fixed (strategy, n, power); the
/// quadrature backbone of the oracle, exposed for tests.
double expected_user_term(double mean, double sigma, double degradation_factor,
                          double q_th, int n, double power, const QoEConfig& config);

/// Fixed scheme: four trials and an equal power split for every user.
ProvisionAction static_baseline(const ProvisionState& state, const QoEConfig& config);

/// Uniform trials in {1..n_max}; powers uniform on the simplex scaled by a
/// uniform utilization factor, so the budget holds by construction.
ProvisionAction random_baseline(const ProvisionState& state, const QoEConfig& config,
                                RngStream& rng);

}  // namespace aes::provision
