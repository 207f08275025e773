#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "aes/approx.hpp"
#include "aes/provision.hpp"
#include "aes/rng.hpp"

namespace aes::d3pg {

/// Noise schedule for the diffusion actor. alpha[t-1] and alpha_bar[t-1]
/// hold alpha_t and its running product for t = 1..steps; alpha_bar is
/// strictly decreasing whenever every alpha < 1.
struct DiffusionSchedule {
  int steps = 0;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;

  double alpha_at(int t) const { return alpha.at(t - 1); }
  double alpha_bar_at(int t) const { return alpha_bar.at(t - 1); }
};

/// Linear beta interpolation with alpha_t = 1 - beta_t. Requires
/// 0 <= beta_start <= beta_end < 1 (equal endpoints give a flat schedule).
DiffusionSchedule make_schedule(int steps, double beta_start, double beta_end);

/// Closed-form jump to step t: sqrt(abar_t) * a0 + sqrt(1 - abar_t) * eps.
Eigen::VectorXd forward_diffuse(const Eigen::VectorXd& a0, int t,
                                const DiffusionSchedule& schedule, RngStream& rng);

/// Sinusoidal embedding of a (1-based) timestep.
Eigen::VectorXd timestep_embedding(int t, int dim);

// ---------------------------------------------------------------------------
// Actors

enum class ActorKind { kDiffusion, kGaussian };

/// Stored intermediates of one deterministic denoising pass, enough to
/// backpropagate a gradient at the generated action through every step.
struct ChainTrace {
  std::vector<Eigen::VectorXd> inputs;          // network input per step
  std::vector<approx::ForwardCache> caches;     // matching forward caches
  std::vector<int> timesteps;                    // t per step, descending
  Eigen::VectorXd output;                        // generated raw action
};

/// Policy network. Diffusion kind: a noise-prediction MLP conditioned on
/// [action, timestep embedding, state] drives the deterministic reverse
/// chain a_{t-1} = (a_t - (1-alpha_t)/sqrt(1-abar_t) * eps) / sqrt(alpha_t)
/// from a Gaussian draw down to the raw action. Gaussian kind: a plain MLP
/// with tanh output, the ablation baseline.
class Actor {
 public:
  Actor() = default;
  Actor(ActorKind kind, int state_dim, int action_dim, int hidden_width, int temb_dim,
        DiffusionSchedule schedule, std::uint64_t seed);

  /// Deterministic raw action. Diffusion uses the supplied initial noise
  /// (must have action_dim entries); Gaussian ignores it. If mac_counter is
  /// set it accumulates multiply-accumulate counts of the network passes.
  Eigen::VectorXd generate(const Eigen::VectorXd& encoded_state,
                           const Eigen::VectorXd& initial_noise,
                           std::uint64_t* mac_counter = nullptr) const;
  Eigen::VectorXd generate_traced(const Eigen::VectorXd& encoded_state,
                                  const Eigen::VectorXd& initial_noise,
                                  ChainTrace& trace) const;

  /// Accumulates parameter gradients of loss L into grads given dL/d(output),
  /// traversing the denoising chain in reverse (or the single Gaussian pass).
  void backprop(const ChainTrace& trace, const Eigen::VectorXd& dloss_doutput,
                approx::MlpGrads& grads) const;

  /// Convenience: draw initial noise from rng, add exploration noise, clip
  /// to [-1, 1].
  Eigen::VectorXd act(const Eigen::VectorXd& encoded_state, double exploration_std,
                      RngStream& rng) const;

  ActorKind kind() const { return kind_; }
  int action_dim() const { return action_dim_; }
  int state_dim() const { return state_dim_; }
  const DiffusionSchedule& schedule() const { return schedule_; }
  const approx::MlpParams& network() const { return net_; }
  approx::MlpParams& network() { return net_; }

 private:
  ActorKind kind_ = ActorKind::kDiffusion;
  int state_dim_ = 0;
  int action_dim_ = 0;
  int temb_dim_ = 8;
  DiffusionSchedule schedule_;
  approx::MlpParams net_;
};

/// Raw action vector -> provisioning decision. Components are clamped to
/// [-1, 1] first; trials map affinely onto {1..n_max} and power logits map
/// through a softmax weight split, so the trial floor and the exact power
/// budget hold for every input.
provision::ProvisionAction decode_action(const Eigen::VectorXd& raw, int num_users,
                                         int n_max, double p_total);

// ---------------------------------------------------------------------------
// Critics and targets

Eigen::VectorXd concat_state_action(const Eigen::VectorXd& encoded_state,
                                    const Eigen::VectorXd& raw_action);

double critic_value(const approx::MlpParams& critic, const Eigen::VectorXd& encoded_state,
                    const Eigen::VectorXd& raw_action);

/// Bellman target: reward for terminal records, otherwise reward + discount
/// times the smaller of the two target critics at the target actor's action.
double critic_target(double reward, double discount, bool terminal,
                     const Eigen::VectorXd& next_state, const Actor& target_actor,
                     const approx::MlpParams& target_critic_1,
                     const approx::MlpParams& target_critic_2, RngStream& rng);

/// target <- (1 - rate) * target + rate * online, elementwise.
void soft_update(approx::MlpParams& target, const approx::MlpParams& online, double rate);

/// Negative mean critic value over states with actions regenerated from the
/// per-state initial noises; parameter gradients flow through the full
/// denoising chain. Returns the loss and fills actor_grads. bound_weight > 0
/// adds a quadratic penalty on components outside [-1, 1]; the critic is
/// only trained on executed (clipped) actions, so unbounded chain outputs
/// would otherwise chase critic extrapolation artifacts.
double actor_loss(const approx::MlpParams& critic, const Actor& actor,
                  const std::vector<Eigen::VectorXd>& encoded_states,
                  const std::vector<Eigen::VectorXd>& initial_noises,
                  approx::MlpGrads& actor_grads, double bound_weight = 0.0);

// ---------------------------------------------------------------------------
// Replay buffer

struct ReplayRecord {
  Eigen::VectorXd state;
  Eigen::VectorXd action;  // executed raw action in [-1,1]^(2Q)
  double reward = 0.0;
  Eigen::VectorXd next_state;
  bool terminal = true;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  void add(ReplayRecord record);
  const ReplayRecord& sample(RngStream& rng) const;
  std::size_t size() const { return records_.size(); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::size_t write_pos_ = 0;
  std::vector<ReplayRecord> records_;
};

// ---------------------------------------------------------------------------
// Training

struct D3pgConfig {
  ActorKind actor_kind = ActorKind::kDiffusion;
  int diffusion_steps = 5;
  double beta_start = 0.1;
  double beta_end = 0.7;
  int temb_dim = 8;
  int hidden_width = 64;
  int batch_size = 64;
  double discount = 0.95;
  double soft_update_rate = 0.01;
  double noise_std_start = 0.3;   // exploration noise, decayed linearly
  double noise_std_end = 0.02;
  double actor_lr = 5e-4;
  double critic_lr = 1e-3;
  double bound_weight = 1.0;      // see actor_loss
  int episodes = 1500;
  int steps_per_episode = 1;
  int buffer_capacity = 100000;
  int updates_per_step = 1;
  int eval_interval = 50;
  int eval_rounds = 40;
  int final_eval_rounds = 2000;

  void validate() const;
};

struct EpisodeStats {
  int episode = 0;
  double reward = 0.0;
  double qoe_sum = 0.0;
  double cost_sum = 0.0;
  int violations = 0;
  double eval_reward = 0.0;  // refreshed every eval_interval episodes
};

struct D3pgResult {
  Actor actor;
  approx::MlpParams critic_1, critic_2;
  std::vector<EpisodeStats> curve;
  double final_eval_reward = 0.0;
  std::vector<double> mean_power_share;  // per user, over the final evaluation
  std::vector<double> mean_trials;
};

/// Full training loop: generate an action by denoising, add exploration
/// noise, execute, store, then update critics and the actor from replay
/// minibatches with soft target updates. Deterministic given the rng stream.
/// Throws NumericError on divergence.
D3pgResult train_d3pg(const provision::ServiceEnv& env, const D3pgConfig& config,
                      RngStream& rng);

/// Supervised noise-prediction training toward fixed state->action targets;
/// used to sanity-check that the denoising chain can reproduce a mapping.
void train_denoiser_supervised(Actor& actor,
                               const std::vector<Eigen::VectorXd>& encoded_states,
                               const std::vector<Eigen::VectorXd>& target_actions,
                               int iterations, double learning_rate, RngStream& rng);

// ---------------------------------------------------------------------------
// Complexity accounting

struct ComplexityReport {
  std::size_t actor_parameters = 0;   // S_p
  std::size_t critic_parameters = 0;  // S_q, one critic
  std::uint64_t per_action_macs = 0;  // denoising chain, critics unused
  std::uint64_t per_update_macs = 0;  // one minibatch update, both critics
};

std::uint64_t mlp_forward_macs(const approx::MlpParams& params);

ComplexityReport complexity_report(const D3pgConfig& config, const Actor& actor,
                                   const approx::MlpParams& critic);

}  // namespace aes::d3pg
