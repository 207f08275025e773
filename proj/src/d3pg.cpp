#include "aes/d3pg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "aes/errors.hpp"

namespace aes::d3pg {
namespace {

using approx::Activation;
using approx::ForwardCache;
using approx::MlpGrads;
using approx::MlpParams;

double clip_unit(double x) { return std::min(1.0, std::max(-1.0, x)); }

// Reverse-step coefficients for a_{t-1} = c1 * a_t - c2 * eps(a_t, t, s).
void reverse_coefficients(const DiffusionSchedule& s, int t, double& c1, double& c2) {
  const double alpha = s.alpha_at(t);
  const double alpha_bar = s.alpha_bar_at(t);
  c1 = 1.0 / std::sqrt(alpha);
  const double one_minus_alpha = 1.0 - alpha;
  c2 = one_minus_alpha == 0.0 ? 0.0
                              : c1 * one_minus_alpha / std::sqrt(1.0 - alpha_bar);
}

}  // namespace

DiffusionSchedule make_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw std::invalid_argument("make_schedule: steps must be >= 1");
  if (beta_start < 0.0 || beta_end >= 1.0 || beta_start > beta_end)
    throw std::invalid_argument("make_schedule: need 0 <= beta_start <= beta_end < 1");
  DiffusionSchedule s;
  s.steps = steps;
  s.alpha.resize(steps);
  s.alpha_bar.resize(steps);
  double prod = 1.0;
  for (int t = 1; t <= steps; ++t) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(t - 1) / (steps - 1);
    const double beta = beta_start + (beta_end - beta_start) * frac;
    s.alpha[t - 1] = 1.0 - beta;
    prod *= s.alpha[t - 1];
    s.alpha_bar[t - 1] = prod;
  }
  return s;
}

Eigen::VectorXd forward_diffuse(const Eigen::VectorXd& a0, int t,
                                const DiffusionSchedule& schedule, RngStream& rng) {
  if (t < 1 || t > schedule.steps)
    throw std::invalid_argument("forward_diffuse: t out of range");
  const double abar = schedule.alpha_bar_at(t);
  Eigen::VectorXd out(a0.size());
  const double signal = std::sqrt(abar);
  const double noise = std::sqrt(1.0 - abar);
  for (Eigen::Index i = 0; i < a0.size(); ++i)
    out[i] = signal * a0[i] + noise * rng.normal();
  return out;
}

Eigen::VectorXd timestep_embedding(int t, int dim) {
  if (dim < 2 || dim % 2 != 0)
    throw std::invalid_argument("timestep_embedding: dim must be even and >= 2");
  Eigen::VectorXd emb(dim);
  for (int i = 0; i < dim / 2; ++i) {
    const double freq = std::pow(10000.0, -2.0 * i / dim);
    emb[2 * i] = std::sin(t * freq);
    emb[2 * i + 1] = std::cos(t * freq);
  }
  return emb;
}

Actor::Actor(ActorKind kind, int state_dim, int action_dim, int hidden_width,
             int temb_dim, DiffusionSchedule schedule, std::uint64_t seed)
    : kind_(kind), state_dim_(state_dim), action_dim_(action_dim), temb_dim_(temb_dim),
      schedule_(std::move(schedule)) {
  if (kind_ == ActorKind::kDiffusion) {
    if (schedule_.steps < 1) throw std::invalid_argument("actor: schedule required");
    net_ = approx::mlp_init(
        {action_dim_ + temb_dim_ + state_dim_, hidden_width, hidden_width, action_dim_},
        {Activation::kTanh, Activation::kTanh, Activation::kIdentity}, seed);
  } else {
    net_ = approx::mlp_init({state_dim_, hidden_width, hidden_width, action_dim_},
                            {Activation::kTanh, Activation::kTanh, Activation::kTanh},
                            seed);
  }
}

Eigen::VectorXd Actor::generate(const Eigen::VectorXd& encoded_state,
                                const Eigen::VectorXd& initial_noise,
                                std::uint64_t* mac_counter) const {
  if (kind_ == ActorKind::kGaussian) {
    if (mac_counter) *mac_counter += mlp_forward_macs(net_);
    return approx::mlp_forward(net_, encoded_state);
  }
  if (initial_noise.size() != action_dim_)
    throw std::invalid_argument("actor: initial noise must have action_dim entries");
  Eigen::VectorXd a = initial_noise;
  Eigen::VectorXd input(action_dim_ + temb_dim_ + state_dim_);
  for (int t = schedule_.steps; t >= 1; --t) {
    input.head(action_dim_) = a;
    input.segment(action_dim_, temb_dim_) = timestep_embedding(t, temb_dim_);
    input.tail(state_dim_) = encoded_state;
    const Eigen::VectorXd eps = approx::mlp_forward(net_, input);
    if (mac_counter) *mac_counter += mlp_forward_macs(net_);
    double c1 = 0.0, c2 = 0.0;
    reverse_coefficients(schedule_, t, c1, c2);
    a = c1 * a - c2 * eps;
  }
  return a;
}

Eigen::VectorXd Actor::generate_traced(const Eigen::VectorXd& encoded_state,
                                       const Eigen::VectorXd& initial_noise,
                                       ChainTrace& trace) const {
  trace.inputs.clear();
  trace.caches.clear();
  trace.timesteps.clear();
  if (kind_ == ActorKind::kGaussian) {
    trace.inputs.push_back(encoded_state);
    trace.caches.emplace_back();
    trace.output = approx::mlp_forward_cached(net_, encoded_state, trace.caches.back());
    return trace.output;
  }
  if (initial_noise.size() != action_dim_)
    throw std::invalid_argument("actor: initial noise must have action_dim entries");
  Eigen::VectorXd a = initial_noise;
  for (int t = schedule_.steps; t >= 1; --t) {
    Eigen::VectorXd input(action_dim_ + temb_dim_ + state_dim_);
    input.head(action_dim_) = a;
    input.segment(action_dim_, temb_dim_) = timestep_embedding(t, temb_dim_);
    input.tail(state_dim_) = encoded_state;
    trace.inputs.push_back(input);
    trace.caches.emplace_back();
    trace.timesteps.push_back(t);
    const Eigen::VectorXd eps =
        approx::mlp_forward_cached(net_, trace.inputs.back(), trace.caches.back());
    double c1 = 0.0, c2 = 0.0;
    reverse_coefficients(schedule_, t, c1, c2);
    a = c1 * a - c2 * eps;
  }
  trace.output = a;
  return a;
}

void Actor::backprop(const ChainTrace& trace, const Eigen::VectorXd& dloss_doutput,
                     MlpGrads& grads) const {
  if (kind_ == ActorKind::kGaussian) {
    approx::mlp_backward(net_, trace.caches.front(), dloss_doutput, grads);
    return;
  }
  // Walk the chain from the final step (t = 1, stored last) back to t = T.
  Eigen::VectorXd g = dloss_doutput;  // dL/da_{t-1} entering step index i
  for (std::size_t i = trace.caches.size(); i-- > 0;) {
    const int t = trace.timesteps[i];
    double c1 = 0.0, c2 = 0.0;
    reverse_coefficients(schedule_, t, c1, c2);
    // a_{t-1} = c1 * a_t - c2 * eps(input); input = [a_t, temb, state].
    const Eigen::VectorXd input_grad =
        approx::mlp_backward(net_, trace.caches[i], -c2 * g, grads);
    g = c1 * g + input_grad.head(action_dim_);
  }
}

Eigen::VectorXd Actor::act(const Eigen::VectorXd& encoded_state, double exploration_std,
                           RngStream& rng) const {
  Eigen::VectorXd noise(action_dim_);
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = rng.normal();
  Eigen::VectorXd a = generate(encoded_state, noise);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (exploration_std > 0.0) a[i] += exploration_std * rng.normal();
    a[i] = clip_unit(a[i]);
  }
  return a;
}

provision::ProvisionAction decode_action(const Eigen::VectorXd& raw, int num_users,
                                         int n_max, double p_total) {
  if (raw.size() != 2 * num_users)
    throw std::invalid_argument("decode_action: raw vector must have 2Q entries");
  if (n_max < 1) throw std::invalid_argument("decode_action: n_max must be >= 1");
  provision::ProvisionAction action;
  action.trials.resize(num_users);
  action.powers.resize(num_users);
  double max_logit = -1.0;
  for (int u = 0; u < num_users; ++u) {
    const double x = clip_unit(raw[u]);
    action.trials[u] = 1 + static_cast<int>(std::lround((x + 1.0) / 2.0 * (n_max - 1)));
    max_logit = std::max(max_logit, clip_unit(raw[num_users + u]));
  }
  double weight_sum = 0.0;
  std::vector<double> weights(num_users);
  for (int u = 0; u < num_users; ++u) {
    weights[u] = std::exp(clip_unit(raw[num_users + u]) - max_logit);
    weight_sum += weights[u];
  }
  double assigned = 0.0;
  for (int u = 0; u < num_users; ++u) {
    action.powers[u] = weights[u] / weight_sum * p_total;
    if (u + 1 == num_users) action.powers[u] = p_total - assigned;  // exact budget
    assigned += action.powers[u];
  }
  return action;
}

Eigen::VectorXd concat_state_action(const Eigen::VectorXd& encoded_state,
                                    const Eigen::VectorXd& raw_action) {
  Eigen::VectorXd x(encoded_state.size() + raw_action.size());
  x.head(encoded_state.size()) = encoded_state;
  x.tail(raw_action.size()) = raw_action;
  return x;
}

double critic_value(const MlpParams& critic, const Eigen::VectorXd& encoded_state,
                    const Eigen::VectorXd& raw_action) {
  return approx::mlp_forward(critic, concat_state_action(encoded_state, raw_action))[0];
}

double critic_target(double reward, double discount, bool terminal,
                     const Eigen::VectorXd& next_state, const Actor& target_actor,
                     const MlpParams& target_critic_1, const MlpParams& target_critic_2,
                     RngStream& rng) {
  if (terminal || discount == 0.0) return reward;
  Eigen::VectorXd noise(target_actor.action_dim());
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = rng.normal();
  Eigen::VectorXd next_action = target_actor.generate(next_state, noise);
  for (Eigen::Index i = 0; i < next_action.size(); ++i)
    next_action[i] = clip_unit(next_action[i]);
  const double q1 = critic_value(target_critic_1, next_state, next_action);
  const double q2 = critic_value(target_critic_2, next_state, next_action);
  return reward + discount * std::min(q1, q2);
}

void soft_update(MlpParams& target, const MlpParams& online, double rate) {
  if (rate <= 0.0 || rate > 1.0)
    throw std::invalid_argument("soft_update: rate must be in (0,1]");
  if (target.layer_sizes != online.layer_sizes)
    throw std::invalid_argument("soft_update: mismatched network shapes");
  for (std::size_t l = 0; l < target.weights.size(); ++l) {
    target.weights[l] = (1.0 - rate) * target.weights[l] + rate * online.weights[l];
    target.biases[l] = (1.0 - rate) * target.biases[l] + rate * online.biases[l];
  }
}

double actor_loss(const MlpParams& critic, const Actor& actor,
                  const std::vector<Eigen::VectorXd>& encoded_states,
                  const std::vector<Eigen::VectorXd>& initial_noises,
                  MlpGrads& actor_grads, double bound_weight) {
  if (encoded_states.empty() || encoded_states.size() != initial_noises.size())
    throw std::invalid_argument("actor_loss: state/noise batch mismatch");
  const double inv_b = 1.0 / static_cast<double>(encoded_states.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < encoded_states.size(); ++i) {
    ChainTrace trace;
    const Eigen::VectorXd a0 =
        actor.generate_traced(encoded_states[i], initial_noises[i], trace);
    ForwardCache critic_cache;
    const Eigen::VectorXd x = concat_state_action(encoded_states[i], a0);
    const double q = approx::mlp_forward_cached(critic, x, critic_cache)[0];
    loss -= q * inv_b;
    // dQ/da flows back through the denoising chain; critic params are fixed.
    MlpGrads critic_scratch = approx::make_grads_like(critic);
    Eigen::VectorXd upstream(1);
    upstream[0] = 1.0;
    const Eigen::VectorXd dq_dx =
        approx::mlp_backward(critic, critic_cache, upstream, critic_scratch);
    Eigen::VectorXd dloss_da = -inv_b * dq_dx.tail(actor.action_dim());
    if (bound_weight > 0.0) {
      for (Eigen::Index k = 0; k < a0.size(); ++k) {
        const double excess = std::abs(a0[k]) - 1.0;
        if (excess > 0.0) {
          loss += bound_weight * excess * excess * inv_b;
          dloss_da[k] += inv_b * bound_weight * 2.0 * excess * (a0[k] > 0 ? 1.0 : -1.0);
        }
      }
    }
    actor.backprop(trace, dloss_da, actor_grads);
  }
  if (!std::isfinite(loss)) throw NumericError("actor_loss: non-finite loss");
  return loss;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("replay: capacity must be positive");
  records_.reserve(std::min<std::size_t>(capacity_, 4096));
}

void ReplayBuffer::add(ReplayRecord record) {
  if (records_.size() < capacity_) {
    records_.push_back(std::move(record));
  } else {
    records_[write_pos_] = std::move(record);
  }
  write_pos_ = (write_pos_ + 1) % capacity_;
}

const ReplayRecord& ReplayBuffer::sample(RngStream& rng) const {
  if (records_.empty()) throw std::invalid_argument("replay: cannot sample empty buffer");
  return records_[rng.uniform_int(records_.size())];
}

void D3pgConfig::validate() const {
  if (diffusion_steps < 1) throw ConfigError("d3pg: diffusion steps must be >= 1");
  if (batch_size < 1 || episodes < 1 || steps_per_episode < 1)
    throw ConfigError("d3pg: batch size, episodes, steps must be positive");
  if (discount < 0.0 || discount >= 1.0) throw ConfigError("d3pg: discount must be in [0,1)");
  if (soft_update_rate <= 0.0 || soft_update_rate > 1.0)
    throw ConfigError("d3pg: soft update rate must be in (0,1]");
  if (actor_lr <= 0.0 || critic_lr <= 0.0) throw ConfigError("d3pg: learning rates positive");
  if (noise_std_start < 0.0 || noise_std_end < 0.0)
    throw ConfigError("d3pg: noise levels must be >= 0");
  if (bound_weight < 0.0) throw ConfigError("d3pg: bound weight must be >= 0");
  if (final_eval_rounds < 1) throw ConfigError("d3pg: final eval rounds must be >= 1");
  if (buffer_capacity < batch_size) throw ConfigError("d3pg: buffer smaller than a batch");
}

namespace {

struct EvalSummary {
  double mean_reward = 0.0;
  std::vector<double> power_share;
  std::vector<double> trials;
};

EvalSummary evaluate_greedy(const provision::ServiceEnv& env, const Actor& actor,
                            int rounds, RngStream& rng) {
  const Eigen::VectorXd enc = env.encoded_state();
  const int q = env.state().num_users();
  EvalSummary summary;
  summary.power_share.assign(q, 0.0);
  summary.trials.assign(q, 0.0);
  for (int r = 0; r < rounds; ++r) {
    Eigen::VectorXd raw = actor.act(enc, 0.0, rng);
    const provision::ProvisionAction action =
        decode_action(raw, q, env.qoe_config().n_max, env.state().p_total);
    const provision::StepResult res = env.step(action, rng);
    summary.mean_reward += res.reward;
    for (int u = 0; u < q; ++u) {
      summary.power_share[u] += action.powers[u] / env.state().p_total;
      summary.trials[u] += action.trials[u];
    }
  }
  summary.mean_reward /= rounds;
  for (int u = 0; u < q; ++u) {
    summary.power_share[u] /= rounds;
    summary.trials[u] /= rounds;
  }
  return summary;
}

}  // namespace

D3pgResult train_d3pg(const provision::ServiceEnv& env, const D3pgConfig& config,
                      RngStream& rng) {
  config.validate();
  const Eigen::VectorXd enc = env.encoded_state();
  const int q = env.state().num_users();
  const int state_dim = static_cast<int>(enc.size());
  const int action_dim = 2 * q;

  DiffusionSchedule schedule =
      make_schedule(config.diffusion_steps, config.beta_start, config.beta_end);
  Actor actor(config.actor_kind, state_dim, action_dim, config.hidden_width,
              config.temb_dim, schedule, rng.next_u64());
  MlpParams critic_1 = approx::mlp_init(
      {state_dim + action_dim, config.hidden_width, config.hidden_width, 1},
      {Activation::kTanh, Activation::kTanh, Activation::kIdentity}, rng.next_u64());
  MlpParams critic_2 = approx::mlp_init(
      {state_dim + action_dim, config.hidden_width, config.hidden_width, 1},
      {Activation::kTanh, Activation::kTanh, Activation::kIdentity}, rng.next_u64());
  Actor target_actor = actor;
  MlpParams target_critic_1 = critic_1;
  MlpParams target_critic_2 = critic_2;

  auto actor_opt = approx::make_optimizer(actor.network(), config.actor_lr);
  auto critic_1_opt = approx::make_optimizer(critic_1, config.critic_lr);
  auto critic_2_opt = approx::make_optimizer(critic_2, config.critic_lr);

  ReplayBuffer buffer(config.buffer_capacity);
  RngStream eval_rng = rng.substream("d3pg-eval");

  D3pgResult result;
  result.curve.reserve(config.episodes);
  double last_eval = 0.0;

  std::vector<Eigen::VectorXd> batch_states(config.batch_size);
  std::vector<Eigen::VectorXd> batch_noises(config.batch_size);

  for (int episode = 0; episode < config.episodes; ++episode) {
    const double frac =
        config.episodes == 1 ? 1.0
                             : static_cast<double>(episode) / (config.episodes - 1);
    const double noise_std =
        config.noise_std_start + (config.noise_std_end - config.noise_std_start) * frac;

    provision::StepResult last_step;
    for (int step = 0; step < config.steps_per_episode; ++step) {
      const Eigen::VectorXd raw = actor.act(enc, noise_std, rng);
      const provision::ProvisionAction action =
          decode_action(raw, q, env.qoe_config().n_max, env.state().p_total);
      last_step = env.step(action, rng);

      ReplayRecord record;
      record.state = enc;
      record.action = raw;
      record.reward = last_step.reward;
      record.next_state = enc;  // static request context within a scenario
      record.terminal = step + 1 == config.steps_per_episode;
      buffer.add(std::move(record));

      if (buffer.size() >= static_cast<std::size_t>(config.batch_size)) {
        for (int u = 0; u < config.updates_per_step; ++u) {
          // Critic regression toward Bellman targets.
          MlpGrads g1 = approx::make_grads_like(critic_1);
          MlpGrads g2 = approx::make_grads_like(critic_2);
          for (int b = 0; b < config.batch_size; ++b) {
            const ReplayRecord& r = buffer.sample(rng);
            const double y =
                critic_target(r.reward, config.discount, r.terminal, r.next_state,
                              target_actor, target_critic_1, target_critic_2, rng);
            const Eigen::VectorXd x = concat_state_action(r.state, r.action);
            for (auto [critic, grads] : {std::pair{&critic_1, &g1}, {&critic_2, &g2}}) {
              ForwardCache cache;
              const double value = approx::mlp_forward_cached(*critic, x, cache)[0];
              Eigen::VectorXd upstream(1);
              upstream[0] = 2.0 * (value - y) / config.batch_size;
              approx::mlp_backward(*critic, cache, upstream, *grads);
            }
            batch_states[b] = r.state;
            Eigen::VectorXd noise(action_dim);
            for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = rng.normal();
            batch_noises[b] = std::move(noise);
          }
          approx::optimizer_step(critic_1, g1, critic_1_opt);
          approx::optimizer_step(critic_2, g2, critic_2_opt);

          // Policy ascent on critic 1 through the denoising chain.
          MlpGrads ag = approx::make_grads_like(actor.network());
          const double loss = actor_loss(critic_1, actor, batch_states, batch_noises,
                                         ag, config.bound_weight);
          if (!std::isfinite(loss))
            throw NumericError("train_d3pg: diverged at episode " +
                               std::to_string(episode));
          approx::optimizer_step(actor.network(), ag, actor_opt);

          soft_update(target_actor.network(), actor.network(), config.soft_update_rate);
          soft_update(target_critic_1, critic_1, config.soft_update_rate);
          soft_update(target_critic_2, critic_2, config.soft_update_rate);
        }
      }
    }

    if (config.eval_interval > 0 && (episode + 1) % config.eval_interval == 0)
      last_eval = evaluate_greedy(env, actor, config.eval_rounds, eval_rng).mean_reward;

    EpisodeStats stats;
    stats.episode = episode;
    stats.reward = last_step.reward;
    stats.qoe_sum = last_step.qoe_sum;
    stats.cost_sum = last_step.cost_sum;
    stats.violations = last_step.violations;
    stats.eval_reward = last_eval;
    result.curve.push_back(stats);
  }

  const EvalSummary final_eval =
      evaluate_greedy(env, actor, config.final_eval_rounds, eval_rng);
  result.actor = std::move(actor);
  result.critic_1 = std::move(critic_1);
  result.critic_2 = std::move(critic_2);
  result.final_eval_reward = final_eval.mean_reward;
  result.mean_power_share = final_eval.power_share;
  result.mean_trials = final_eval.trials;
  return result;
}

void train_denoiser_supervised(Actor& actor,
                               const std::vector<Eigen::VectorXd>& encoded_states,
                               const std::vector<Eigen::VectorXd>& target_actions,
                               int iterations, double learning_rate, RngStream& rng) {
  if (actor.kind() != ActorKind::kDiffusion)
    throw std::invalid_argument("supervised denoiser training requires a diffusion actor");
  if (encoded_states.size() != target_actions.size() || encoded_states.empty())
    throw std::invalid_argument("supervised denoiser training: batch mismatch");
  auto opt = approx::make_optimizer(actor.network(), learning_rate);
  const int action_dim = actor.action_dim();
  const auto& schedule = actor.schedule();
  for (int it = 0; it < iterations; ++it) {
    MlpGrads grads = approx::make_grads_like(actor.network());
    for (std::size_t i = 0; i < encoded_states.size(); ++i) {
      const int t = 1 + static_cast<int>(rng.uniform_int(schedule.steps));
      Eigen::VectorXd eps(action_dim);
      for (Eigen::Index k = 0; k < eps.size(); ++k) eps[k] = rng.normal();
      const double abar = schedule.alpha_bar_at(t);
      const Eigen::VectorXd noisy =
          std::sqrt(abar) * target_actions[i] + std::sqrt(1.0 - abar) * eps;
      Eigen::VectorXd input(actor.network().input_size());
      input.head(action_dim) = noisy;
      input.segment(action_dim, input.size() - action_dim - encoded_states[i].size()) =
          timestep_embedding(t, static_cast<int>(input.size() - action_dim -
                                                 encoded_states[i].size()));
      input.tail(encoded_states[i].size()) = encoded_states[i];
      ForwardCache cache;
      const Eigen::VectorXd pred = approx::mlp_forward_cached(actor.network(), input, cache);
      const Eigen::VectorXd upstream =
          2.0 * (pred - eps) / static_cast<double>(encoded_states.size());
      approx::mlp_backward(actor.network(), cache, upstream, grads);
    }
    approx::optimizer_step(actor.network(), grads, opt);
  }
}

std::uint64_t mlp_forward_macs(const MlpParams& params) {
  std::uint64_t macs = 0;
  for (const auto& w : params.weights)
    macs += static_cast<std::uint64_t>(w.rows()) * static_cast<std::uint64_t>(w.cols());
  return macs;
}

ComplexityReport complexity_report(const D3pgConfig& config, const Actor& actor,
                                   const MlpParams& critic) {
  ComplexityReport report;
  report.actor_parameters = actor.network().parameter_count();
  report.critic_parameters = critic.parameter_count();
  const std::uint64_t actor_fwd = mlp_forward_macs(actor.network());
  const std::uint64_t critic_fwd = mlp_forward_macs(critic);
  const std::uint64_t chain_steps =
      actor.kind() == ActorKind::kDiffusion ? config.diffusion_steps : 1;
  // Inference: one denoising chain plus decode arithmetic; critics unused.
  report.per_action_macs =
      chain_steps * actor_fwd + 4ULL * static_cast<std::uint64_t>(actor.action_dim());
  // One minibatch update: per sample, target generation (one chain + both
  // target critics), both critic forward/backward passes (~3x forward each),
  // and the actor pass (chain forward + backward, plus one critic round trip).
  const std::uint64_t per_sample = chain_steps * actor_fwd + 2 * critic_fwd +
                                   2 * 3 * critic_fwd +
                                   3 * chain_steps * actor_fwd + 3 * critic_fwd;
  report.per_update_macs = static_cast<std::uint64_t>(config.batch_size) * per_sample;
  return report;
}

}  // namespace aes::d3pg
