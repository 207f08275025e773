#include "aes/imitation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "aes/errors.hpp"

namespace aes::imitation {
namespace {

using approx::Activation;
using approx::ForwardCache;
using approx::MlpGrads;
using approx::MlpParams;

double clamp_prob(double p, double eps) { return std::min(1.0 - eps, std::max(eps, p)); }

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp();
  return e / e.sum();
}

}  // namespace

void IrlConfig::validate() const {
  if (clip_epsilon <= 0.0 || clip_epsilon >= 1.0)
    throw ConfigError("irl: clip epsilon must be in (0,1)");
  if (discount < 0.0 || discount >= 1.0) throw ConfigError("irl: discount must be in [0,1)");
  if (epochs <= 0 || batch_size <= 0) throw ConfigError("irl: epochs and batch size positive");
  if (generator_lr <= 0.0 || critic_lr <= 0.0 || discriminator_lr <= 0.0)
    throw ConfigError("irl: learning rates must be positive");
  if (history_length < 0) throw ConfigError("irl: history length must be >= 0");
  if (entropy_coef < 0.0) throw ConfigError("irl: entropy coefficient must be >= 0");
  if (exploration_mix < 0.0 || exploration_mix >= 1.0)
    throw ConfigError("irl: exploration mix must be in [0,1)");
}

int encoded_state_size(int num_strategies, int history_length, int embed_dim) {
  return history_length * num_strategies + embed_dim + 1;
}

Eigen::VectorXd encode_irl_state(const IrlState& state, int num_strategies,
                                 int history_length) {
  if (state.power_norm <= 0.0 || state.power_norm > 1.0)
    throw std::invalid_argument("irl state: normalized power must be in (0,1]");
  const int embed_dim = static_cast<int>(state.embedding.size());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(
      encoded_state_size(num_strategies, history_length, embed_dim));
  // Most recent action first; empty slots stay zero.
  for (int slot = 0; slot < history_length; ++slot) {
    const int hist_idx = static_cast<int>(state.history.size()) - 1 - slot;
    if (hist_idx < 0) break;
    const int action = state.history[hist_idx];
    if (action < 0) continue;
    if (action >= num_strategies)
      throw std::invalid_argument("irl state: history action out of range");
    x[slot * num_strategies + action] = 1.0;
  }
  x.segment(history_length * num_strategies, embed_dim) = state.embedding;
  x[x.size() - 1] = state.power_norm;
  return x;
}

PromptPolicy::PromptPolicy(MlpParams net, int num_strategies, int history_length)
    : net_(std::move(net)), num_strategies_(num_strategies),
      history_length_(history_length) {
  if (net_.output_size() != num_strategies_)
    throw std::invalid_argument("policy: network output must be one logit per strategy");
}

Eigen::VectorXd PromptPolicy::probabilities(const Eigen::VectorXd& encoded_state) const {
  return softmax(approx::mlp_forward(net_, encoded_state));
}

int PromptPolicy::sample(const Eigen::VectorXd& encoded_state, RngStream& rng) const {
  const Eigen::VectorXd p = probabilities(encoded_state);
  double u = rng.uniform();
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    u -= p[i];
    if (u <= 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(p.size() - 1);
}

int PromptPolicy::greedy(const Eigen::VectorXd& encoded_state) const {
  Eigen::Index best = 0;
  probabilities(encoded_state).maxCoeff(&best);
  return static_cast<int>(best);
}

PromptPolicy make_uniform_policy(int state_size, int num_strategies, int history_length,
                                 int hidden_width, std::uint64_t seed) {
  MlpParams net = approx::mlp_init(
      {state_size, hidden_width, hidden_width, num_strategies},
      {Activation::kTanh, Activation::kTanh, Activation::kIdentity}, seed);
  net.weights.back().setZero();  // uniform starting distribution
  net.biases.back().setZero();
  return PromptPolicy(std::move(net), num_strategies, history_length);
}

Eigen::VectorXd concat_state_action(const Eigen::VectorXd& encoded_state, int action,
                                    int num_strategies) {
  if (action < 0 || action >= num_strategies)
    throw std::invalid_argument("concat_state_action: action out of range");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(encoded_state.size() + num_strategies);
  x.head(encoded_state.size()) = encoded_state;
  x[encoded_state.size() + action] = 1.0;
  return x;
}

double discriminator_probability(const MlpParams& disc, const Eigen::VectorXd& state_action) {
  const double logit = approx::mlp_forward(disc, state_action)[0];
  return clamp_prob(1.0 / (1.0 + std::exp(-logit)), 1e-6);
}

double discriminator_loss(const MlpParams& disc,
                          const std::vector<Eigen::VectorXd>& expert_batch,
                          const std::vector<Eigen::VectorXd>& policy_batch) {
  if (expert_batch.empty() || policy_batch.empty())
    throw std::invalid_argument("discriminator_loss: empty batch");
  double expert_term = 0.0;
  for (const auto& x : expert_batch) expert_term += std::log(discriminator_probability(disc, x));
  double policy_term = 0.0;
  for (const auto& x : policy_batch)
    policy_term += std::log(1.0 - discriminator_probability(disc, x));
  return -(expert_term / expert_batch.size() + policy_term / policy_batch.size());
}

double gail_reward(const MlpParams& disc, const Eigen::VectorXd& state_action) {
  return -std::log(1.0 - discriminator_probability(disc, state_action));
}

double advantage(double reward, double discount, double v_now, double v_next) {
  return reward + discount * v_next - v_now;
}

void standardize(std::vector<double>& values) {
  if (values.size() < 2) return;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= values.size();
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double stddev = std::sqrt(var / values.size());
  const double denom = std::max(stddev, 1e-8);
  for (double& v : values) v = (v - mean) / denom;
}

double ppo_clip_loss(const std::vector<double>& ratios,
                     const std::vector<double>& advantages, double clip_epsilon) {
  if (ratios.size() != advantages.size() || ratios.empty())
    throw std::invalid_argument("ppo_clip_loss: batch shape mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (ratios[i] <= 0.0) throw std::invalid_argument("ppo_clip_loss: ratios must be positive");
    const double clipped =
        std::min(1.0 + clip_epsilon, std::max(1.0 - clip_epsilon, ratios[i]));
    total += std::min(ratios[i] * advantages[i], clipped * advantages[i]);
  }
  return total / ratios.size();
}

namespace {

// Shared context for one training run.
struct TrainContext {
  const genmodel::DemoDataset* dataset = nullptr;
  const genmodel::ExpertPolicy* expert = nullptr;
  int num_strategies = 0;
  double p_total = 1.0;

  Eigen::VectorXd encode(const genmodel::PromptSpec& prompt, double power,
                         int history_length) const {
    IrlState s;
    s.embedding = prompt.embedding;
    s.power_norm = power / p_total;
    return encode_irl_state(s, num_strategies, history_length);
  }
};

struct Rollout {
  Eigen::VectorXd state;
  int action = 0;
  int prompt_index = 0;
  double power = 0.0;
};

}  // namespace

IrlTrainResult train_irl(const genmodel::DemoDataset& dataset,
                         const genmodel::ExpertPolicy& expert,
                         const genmodel::StrategyCatalog& catalog,
                         const channel::ChannelParams& channel_params,
                         const genmodel::DemoOptions& demo_options,
                         const IrlConfig& config, RngStream& rng) {
  config.validate();
  if (dataset.prompts.empty() || dataset.records.empty())
    throw std::invalid_argument("train_irl: dataset must be non-empty");

  const int num_strategies = catalog.num_strategies();
  const int embed_dim = static_cast<int>(dataset.prompts.front().embedding.size());
  const int state_size =
      encoded_state_size(num_strategies, config.history_length, embed_dim);
  TrainContext ctx;
  ctx.dataset = &dataset;
  ctx.expert = &expert;
  ctx.num_strategies = num_strategies;
  ctx.p_total = channel_params.p_total;

  PromptPolicy policy = make_uniform_policy(state_size, num_strategies,
                                            config.history_length, config.hidden_width,
                                            rng.next_u64());
  MlpParams disc = approx::mlp_init(
      {state_size + num_strategies, config.hidden_width, config.hidden_width, 1},
      {Activation::kTanh, Activation::kTanh, Activation::kIdentity}, rng.next_u64());
  MlpParams value_net = approx::mlp_init(
      {state_size, config.hidden_width, 1},
      {Activation::kTanh, Activation::kIdentity}, rng.next_u64());

  auto gen_opt = approx::make_optimizer(policy.network(), config.generator_lr);
  auto disc_opt = approx::make_optimizer(disc, config.discriminator_lr);
  auto value_opt = approx::make_optimizer(value_net, config.critic_lr);

  const auto& grid = dataset.power_grid;
  auto draw_context = [&](RngStream& r) {
    const int pi = static_cast<int>(r.uniform_int(dataset.prompts.size()));
    const int gi = static_cast<int>(r.uniform_int(grid.size()));
    return std::pair<int, int>(pi, gi);
  };

  // Held-out evaluation states, fixed for the whole run.
  RngStream eval_rng = rng.substream("irl-eval");
  std::vector<Rollout> eval_states(config.eval_states);
  for (auto& ev : eval_states) {
    auto [pi, gi] = draw_context(eval_rng);
    ev.prompt_index = pi;
    ev.power = grid[gi];
    ev.state = ctx.encode(dataset.prompts[pi], ev.power, config.history_length);
    ev.action = expert.lookup(dataset.prompts[pi].id, ev.power);
  }
  // Precompute channel degradation per grid power for the utility metric.
  std::vector<double> grid_ber(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    grid_ber[i] = channel::expected_ber_shadowed(channel_params, grid[i],
                                                 demo_options.distance);

  IrlTrainResult result;
  result.curve.reserve(config.epochs);

  std::vector<Rollout> policy_batch(config.batch_size);
  std::vector<Rollout> expert_batch(config.batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // (a) rollouts under the current policy, paired expert demonstrations
    for (auto& ro : policy_batch) {
      auto [pi, gi] = draw_context(rng);
      ro.prompt_index = pi;
      ro.power = grid[gi];
      ro.state = ctx.encode(dataset.prompts[pi], ro.power, config.history_length);
      // A uniform sliver keeps every action visited, otherwise a policy that
      // lands on a wrong corner stops producing any learning signal.
      ro.action = rng.uniform() < config.exploration_mix
                      ? static_cast<int>(rng.uniform_int(num_strategies))
                      : policy.sample(ro.state, rng);
    }
    for (auto& ro : expert_batch) {
      auto [pi, gi] = draw_context(rng);
      ro.prompt_index = pi;
      ro.power = grid[gi];
      ro.state = ctx.encode(dataset.prompts[pi], ro.power, config.history_length);
      ro.action = expert.lookup_bucket(dataset.prompts[pi].id, gi);
    }

    // (b) discriminator ascent on expert-vs-policy separation
    double disc_loss_value = 0.0;
    for (int step = 0; step < config.discriminator_steps; ++step) {
      MlpGrads dgrads = approx::make_grads_like(disc);
      double loss = 0.0;
      for (const auto& ro : policy_batch) {
        const Eigen::VectorXd x = concat_state_action(ro.state, ro.action, num_strategies);
        ForwardCache cache;
        const double logit = approx::mlp_forward_cached(disc, x, cache)[0];
        const double d = clamp_prob(1.0 / (1.0 + std::exp(-logit)), config.prob_clamp);
        loss += -std::log(1.0 - d) / policy_batch.size();
        Eigen::VectorXd upstream(1);
        upstream[0] = d / policy_batch.size();  // d(-log(1-D))/dlogit = D
        approx::mlp_backward(disc, cache, upstream, dgrads);
      }
      for (const auto& ro : expert_batch) {
        const Eigen::VectorXd x = concat_state_action(ro.state, ro.action, num_strategies);
        ForwardCache cache;
        const double logit = approx::mlp_forward_cached(disc, x, cache)[0];
        const double d = clamp_prob(1.0 / (1.0 + std::exp(-logit)), config.prob_clamp);
        loss += -std::log(d) / expert_batch.size();
        Eigen::VectorXd upstream(1);
        upstream[0] = -(1.0 - d) / expert_batch.size();  // d(-log D)/dlogit = -(1-D)
        approx::mlp_backward(disc, cache, upstream, dgrads);
      }
      disc_loss_value = loss;
      approx::optimizer_step(disc, dgrads, disc_opt);
    }

    // (c) imitation rewards and advantages (horizon-1: next value is zero)
    std::vector<double> rewards(policy_batch.size());
    std::vector<double> advantages_std(policy_batch.size());
    double mean_reward = 0.0;
    for (std::size_t i = 0; i < policy_batch.size(); ++i) {
      const Eigen::VectorXd x =
          concat_state_action(policy_batch[i].state, policy_batch[i].action, num_strategies);
      rewards[i] = gail_reward(disc, x);
      mean_reward += rewards[i];
      const double v_now = approx::mlp_forward(value_net, policy_batch[i].state)[0];
      advantages_std[i] = advantage(rewards[i], config.discount, v_now, 0.0);
    }
    mean_reward /= policy_batch.size();
    standardize(advantages_std);

    // old policy probabilities for the ratio
    std::vector<double> old_prob(policy_batch.size());
    for (std::size_t i = 0; i < policy_batch.size(); ++i) {
      const Eigen::VectorXd p = policy.probabilities(policy_batch[i].state);
      old_prob[i] = std::max(p[policy_batch[i].action], config.prob_clamp);
    }

    // (d) clipped-surrogate generator steps (ascent via negated gradients)
    for (int it = 0; it < config.ppo_epochs; ++it) {
      MlpGrads ggrads = approx::make_grads_like(policy.network());
      for (std::size_t i = 0; i < policy_batch.size(); ++i) {
        ForwardCache cache;
        const Eigen::VectorXd logits =
            approx::mlp_forward_cached(policy.network(), policy_batch[i].state, cache);
        const Eigen::VectorXd probs = softmax(logits);
        const int a = policy_batch[i].action;
        const double pa = std::max(probs[a], config.prob_clamp);
        const double ratio = pa / old_prob[i];
        const double adv = advantages_std[i];
        const double clipped =
            std::min(1.0 + config.clip_epsilon, std::max(1.0 - config.clip_epsilon, ratio));
        // min(r*adv, clip(r)*adv): gradient flows only through the r branch.
        const double dobj_dratio = (ratio * adv <= clipped * adv) ? adv : 0.0;
        const double dobj_dpa = dobj_dratio / old_prob[i];
        // dpa/dlogit_j = pa * (1{j==a} - probs_j); ascend => negate for the
        // descent-convention optimizer. The entropy bonus uses
        // dH/dlogit_j = -probs_j * (log probs_j + H).
        double entropy = 0.0;
        for (Eigen::Index j = 0; j < probs.size(); ++j)
          entropy -= probs[j] * std::log(std::max(probs[j], config.prob_clamp));
        Eigen::VectorXd upstream(probs.size());
        for (Eigen::Index j = 0; j < probs.size(); ++j) {
          const double indicator = (j == a) ? 1.0 : 0.0;
          const double dj = dobj_dpa * pa * (indicator - probs[j]);
          const double dh = -probs[j] *
                            (std::log(std::max(probs[j], config.prob_clamp)) + entropy);
          upstream[j] =
              -(dj + config.entropy_coef * dh) / static_cast<double>(policy_batch.size());
        }
        approx::mlp_backward(policy.network(), cache, upstream, ggrads);
      }
      approx::optimizer_step(policy.network(), ggrads, gen_opt);
    }

    // (e) value regression toward the reward targets
    {
      MlpGrads vgrads = approx::make_grads_like(value_net);
      for (std::size_t i = 0; i < policy_batch.size(); ++i) {
        ForwardCache cache;
        const double v =
            approx::mlp_forward_cached(value_net, policy_batch[i].state, cache)[0];
        Eigen::VectorXd upstream(1);
        upstream[0] = 2.0 * (v - rewards[i]) / policy_batch.size();
        approx::mlp_backward(value_net, cache, upstream, vgrads);
      }
      approx::optimizer_step(value_net, vgrads, value_opt);
    }

    if (!std::isfinite(disc_loss_value) || !std::isfinite(mean_reward))
      throw NumericError("train_irl: non-finite loss at epoch " + std::to_string(epoch));

    // (f) held-out diagnostics
    RngStream metric_rng = rng.substream("irl-metrics-" + std::to_string(epoch));
    int matches = 0;
    double utility = 0.0;
    for (const auto& ev : eval_states) {
      const int chosen = policy.sample(ev.state, metric_rng);
      if (chosen == ev.action) ++matches;
      const genmodel::PromptSpec& prompt = dataset.prompts[ev.prompt_index];
      const int bucket = expert.bucket_of(ev.power);
      const double raw = genmodel::raw_quality(catalog, prompt, chosen, metric_rng);
      utility += genmodel::user_side_score(
          raw, grid_ber[bucket],
          genmodel::effective_complexity(catalog, chosen, prompt.complexity),
          demo_options.kappa);
    }
    IrlCurvePoint point;
    point.epoch = epoch;
    point.disc_loss = disc_loss_value;
    point.gen_reward = mean_reward;
    point.expert_match_rate = static_cast<double>(matches) / eval_states.size();
    point.utility = utility / eval_states.size();
    result.curve.push_back(point);
  }

  result.policy = std::move(policy);
  result.discriminator = std::move(disc);
  result.value_net = std::move(value_net);
  return result;
}

StrategySelector policy_selector(const PromptPolicy& policy, double p_total, bool greedy) {
  PromptPolicy copy = policy;
  return [copy, p_total, greedy](const genmodel::PromptSpec& prompt, double power,
                                 RngStream& rng) {
    IrlState s;
    s.embedding = prompt.embedding;
    s.power_norm = std::min(1.0, std::max(1e-9, power / p_total));
    const Eigen::VectorXd x =
        encode_irl_state(s, copy.num_strategies(), copy.history_length());
    return greedy ? copy.greedy(x) : copy.sample(x, rng);
  };
}

StrategySelector fixed_selector(int strategy) {
  return [strategy](const genmodel::PromptSpec&, double, RngStream&) { return strategy; };
}

StrategySelector random_selector(int num_strategies) {
  return [num_strategies](const genmodel::PromptSpec&, double, RngStream& rng) {
    return static_cast<int>(rng.uniform_int(num_strategies));
  };
}

StrategySelector expert_selector(const genmodel::ExpertPolicy& expert) {
  genmodel::ExpertPolicy copy = expert;
  return [copy](const genmodel::PromptSpec& prompt, double power, RngStream&) {
    return copy.lookup(prompt.id, power);
  };
}

PolicyEvalResult evaluate_policy(const StrategySelector& selector,
                                 const std::vector<genmodel::PromptSpec>& prompts,
                                 const genmodel::StrategyCatalog& catalog,
                                 const channel::ChannelParams& channel_params,
                                 const genmodel::DemoOptions& demo_options,
                                 const std::vector<double>& power_grid, int n_trials,
                                 RngStream& rng) {
  if (n_trials < 1) throw std::invalid_argument("evaluate_policy: n_trials must be >= 1");
  if (prompts.empty() || power_grid.empty())
    throw std::invalid_argument("evaluate_policy: prompts and power grid required");

  std::vector<double> grid_ber(power_grid.size());
  for (std::size_t i = 0; i < power_grid.size(); ++i)
    grid_ber[i] = channel::expected_ber_shadowed(channel_params, power_grid[i],
                                                 demo_options.distance);

  PolicyEvalResult res;
  res.strategy_histogram.assign(catalog.num_strategies(), 0);
  std::vector<double> sum(catalog.num_strategies(), 0.0);
  std::vector<double> sum_sq(catalog.num_strategies(), 0.0);
  double total = 0.0;
  for (int t = 0; t < n_trials; ++t) {
    const auto& prompt = prompts[rng.uniform_int(prompts.size())];
    const std::size_t gi = rng.uniform_int(power_grid.size());
    const int strategy = selector(prompt, power_grid[gi], rng);
    const double raw = genmodel::raw_quality(catalog, prompt, strategy, rng);
    const double score = genmodel::user_side_score(
        raw, grid_ber[gi], genmodel::effective_complexity(catalog, strategy, prompt.complexity),
        demo_options.kappa);
    total += score;
    res.strategy_histogram[strategy] += 1;
    sum[strategy] += score;
    sum_sq[strategy] += score * score;
  }
  res.mean_score = total / n_trials;
  res.per_strategy_mean.assign(catalog.num_strategies(), 0.0);
  res.per_strategy_std.assign(catalog.num_strategies(), 0.0);
  for (int k = 0; k < catalog.num_strategies(); ++k) {
    const int n = res.strategy_histogram[k];
    if (n > 0) {
      res.per_strategy_mean[k] = sum[k] / n;
      const double var = std::max(0.0, sum_sq[k] / n - res.per_strategy_mean[k] *
                                                           res.per_strategy_mean[k]);
      res.per_strategy_std[k] = std::sqrt(var);
    }
  }
  return res;
}

double expert_match_rate(const StrategySelector& selector,
                         const genmodel::ExpertPolicy& expert,
                         const std::vector<genmodel::PromptSpec>& prompts,
                         const std::vector<double>& power_grid, int n_states,
                         RngStream& rng) {
  if (n_states < 1) throw std::invalid_argument("expert_match_rate: n_states must be >= 1");
  int matches = 0;
  for (int t = 0; t < n_states; ++t) {
    const auto& prompt = prompts[rng.uniform_int(prompts.size())];
    const double power = power_grid[rng.uniform_int(power_grid.size())];
    const int chosen = selector(prompt, power, rng);
    if (chosen == expert.lookup(prompt.id, power)) ++matches;
  }
  return static_cast<double>(matches) / n_states;
}

}  // namespace aes::imitation
