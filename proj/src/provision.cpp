#include "aes/provision.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "aes/errors.hpp"

namespace aes::provision {
namespace {

constexpr double kScoreCeiling = 10.0;
constexpr double kBudgetSlack = 1e-9;  // absorbs decode rounding on sum(P)

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double latency_factor(int n, double l_max, double t_inference) {
  const double arg = l_max / (n * t_inference);
  if (n == 1) return std::log(arg);
  return std::log(arg) / std::log(static_cast<double>(n));
}

}  // namespace

void QoEConfig::validate() const {
  if (l_max <= 0.0) throw ConfigError("qoe: l_max must be positive");
  if (t_inference <= 0.0) throw ConfigError("qoe: t_inference must be positive");
  if (c_inference < 0.0) throw ConfigError("qoe: c_inference must be >= 0");
  if (eta_q < 0.0 || eta_c < 0.0) throw ConfigError("qoe: weights must be >= 0");
  if (penalty <= 0.0) throw ConfigError("qoe: penalty must be positive");
  if (n_max < 1) throw ConfigError("qoe: n_max must be >= 1");
}

void ProvisionState::validate() const {
  if (prompts.empty()) throw std::invalid_argument("state: at least one user required");
  if (distances.size() != prompts.size())
    throw std::invalid_argument("state: one distance per user required");
  for (double d : distances)
    if (d <= 0.0) throw std::invalid_argument("state: distances must be positive");
  for (const auto& p : prompts)
    if (p.quality_threshold < 0.0 || p.quality_threshold > 10.0)
      throw std::invalid_argument("state: thresholds must be in [0,10]");
  if (p_total <= 0.0) throw std::invalid_argument("state: power budget must be positive");
}

ProvisionState make_state(std::vector<genmodel::PromptSpec> prompts,
                          std::vector<double> distances,
                          const channel::ChannelParams& channel_params) {
  ProvisionState s;
  s.prompts = std::move(prompts);
  s.distances = std::move(distances);
  s.p_total = channel_params.p_total;
  s.snr_ref = channel::expected_snr(channel_params.p_total, channel_params.psi,
                                    channel_params.n0);
  s.validate();
  return s;
}

int encoded_state_size(const ProvisionState& state) {
  const int embed_dim = static_cast<int>(state.prompts.front().embedding.size());
  return state.num_users() * (embed_dim + 2) + 2;
}

Eigen::VectorXd encode_state(const ProvisionState& state) {
  state.validate();
  Eigen::VectorXd x(encoded_state_size(state));
  Eigen::Index k = 0;
  for (int u = 0; u < state.num_users(); ++u) {
    const auto& emb = state.prompts[u].embedding;
    x.segment(k, emb.size()) = emb;
    k += emb.size();
    x[k++] = state.distances[u] / 100.0;
    x[k++] = state.prompts[u].quality_threshold / 10.0;
  }
  x[k++] = state.p_total;
  x[k++] = std::log10(1.0 + state.snr_ref) / 6.0;
  return x;
}

QoeOutcome qoe(int n, const std::vector<double>& qualities, double q_th,
               const QoEConfig& config) {
  config.validate();
  if (n < 1) throw std::invalid_argument("qoe: n must be >= 1");
  if (static_cast<int>(qualities.size()) != n)
    throw std::invalid_argument("qoe: need one quality per trial");
  if (q_th <= 0.0) throw std::invalid_argument("qoe: threshold must be positive");

  QoeOutcome out;
  out.latency_ok = n * config.t_inference <= config.l_max;
  const double best = *std::max_element(qualities.begin(), qualities.end());
  out.threshold_ok = best >= q_th;
  if (out.latency_ok && out.threshold_ok)
    out.value = latency_factor(n, config.l_max, config.t_inference) * std::log(best / q_th);
  return out;
}

double cost(int n, double power, double c_inference) {
  if (n < 1) throw std::invalid_argument("cost: n must be >= 1");
  if (power < 0.0) throw std::invalid_argument("cost: power must be >= 0");
  return n * (c_inference + power);
}

double reward(const ProvisionState& state, const ProvisionAction& action,
              const std::vector<std::vector<double>>& user_side_qualities,
              const QoEConfig& config) {
  const int q = state.num_users();
  if (static_cast<int>(action.trials.size()) != q ||
      static_cast<int>(action.powers.size()) != q ||
      static_cast<int>(user_side_qualities.size()) != q)
    throw std::invalid_argument("reward: action/quality shapes must match user count");

  double power_sum = 0.0;
  for (double p : action.powers) power_sum += p;
  if (power_sum > state.p_total + kBudgetSlack) return -config.penalty * q;

  double total = 0.0;
  for (int u = 0; u < q; ++u) {
    if (action.trials[u] < 1) {
      total -= config.penalty;
      continue;
    }
    const QoeOutcome out =
        qoe(action.trials[u], user_side_qualities[u], state.threshold(u), config);
    if (!out.latency_ok || !out.threshold_ok) {
      total -= config.penalty;
      continue;
    }
    total += config.eta_q * out.value -
             config.eta_c * cost(action.trials[u], action.powers[u], config.c_inference);
  }
  return total;
}

ServiceEnv::ServiceEnv(ProvisionState state, genmodel::StrategyCatalog catalog,
                       channel::ChannelParams channel_params, QoEConfig qoe_config,
                       double kappa, imitation::StrategySelector selector)
    : state_(std::move(state)), catalog_(std::move(catalog)),
      channel_params_(channel_params), qoe_config_(qoe_config), kappa_(kappa),
      selector_(std::move(selector)) {
  state_.validate();
  catalog_.validate();
  channel_params_.validate();
  qoe_config_.validate();
  if (kappa_ < 0.0) throw std::invalid_argument("env: kappa must be >= 0");
}

StepResult ServiceEnv::step(const ProvisionAction& action, RngStream& rng) const {
  const int q = state_.num_users();
  if (static_cast<int>(action.trials.size()) != q ||
      static_cast<int>(action.powers.size()) != q)
    throw std::invalid_argument("env: action shape must match user count");

  StepResult result;
  result.users.resize(q);
  std::vector<std::vector<double>> qualities(q);
  for (int u = 0; u < q; ++u) {
    UserDiagnostics& diag = result.users[u];
    const auto& prompt = state_.prompts[u];
    diag.strategy = selector_(prompt, action.powers[u], rng);
    diag.ber = action.powers[u] > 0.0
                   ? channel::expected_ber_shadowed(channel_params_, action.powers[u],
                                                    state_.distances[u])
                   : 0.5;
    const double c_eff =
        genmodel::effective_complexity(catalog_, diag.strategy, prompt.complexity);
    const int n = std::max(1, action.trials[u]);
    qualities[u].resize(n);
    for (int t = 0; t < n; ++t) {
      const double raw = genmodel::raw_quality(catalog_, prompt, diag.strategy, rng);
      qualities[u][t] = genmodel::user_side_score(raw, diag.ber, c_eff, kappa_);
    }
    diag.best_quality = *std::max_element(qualities[u].begin(), qualities[u].end());
    if (action.trials[u] >= 1) {
      const QoeOutcome out =
          qoe(action.trials[u], qualities[u], state_.threshold(u), qoe_config_);
      diag.qoe_value = out.value;
      diag.latency_ok = out.latency_ok;
      diag.threshold_ok = out.threshold_ok;
      diag.cost_value = cost(action.trials[u], action.powers[u], qoe_config_.c_inference);
    } else {
      diag.threshold_ok = false;
    }
    if (!diag.latency_ok || !diag.threshold_ok || action.trials[u] < 1) {
      result.violations += 1;
    } else {
      result.qoe_sum += diag.qoe_value;
      result.cost_sum += diag.cost_value;
    }
  }
  result.reward = reward(state_, action, qualities, qoe_config_);
  return result;
}

DeterministicSelector fixed_deterministic_selector(int strategy) {
  return [strategy](const genmodel::PromptSpec&, double) { return strategy; };
}

DeterministicSelector greedy_policy_selector(const imitation::PromptPolicy& policy,
                                             double p_total) {
  imitation::PromptPolicy copy = policy;
  return [copy, p_total](const genmodel::PromptSpec& prompt, double power) {
    imitation::IrlState s;
    s.embedding = prompt.embedding;
    s.power_norm = std::min(1.0, std::max(1e-9, power / p_total));
    return copy.greedy(
        imitation::encode_irl_state(s, copy.num_strategies(), copy.history_length()));
  };
}

double expected_user_term(double mean, double sigma, double degradation_factor,
                          double q_th, int n, double power, const QoEConfig& config) {
  if (n < 1) return -config.penalty;
  if (n * config.t_inference > config.l_max) return -config.penalty;
  if (degradation_factor <= 0.0) return -config.penalty;

  const double x_q = q_th / degradation_factor;  // required raw quality
  if (x_q > kScoreCeiling) return -config.penalty;

  const double f_at_xq = normal_cdf((x_q - mean) / sigma);
  const double p_violation = std::pow(f_at_xq, n);
  const double p_ok = 1.0 - p_violation;

  // E[ln(f * max / q_th); max raw >= x_q] for max of n iid clamped normals:
  // continuous density n F^(n-1) phi on [x_q, 10] plus the ceiling atom.
  auto integrand = [&](double x) {
    const double z = (x - mean) / sigma;
    const double cdf = normal_cdf(z);
    const double pdf = std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
    return std::log(degradation_factor * x / q_th) * n * std::pow(cdf, n - 1) * pdf;
  };
  double quad_error = 0.0;
  double integral = 0.0;
  if (x_q < kScoreCeiling) {
    integral = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        integrand, x_q, kScoreCeiling, 15, 1e-8, &quad_error);
  }
  const double cdf_ceiling = normal_cdf((kScoreCeiling - mean) / sigma);
  const double ceiling_atom = (1.0 - std::pow(cdf_ceiling, n)) *
                              std::log(degradation_factor * kScoreCeiling / q_th);
  const double expected_log = integral + ceiling_atom;
  if (!std::isfinite(expected_log) || quad_error > 1e-6)
    throw NumericError("expected_user_term: quadrature did not converge");

  const double lat = latency_factor(n, config.l_max, config.t_inference);
  const double expected_qoe = lat * expected_log;
  const double c = cost(n, power, config.c_inference);
  return config.eta_q * expected_qoe - config.eta_c * c * p_ok - config.penalty * p_violation;
}

OracleResult brute_force_oracle(const ProvisionState& state, const QoEConfig& config,
                                const genmodel::StrategyCatalog& catalog,
                                const channel::ChannelParams& channel_params, double kappa,
                                const DeterministicSelector& selector, int grid_units) {
  state.validate();
  config.validate();
  const int q = state.num_users();
  if (q > 4) throw std::invalid_argument("oracle: at most 4 users");
  if (config.n_max > 6) throw std::invalid_argument("oracle: n_max capped at 6");
  if (grid_units == 0) grid_units = (q == 3) ? 21 : 20;
  if (grid_units < q) throw std::invalid_argument("oracle: grid too coarse for user count");
  const int points_per_axis = grid_units - q + 1;
  if (points_per_axis > 21)
    throw std::invalid_argument("oracle: more than 21 power grid points per axis");

  // Per-user tables over (n, power share). Shares range 1..grid_units-(q-1).
  const int max_units = grid_units - (q - 1);
  std::vector<std::vector<std::vector<double>>> term(
      q, std::vector<std::vector<double>>(config.n_max + 1,
                                          std::vector<double>(max_units + 1, 0.0)));
  for (int u = 0; u < q; ++u) {
    const auto& prompt = state.prompts[u];
    for (int units = 1; units <= max_units; ++units) {
      const double power = state.p_total * units / grid_units;
      const int strategy = selector(prompt, power);
      const double mu = catalog.mean(prompt.class_id, strategy);
      const double ber =
          channel::expected_ber_shadowed(channel_params, power, state.distances[u]);
      const double c_eff = genmodel::effective_complexity(catalog, strategy, prompt.complexity);
      const double factor = std::max(0.0, 1.0 - kappa * c_eff * ber);
      for (int n = 1; n <= config.n_max; ++n)
        term[u][n][units] = expected_user_term(mu, catalog.sigma, factor,
                                               prompt.quality_threshold, n, power, config);
    }
  }

  // Exhaustive scan in ascending lexicographic order over (trials, shares);
  // strict improvement keeps the lexicographically smallest argmax.
  std::vector<int> trials(q, 1), shares(q, 1);
  OracleResult best;
  best.expected_reward = -std::numeric_limits<double>::infinity();

  std::vector<int> trial_vec(q), share_vec(q);
  std::function<void(int, int)> scan_shares = [&](int user, int remaining) {
    if (user == q - 1) {
      share_vec[user] = remaining;
      double total = 0.0;
      for (int u = 0; u < q; ++u) total += term[u][trial_vec[u]][share_vec[u]];
      best.actions_evaluated += 1;
      if (total > best.expected_reward) {
        best.expected_reward = total;
        best.action.trials = trial_vec;
        best.action.powers.resize(q);
        double assigned = 0.0;
        for (int u = 0; u < q; ++u) {
          best.action.powers[u] = state.p_total * share_vec[u] / grid_units;
          assigned += best.action.powers[u];
        }
        best.action.powers[q - 1] += state.p_total - assigned;  // exact budget
      }
      return;
    }
    for (int units = 1; units <= remaining - (q - 1 - user); ++units) {
      share_vec[user] = units;
      scan_shares(user + 1, remaining - units);
    }
  };
  std::function<void(int)> scan_trials = [&](int user) {
    if (user == q) {
      scan_shares(0, grid_units);
      return;
    }
    for (int n = 1; n <= config.n_max; ++n) {
      trial_vec[user] = n;
      scan_trials(user + 1);
    }
  };
  scan_trials(0);
  return best;
}

ProvisionAction static_baseline(const ProvisionState& state, const QoEConfig& config) {
  state.validate();
  (void)config;
  ProvisionAction a;
  a.trials.assign(state.num_users(), 4);
  a.powers.assign(state.num_users(), state.p_total / state.num_users());
  return a;
}

ProvisionAction random_baseline(const ProvisionState& state, const QoEConfig& config,
                                RngStream& rng) {
  state.validate();
  ProvisionAction a;
  const int q = state.num_users();
  a.trials.resize(q);
  a.powers.resize(q);
  for (int u = 0; u < q; ++u)
    a.trials[u] = 1 + static_cast<int>(rng.uniform_int(config.n_max));
  // Uniform simplex point via normalized exponentials, scaled by a uniform
  // utilization draw in (0, 1].
  double sum = 0.0;
  for (int u = 0; u < q; ++u) {
    a.powers[u] = -std::log(1.0 - rng.uniform());
    sum += a.powers[u];
  }
  const double utilization = 1.0 - rng.uniform();  // (0, 1]
  for (int u = 0; u < q; ++u) a.powers[u] *= utilization * state.p_total / sum;
  return a;
}

}  // namespace aes::provision
