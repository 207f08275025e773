#include "aes/channel.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "aes/errors.hpp"

namespace aes::channel {
namespace {

constexpr double kSqrtPi = 1.7724538509055160272981674833411;

// One shared 32-node rule for the shadowing expectation.
const GaussHermiteRule& shadowing_rule() {
  static const GaussHermiteRule rule = gauss_hermite_rule(32);
  return rule;
}

}  // namespace

void ChannelParams::validate() const {
  if (m < 0.5) throw std::invalid_argument("channel: fading severity m must be >= 0.5");
  if (psi <= 0.0) throw std::invalid_argument("channel: psi must be positive");
  if (xi <= 0.0) throw std::invalid_argument("channel: path-loss exponent must be positive");
  if (sigma_s < 0.0) throw std::invalid_argument("channel: sigma_s must be non-negative");
  if (n0 <= 0.0) throw std::invalid_argument("channel: noise power must be positive");
  if (p_total <= 0.0) throw std::invalid_argument("channel: power budget must be positive");
}

double sample_small_scale_gain(const ChannelParams& params, RngStream& rng) {
  params.validate();
  // X^2 ~ Gamma(shape = m, scale = psi / m), so E[X^2] = psi.
  return rng.gamma(params.m, params.psi / params.m);
}

double large_scale_gain(double distance, double xi, double sigma_s, double z) {
  if (distance <= 0.0) throw std::invalid_argument("large_scale_gain: distance must be positive");
  return std::pow(distance, -xi) * std::exp(sigma_s * z);
}

double instantaneous_snr(double power, double small_scale_gain,
                         double large_scale_gain, double n0) {
  if (n0 <= 0.0) throw std::invalid_argument("instantaneous_snr: noise power must be positive");
  if (power < 0.0) throw std::invalid_argument("instantaneous_snr: power must be non-negative");
  return power * small_scale_gain * large_scale_gain / n0;
}

double expected_snr(double power, double psi, double n0) {
  if (n0 <= 0.0) throw std::invalid_argument("expected_snr: noise power must be positive");
  return power * psi / n0;
}

double expected_snr(double power, double psi, double n0, double distance, double xi) {
  if (distance <= 0.0) throw std::invalid_argument("expected_snr: distance must be positive");
  return expected_snr(power, psi, n0) * std::pow(distance, -xi);
}

std::vector<double> allocate_power(const std::vector<double>& weights, double p_total) {
  if (weights.empty()) throw std::invalid_argument("allocate_power: no weights");
  if (p_total <= 0.0) throw std::invalid_argument("allocate_power: budget must be positive");
  double sum = 0.0;
  for (double w : weights) {
    if (w <= 0.0) throw std::invalid_argument("allocate_power: weights must be positive");
    sum += w;
  }
  std::vector<double> powers(weights.size());
  double assigned = 0.0;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    powers[i] = weights[i] * p_total / sum;
    assigned += powers[i];
  }
  powers.back() = p_total - assigned;  // closes rounding, sum is exact
  return powers;
}

double ber_numeric(double mean_snr, double m) {
  if (mean_snr < 0.0) throw std::invalid_argument("ber_numeric: mean_snr must be >= 0");
  if (m < 0.5) throw std::invalid_argument("ber_numeric: m must be >= 0.5");
  if (mean_snr == 0.0) return 0.5;  // Q(0) = 0.5 under a degenerate SNR at zero

  // With SNR ~ Gamma(shape m, mean g), substitute snr = (g/m) * v^2:
  //   BER = 1/Gamma(m) * Int_0^inf erfc(sqrt(g/m) * v) v^(2m-1) exp(-v^2) dv,
  // which is smooth at v = 0 for every m >= 0.5.
  const double c = std::sqrt(mean_snr / m);
  const double log_gamma_m = std::lgamma(m);
  auto integrand = [&](double v) {
    if (v <= 0.0) return 0.0;
    const double log_term = (2.0 * m - 1.0) * std::log(v) - v * v - log_gamma_m;
    return std::erfc(c * v) * std::exp(log_term);
  };
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      integrand, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-10, &error);
  if (!std::isfinite(value) || error > 1e-6)
    throw NumericError("ber_numeric: quadrature did not converge");
  // Clamp quadrature noise into the physical range.
  return std::min(0.5, std::max(0.0, value));
}

double ber_closed_form(double mean_snr, double m) {
  if (mean_snr < 0.0) throw std::invalid_argument("ber_closed_form: mean_snr must be >= 0");
  if (m < 0.5) throw std::invalid_argument("ber_closed_form: m must be >= 0.5");
  const double prefactor = std::tgamma(m) / (2.0 * std::tgamma(m + 0.5));
  const double inner = 1.0 - std::sqrt(m / (m + mean_snr / 2.0));
  return prefactor * std::pow(inner, m);
}

GaussHermiteRule gauss_hermite_rule(int order) {
  if (order < 1) throw std::invalid_argument("gauss_hermite_rule: order must be >= 1");
  // Golub-Welsch on the Hermite Jacobi matrix: zero diagonal, off-diagonal
  // sqrt(k/2). Weights are sqrt(pi) times the squared first eigenvector
  // components.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double b = std::sqrt(k / 2.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  GaussHermiteRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    rule.nodes[i] = solver.eigenvalues()[i];
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[i] = kSqrtPi * v0 * v0;
  }
  return rule;
}

double expected_ber_shadowed(const ChannelParams& params, double power, double distance) {
  params.validate();
  if (power < 0.0) throw std::invalid_argument("expected_ber_shadowed: power must be >= 0");
  if (distance <= 0.0)
    throw std::invalid_argument("expected_ber_shadowed: distance must be positive");
  if (power == 0.0) return 0.5;

  const double base_snr = power * params.psi * std::pow(distance, -params.xi) / params.n0;
  if (params.sigma_s == 0.0) return ber_numeric(base_snr, params.m);

  // E[f(Z)] for Z ~ N(0,1) via Gauss-Hermite: (1/sqrt(pi)) sum w_i f(sqrt(2) x_i).
  const GaussHermiteRule& rule = shadowing_rule();
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double z = std::sqrt(2.0) * rule.nodes[i];
    acc += rule.weights[i] * ber_numeric(base_snr * std::exp(params.sigma_s * z), params.m);
  }
  return acc / kSqrtPi;
}

void write_ber_table(std::ostream& out, const std::vector<double>& m_values,
                     const std::vector<double>& snr_db_values) {
  out << "# " << kClosedFormBerNote << "\n";
  out << "m,mean_snr_db,ber_numeric,ber_paper\n";
  char buf[160];
  for (double m : m_values) {
    for (double snr_db : snr_db_values) {
      const double snr = std::pow(10.0, snr_db / 10.0);
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", m, snr_db,
                    ber_numeric(snr, m), ber_closed_form(snr, m));
      out << buf;
    }
  }
}

}  // namespace aes::channel
