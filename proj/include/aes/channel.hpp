#pragma once

#include <iosfwd>
#include <vector>

#include "aes/rng.hpp"

namespace aes::channel {

/// Fading/noise parameters shared by every transmission computation.
///   m        Nakagami fading severity (>= 0.5)
///   psi      mean of the squared fading envelope, E[X^2] (> 0)
///   xi       path-loss exponent (> 0)
///   sigma_s  log-normal shadowing standard deviation (>= 0)
///   n0       noise power in watts (> 0)
///   p_total  transmit power budget in watts (> 0)
struct ChannelParams {
  double m = 2.0;
  double psi = 1.0;
  double xi = 2.0;
  double sigma_s = 0.5;
  double n0 = 1e-4;
  double p_total = 3.0;

  void validate() const;  // throws std::invalid_argument on violation
};

/// One user's link geometry: distance in meters, power-allocation weight,
/// and a standard-normal shadowing draw.
struct UserLink {
  double distance = 1.0;
  double weight = 1.0;
  double shadowing_z = 0.0;
};

/// Squared Nakagami-m envelope: Gamma with shape m and mean psi.
double sample_small_scale_gain(const ChannelParams& params, RngStream& rng);

/// Path loss with log-normal shadowing: d^(-xi) * exp(sigma_s * z).
double large_scale_gain(double distance, double xi, double sigma_s, double z);

/// P * G * L / n0.
double instantaneous_snr(double power, double small_scale_gain,
                         double large_scale_gain, double n0);

/// Mean SNR over small-scale fading: P * psi / n0, optionally scaled by the
/// deterministic path-loss factor d^(-xi). Which variant feeds the
/// closed-form BER is ambiguous in the source model, so both are exposed.
double expected_snr(double power, double psi, double n0);
double expected_snr(double power, double psi, double n0, double distance, double xi);

/// Proportional power split: P_i = w_i * p_total / sum(w). The last element
/// absorbs rounding so the sum equals p_total exactly.
std::vector<double> allocate_power(const std::vector<double>& weights, double p_total);

/// BPSK-style bit error rate under Nakagami-m fading, computed by adaptive
/// Gauss-Kronrod quadrature of Q(sqrt(2*gamma)) against the Gamma SNR
/// density with shape m and mean mean_snr. Always in [0, 0.5] and
/// non-increasing in mean_snr. This is the default BER path.
double ber_numeric(double mean_snr, double m);

/// MGF-based closed form, evaluated exactly as printed in the reference
/// model: Gamma(m) / (2*Gamma(m+0.5)) * (1 - sqrt(m/(m + snr/2)))^m.
/// The expression INCREASES with mean SNR, which is non-physical; it is
/// retained unmodified for comparison tables and is never used as the
/// default path. Output is not clamped.
double ber_closed_form(double mean_snr, double m);

/// Marker string emitted with every comparison table so the closed-form
/// anomaly is documented next to the numbers.
inline constexpr const char* kClosedFormBerNote =
    "closed-form-ber-increases-with-mean-snr: comparison only; "
    "ber_numeric is the reference path";

/// Expectation of ber_numeric over the log-normal shadowing draw, computed
/// with 32-node Gauss-Hermite quadrature (normalized so the result is a true
/// expectation, bounded by 0.5). sigma_s == 0 short-circuits to ber_numeric.
double expected_ber_shadowed(const ChannelParams& params, double power, double distance);

/// Gauss-Hermite nodes/weights for integral of exp(-x^2) * f(x) dx.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussHermiteRule gauss_hermite_rule(int order);

/// CSV comparison table: columns m, mean_snr_db, ber_numeric, ber_paper.
/// A leading '#' line carries kClosedFormBerNote.
void write_ber_table(std::ostream& out, const std::vector<double>& m_values,
                     const std::vector<double>& snr_db_values);

}  // namespace aes::channel
