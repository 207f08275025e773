#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "aes/rng.hpp"

namespace aes::approx {

enum class Activation { kIdentity, kTanh, kRelu, kSigmoid };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

/// Dense multilayer perceptron parameters. weights[l] maps layer l to l+1
/// (rows = fan_out, cols = fan_in); activations[l] applies to layer l+1's
/// pre-activation. All storage is double precision.
struct MlpParams {
  std::vector<int> layer_sizes;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  std::vector<Activation> activations;

  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  std::size_t num_layers() const { return weights.size(); }
  std::size_t parameter_count() const;
};

/// Per-layer gradients, same shapes as the parameters they refer to.
struct MlpGrads {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  void setZero();
  void add(const MlpGrads& other, double scale = 1.0);
  bool allFinite() const;
};

/// Cached layer activations from a forward pass, consumed by mlp_backward.
struct ForwardCache {
  std::vector<Eigen::VectorXd> layer_outputs;  // [input, h1, ..., output]
  std::vector<Eigen::VectorXd> pre_activations;
};

/// Initialize with uniform draws in +-sqrt(6 / (fan_in + fan_out)), biases
/// zero. Deterministic in seed. Layer count must be >= 2 and all sizes
/// positive, otherwise std::invalid_argument.
MlpParams mlp_init(const std::vector<int>& layer_sizes,
                   const std::vector<Activation>& activations,
                   std::uint64_t seed);

/// Same shapes as mlp_init but every weight and bias set to zero.
MlpParams mlp_zeros(const std::vector<int>& layer_sizes,
                    const std::vector<Activation>& activations);

MlpGrads make_grads_like(const MlpParams& params);

Eigen::VectorXd mlp_forward(const MlpParams& params, const Eigen::VectorXd& input);
Eigen::VectorXd mlp_forward_cached(const MlpParams& params,
                                   const Eigen::VectorXd& input,
                                   ForwardCache& cache);

/// Reverse-mode gradients of upstream_grad . output with respect to every
/// parameter and to the input. `cache` must come from mlp_forward_cached on
/// the same params/input.
Eigen::VectorXd mlp_backward(const MlpParams& params, const ForwardCache& cache,
                             const Eigen::VectorXd& upstream_grad,
                             MlpGrads& grads_out);

/// Convenience wrapper: forward + backward in one call.
Eigen::VectorXd mlp_gradient(const MlpParams& params, const Eigen::VectorXd& input,
                             const Eigen::VectorXd& upstream_grad,
                             MlpGrads& grads_out);

// ---------------------------------------------------------------------------
// Optimizer

enum class OptimizerMode { kAdam, kPlainGradient };

/// Adaptive-moment optimizer state; kPlainGradient ignores the accumulators
/// and applies params -= lr * grad, which keeps the plain-gradient update
/// rule available for fidelity tests.
struct OptimizerState {
  double learning_rate = 1e-3;
  OptimizerMode mode = OptimizerMode::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;
  std::vector<Eigen::MatrixXd> m_weights, v_weights;
  std::vector<Eigen::VectorXd> m_biases, v_biases;
};

OptimizerState make_optimizer(const MlpParams& params, double learning_rate,
                              OptimizerMode mode = OptimizerMode::kAdam);

/// One descent step (minimization). Throws NumericError on non-finite
/// gradients; increments state.step.
void optimizer_step(MlpParams& params, const MlpGrads& grads, OptimizerState& state);

// ---------------------------------------------------------------------------
// Flat parameter views & gradient checking

Eigen::VectorXd flatten_params(const MlpParams& params);
void unflatten_params(const Eigen::VectorXd& flat, MlpParams& params);
Eigen::VectorXd flatten_grads(const MlpGrads& grads);

/// Max over parameters of |analytic - central difference| /
/// max(|analytic|, |fd|, 1e-8). `loss` must be a pure function of params.
double grad_check(const std::function<double(const MlpParams&)>& loss,
                  const std::function<MlpGrads(const MlpParams&)>& analytic_grad,
                  const MlpParams& params, double eps);

// ---------------------------------------------------------------------------
// Serialization (versioned JSON, magic "AES-MLP-1")

inline constexpr const char* kMlpFormatMagic = "AES-MLP-1";

std::string mlp_to_json(const MlpParams& params);
MlpParams mlp_from_json(const std::string& text);
void save_mlp(const MlpParams& params, const std::string& path);
MlpParams load_mlp(const std::string& path);

}  // namespace aes::approx
