#include "aes/approx.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "aes/errors.hpp"

namespace aes::approx {
namespace {

using json = nlohmann::json;

double apply_activation(Activation a, double x) {
  switch (a) {
    case Activation::kIdentity: return x;
    case Activation::kTanh: return std::tanh(x);
    case Activation::kRelu: return x > 0.0 ? x : 0.0;
    case Activation::kSigmoid: return 1.0 / (1.0 + std::exp(-x));
  }
  return x;
}

// Derivative in terms of the pre-activation z (and post value where cheaper).
double activation_derivative(Activation a, double z) {
  switch (a) {
    case Activation::kIdentity: return 1.0;
    case Activation::kTanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::kRelu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::kSigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-z));
      return s * (1.0 - s);
    }
  }
  return 1.0;
}

void check_layer_sizes(const std::vector<int>& layer_sizes) {
  if (layer_sizes.size() < 2)
    throw std::invalid_argument("mlp: need at least an input and an output layer");
  for (int s : layer_sizes)
    if (s <= 0) throw std::invalid_argument("mlp: layer sizes must be positive");
}

std::vector<Activation> normalize_activations(const std::vector<int>& layer_sizes,
                                              const std::vector<Activation>& acts) {
  const std::size_t n = layer_sizes.size() - 1;
  if (acts.size() == n) return acts;
  if (acts.size() == 1) return std::vector<Activation>(n, acts[0]);
  throw std::invalid_argument("mlp: need one activation per non-input layer");
}

}  // namespace

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw std::invalid_argument("unknown activation: " + name);
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    n += static_cast<std::size_t>(weights[l].size()) + biases[l].size();
  return n;
}

void MlpGrads::setZero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

void MlpGrads::add(const MlpGrads& other, double scale) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += scale * other.weights[l];
    biases[l] += scale * other.biases[l];
  }
}

bool MlpGrads::allFinite() const {
  for (const auto& w : weights)
    if (!w.allFinite()) return false;
  for (const auto& b : biases)
    if (!b.allFinite()) return false;
  return true;
}

MlpParams mlp_init(const std::vector<int>& layer_sizes,
                   const std::vector<Activation>& activations, std::uint64_t seed) {
  check_layer_sizes(layer_sizes);
  MlpParams p;
  p.layer_sizes = layer_sizes;
  p.activations = normalize_activations(layer_sizes, activations);
  RngStream rng(seed, "mlp-init");
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int fan_in = layer_sizes[l];
    const int fan_out = layer_sizes[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-bound, bound);
    p.weights.push_back(std::move(w));
    p.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return p;
}

MlpParams mlp_zeros(const std::vector<int>& layer_sizes,
                    const std::vector<Activation>& activations) {
  check_layer_sizes(layer_sizes);
  MlpParams p;
  p.layer_sizes = layer_sizes;
  p.activations = normalize_activations(layer_sizes, activations);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    p.weights.push_back(Eigen::MatrixXd::Zero(layer_sizes[l + 1], layer_sizes[l]));
    p.biases.push_back(Eigen::VectorXd::Zero(layer_sizes[l + 1]));
  }
  return p;
}

MlpGrads make_grads_like(const MlpParams& params) {
  MlpGrads g;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    g.weights.push_back(Eigen::MatrixXd::Zero(params.weights[l].rows(),
                                              params.weights[l].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(params.biases[l].size()));
  }
  return g;
}

Eigen::VectorXd mlp_forward(const MlpParams& params, const Eigen::VectorXd& input) {
  ForwardCache cache;
  return mlp_forward_cached(params, input, cache);
}

Eigen::VectorXd mlp_forward_cached(const MlpParams& params,
                                   const Eigen::VectorXd& input, ForwardCache& cache) {
  if (input.size() != params.input_size())
    throw std::invalid_argument("mlp_forward: input length does not match first layer");
  cache.layer_outputs.clear();
  cache.pre_activations.clear();
  cache.layer_outputs.push_back(input);
  Eigen::VectorXd x = input;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    Eigen::VectorXd z = params.weights[l] * x + params.biases[l];
    cache.pre_activations.push_back(z);
    Eigen::VectorXd y(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i)
      y[i] = apply_activation(params.activations[l], z[i]);
    cache.layer_outputs.push_back(y);
    x = std::move(y);
  }
  return x;
}

Eigen::VectorXd mlp_backward(const MlpParams& params, const ForwardCache& cache,
                             const Eigen::VectorXd& upstream_grad, MlpGrads& grads_out) {
  if (upstream_grad.size() != params.output_size())
    throw std::invalid_argument("mlp_backward: upstream length does not match output layer");
  if (cache.layer_outputs.size() != params.weights.size() + 1)
    throw std::invalid_argument("mlp_backward: cache does not match network depth");

  Eigen::VectorXd delta = upstream_grad;
  for (std::size_t li = params.weights.size(); li-- > 0;) {
    const Eigen::VectorXd& z = cache.pre_activations[li];
    Eigen::VectorXd dz(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i)
      dz[i] = delta[i] * activation_derivative(params.activations[li], z[i]);
    grads_out.weights[li] += dz * cache.layer_outputs[li].transpose();
    grads_out.biases[li] += dz;
    delta = params.weights[li].transpose() * dz;
  }
  return delta;  // gradient with respect to the input
}

Eigen::VectorXd mlp_gradient(const MlpParams& params, const Eigen::VectorXd& input,
                             const Eigen::VectorXd& upstream_grad, MlpGrads& grads_out) {
  ForwardCache cache;
  mlp_forward_cached(params, input, cache);
  return mlp_backward(params, cache, upstream_grad, grads_out);
}

OptimizerState make_optimizer(const MlpParams& params, double learning_rate,
                              OptimizerMode mode) {
  if (learning_rate <= 0.0)
    throw std::invalid_argument("optimizer: learning rate must be positive");
  OptimizerState s;
  s.learning_rate = learning_rate;
  s.mode = mode;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    s.m_weights.push_back(Eigen::MatrixXd::Zero(params.weights[l].rows(),
                                                params.weights[l].cols()));
    s.v_weights.push_back(Eigen::MatrixXd::Zero(params.weights[l].rows(),
                                                params.weights[l].cols()));
    s.m_biases.push_back(Eigen::VectorXd::Zero(params.biases[l].size()));
    s.v_biases.push_back(Eigen::VectorXd::Zero(params.biases[l].size()));
  }
  return s;
}

void optimizer_step(MlpParams& params, const MlpGrads& grads, OptimizerState& state) {
  if (!grads.allFinite()) throw NumericError("optimizer_step: non-finite gradient");
  state.step += 1;
  if (state.mode == OptimizerMode::kPlainGradient) {
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
      params.weights[l] -= state.learning_rate * grads.weights[l];
      params.biases[l] -= state.learning_rate * grads.biases[l];
    }
    return;
  }
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    auto update = [&](Eigen::MatrixXd& p, const Eigen::MatrixXd& g, Eigen::MatrixXd& m,
                      Eigen::MatrixXd& v) {
      m = state.beta1 * m + (1.0 - state.beta1) * g;
      v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
      const Eigen::MatrixXd m_hat = m / bc1;
      const Eigen::MatrixXd v_hat = v / bc2;
      p -= state.learning_rate *
           (m_hat.array() / (v_hat.array().sqrt() + state.epsilon)).matrix();
    };
    update(params.weights[l], grads.weights[l], state.m_weights[l], state.v_weights[l]);
    Eigen::MatrixXd pb = params.biases[l], gb = grads.biases[l];
    Eigen::MatrixXd mb = state.m_biases[l], vb = state.v_biases[l];
    update(pb, gb, mb, vb);
    params.biases[l] = pb;
    state.m_biases[l] = mb;
    state.v_biases[l] = vb;
  }
}

Eigen::VectorXd flatten_params(const MlpParams& params) {
  Eigen::VectorXd flat(params.parameter_count());
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    const auto& w = params.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat[k++] = w(r, c);
    for (Eigen::Index i = 0; i < params.biases[l].size(); ++i)
      flat[k++] = params.biases[l][i];
  }
  return flat;
}

void unflatten_params(const Eigen::VectorXd& flat, MlpParams& params) {
  if (static_cast<std::size_t>(flat.size()) != params.parameter_count())
    throw std::invalid_argument("unflatten_params: size mismatch");
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    auto& w = params.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = flat[k++];
    for (Eigen::Index i = 0; i < params.biases[l].size(); ++i)
      params.biases[l][i] = flat[k++];
  }
}

Eigen::VectorXd flatten_grads(const MlpGrads& grads) {
  Eigen::Index total = 0;
  for (std::size_t l = 0; l < grads.weights.size(); ++l)
    total += grads.weights[l].size() + grads.biases[l].size();
  Eigen::VectorXd flat(total);
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < grads.weights.size(); ++l) {
    const auto& w = grads.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat[k++] = w(r, c);
    for (Eigen::Index i = 0; i < grads.biases[l].size(); ++i)
      flat[k++] = grads.biases[l][i];
  }
  return flat;
}

double grad_check(const std::function<double(const MlpParams&)>& loss,
                  const std::function<MlpGrads(const MlpParams&)>& analytic_grad,
                  const MlpParams& params, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("grad_check: eps must be positive");
  const Eigen::VectorXd analytic = flatten_grads(analytic_grad(params));
  Eigen::VectorXd flat = flatten_params(params);
  MlpParams work = params;
  double max_rel = 0.0;
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    const double orig = flat[i];
    flat[i] = orig + eps;
    unflatten_params(flat, work);
    const double plus = loss(work);
    flat[i] = orig - eps;
    unflatten_params(flat, work);
    const double minus = loss(work);
    flat[i] = orig;
    const double fd = (plus - minus) / (2.0 * eps);
    const double denom = std::max({std::abs(analytic[i]), std::abs(fd), 1e-8});
    max_rel = std::max(max_rel, std::abs(analytic[i] - fd) / denom);
  }
  unflatten_params(flat, work);
  return max_rel;
}

std::string mlp_to_json(const MlpParams& params) {
  json j;
  j["magic"] = kMlpFormatMagic;
  j["layer_sizes"] = params.layer_sizes;
  json acts = json::array();
  for (Activation a : params.activations) acts.push_back(activation_name(a));
  j["activations"] = acts;
  json weights = json::array();
  json biases = json::array();
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    json wl = json::array();  // row-major
    const auto& w = params.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) wl.push_back(w(r, c));
    weights.push_back(std::move(wl));
    json bl = json::array();
    for (Eigen::Index i = 0; i < params.biases[l].size(); ++i)
      bl.push_back(params.biases[l][i]);
    biases.push_back(std::move(bl));
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  return j.dump(2);
}

MlpParams mlp_from_json(const std::string& text) {
  json j = json::parse(text);
  if (!j.contains("magic") || j["magic"] != kMlpFormatMagic)
    throw ConfigError("mlp snapshot: missing or wrong magic (want AES-MLP-1)");
  std::vector<int> sizes = j.at("layer_sizes").get<std::vector<int>>();
  std::vector<Activation> acts;
  for (const auto& name : j.at("activations"))
    acts.push_back(activation_from_name(name.get<std::string>()));
  MlpParams p = mlp_zeros(sizes, acts);
  const json& weights = j.at("weights");
  const json& biases = j.at("biases");
  if (weights.size() != p.weights.size() || biases.size() != p.biases.size())
    throw ConfigError("mlp snapshot: layer count mismatch");
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    auto& w = p.weights[l];
    if (static_cast<Eigen::Index>(weights[l].size()) != w.size())
      throw ConfigError("mlp snapshot: weight block size mismatch");
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = weights[l][k++].get<double>();
    if (static_cast<Eigen::Index>(biases[l].size()) != p.biases[l].size())
      throw ConfigError("mlp snapshot: bias block size mismatch");
    for (Eigen::Index i = 0; i < p.biases[l].size(); ++i)
      p.biases[l][i] = biases[l][i].get<double>();
  }
  return p;
}

void save_mlp(const MlpParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << mlp_to_json(params) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

MlpParams load_mlp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return mlp_from_json(text);
}

}  // namespace aes::approx
