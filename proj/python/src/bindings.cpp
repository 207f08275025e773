#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "aes/channel.hpp"
#include "aes/d3pg.hpp"
#include "aes/genmodel.hpp"
#include "aes/harness.hpp"
#include "aes/provision.hpp"
#include "aes/rng.hpp"

namespace py = pybind11;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mobile generative-service provisioning simulator core";

  py::class_<aes::channel::ChannelParams>(m, "ChannelParams")
      .def(py::init<>())
      .def_readwrite("m", &aes::channel::ChannelParams::m)
      .def_readwrite("psi", &aes::channel::ChannelParams::psi)
      .def_readwrite("xi", &aes::channel::ChannelParams::xi)
      .def_readwrite("sigma_s", &aes::channel::ChannelParams::sigma_s)
      .def_readwrite("n0", &aes::channel::ChannelParams::n0)
      .def_readwrite("p_total", &aes::channel::ChannelParams::p_total);

  m.def("ber_numeric", &aes::channel::ber_numeric, py::arg("mean_snr"), py::arg("m"),
        "BPSK-style BER under Nakagami-m fading via adaptive quadrature");
  m.def("ber_closed_form", &aes::channel::ber_closed_form, py::arg("mean_snr"),
        py::arg("m"),
        "MGF closed form as printed in the reference model (non-physical; "
        "increases with mean SNR, comparison only)");
  m.def("expected_ber_shadowed", &aes::channel::expected_ber_shadowed,
        py::arg("params"), py::arg("power"), py::arg("distance"),
        "Expectation of ber_numeric over log-normal shadowing");
  m.def("allocate_power", &aes::channel::allocate_power, py::arg("weights"),
        py::arg("p_total"), "Proportional power split; sums exactly to the budget");
  m.attr("CLOSED_FORM_BER_NOTE") = aes::channel::kClosedFormBerNote;

  m.def("count_optimized_prompts", &aes::genmodel::count_optimized_prompts,
        py::arg("corpus_size"),
        "Number of suffix arrangements: sum_k corpus_size!/(corpus_size-k)!");
  m.def("user_side_score", &aes::genmodel::user_side_score, py::arg("raw_score"),
        py::arg("ber"), py::arg("complexity"), py::arg("kappa"),
        "Post-transmission score: raw * max(0, 1 - kappa*complexity*ber)");
  m.def("default_catalog_json",
        [] { return aes::genmodel::catalog_to_json(aes::genmodel::default_catalog()); });

  m.def(
      "qoe",
      [](int n, const std::vector<double>& qualities, double q_th, double l_max,
         double t_inference) {
        aes::provision::QoEConfig config;
        config.l_max = l_max;
        config.t_inference = t_inference;
        const auto out = aes::provision::qoe(n, qualities, q_th, config);
        return py::make_tuple(out.value, out.latency_ok, out.threshold_ok);
      },
      py::arg("n"), py::arg("qualities"), py::arg("q_th"), py::arg("l_max") = 10.0,
      py::arg("t_inference") = 1.0,
      "Per-user QoE; returns (value, latency_ok, threshold_ok)");
  m.def("cost", &aes::provision::cost, py::arg("n"), py::arg("power"),
        py::arg("c_inference"), "Resource consumption n * (c_inference + power)");

  m.def(
      "decode_action",
      [](const std::vector<double>& raw, int num_users, int n_max, double p_total) {
        Eigen::VectorXd v(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) v[i] = raw[i];
        const auto action = aes::d3pg::decode_action(v, num_users, n_max, p_total);
        return py::make_tuple(action.trials, action.powers);
      },
      py::arg("raw"), py::arg("num_users"), py::arg("n_max"), py::arg("p_total"),
      "Raw action vector -> (trials, powers) satisfying the constraints");
  m.def(
      "make_schedule",
      [](int steps, double beta_start, double beta_end) {
        const auto s = aes::d3pg::make_schedule(steps, beta_start, beta_end);
        return py::make_tuple(s.alpha, s.alpha_bar);
      },
      py::arg("steps"), py::arg("beta_start"), py::arg("beta_end"),
      "Linear-beta diffusion schedule -> (alpha, alpha_bar)");

  m.def(
      "service_rounds",
      [](double mean, double stddev, double threshold, int images_per_round,
         double confidence) -> std::optional<int> {
        return aes::harness::service_rounds(mean, stddev, threshold, images_per_round,
                                            confidence);
      },
      py::arg("mean"), py::arg("stddev"), py::arg("threshold"),
      py::arg("images_per_round"), py::arg("confidence"),
      "Service rounds to reach the confidence target; None when unbounded");

  m.def(
      "run_experiment",
      [](const std::string& config_path) {
        const auto config = aes::harness::parse_config(config_path);
        return aes::harness::summary_to_json(aes::harness::run_experiment(config));
      },
      py::arg("config_path"), "Full pipeline; returns the summary JSON text");
  m.def("default_config_json",
        [] { return aes::harness::config_to_json(aes::harness::default_config()); });
}
