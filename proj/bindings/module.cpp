#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "mlo/harness.hpp"
#include "mlo/mdp.hpp"
#include "mlo/policy.hpp"
#include "mlo/topology.hpp"
#include "mlo/traffic.hpp"

namespace py = pybind11;
using nlohmann::json;

// JSON crosses the boundary as strings; the Python wrapper turns them into
// dicts so the core stays free of Python object handling.

PYBIND11_MODULE(_core, m) {
    m.doc() = "Flow-level multi-link Wi-Fi simulator core";

    m.def("path_loss_db",
          [](double d_m, double fc_ghz, double walls) {
              mlo::PathLossParams p;
              p.wall_count = walls;
              return mlo::path_loss_db(d_m, fc_ghz, p);
          },
          py::arg("d_m"), py::arg("fc_ghz"), py::arg("walls") = 0.0);

    m.def("link_snr_db", &mlo::link_snr_db, py::arg("tx_dbm"), py::arg("loss_db"),
          py::arg("noise_figure_db"), py::arg("bandwidth_mhz"));

    m.def("snr_to_rate_mbps",
          [](double snr_db, double bandwidth_mhz, int streams) {
              return mlo::snr_to_rate_mbps(snr_db, bandwidth_mhz, streams, mlo::McsTable{},
                                           mlo::RadioParams{});
          },
          py::arg("snr_db"), py::arg("bandwidth_mhz"), py::arg("streams") = 1);

    m.def("vr_frame_size_inv_cdf",
          [](double y) { return mlo::vr_frame_size_inv_cdf(y, mlo::VRModelParams{}); },
          py::arg("y"));
    m.def("vr_interarrival_inv_cdf",
          [](double y) { return mlo::vr_interarrival_inv_cdf(y, mlo::VRModelParams{}); },
          py::arg("y"));
    m.def("vr_flow_rate_mbps",
          [](double y) { return mlo::vr_flow_rate_mbps(y, mlo::VRModelParams{}); },
          py::arg("y"));

    m.def("enumerate_actions", &mlo::enumerate_actions, py::arg("interfaces"),
          py::arg("granularity") = 10);
    m.def("action_space_size", &mlo::action_space_size, py::arg("interfaces"),
          py::arg("granularity") = 10);
    m.def("slci_decide", &mlo::slci_decide, py::arg("occupancies"));
    m.def("mcaa_decide", &mlo::mcaa_decide, py::arg("occupancies"), py::arg("snap") = true,
          py::arg("granularity") = 10);
    m.def("largest_remainder", &mlo::largest_remainder, py::arg("weights"), py::arg("total"));

    m.def("reward", &mlo::reward, py::arg("d_avg"));
    m.def("reward_hindsight",
          [](double d_avg, double d_tol) {
              mlo::RewardSpec spec;
              spec.hindsight = true;
              spec.d_tol = d_tol;
              return mlo::reward_hindsight(d_avg, spec);
          },
          py::arg("d_avg"), py::arg("d_tol"));

    m.def("build_network_json",
          [](const std::string& topo_json, uint64_t seed) {
              const auto cfg = mlo::ScenarioConfig::from_json(
                  json{{"topology", json::parse(topo_json)}});
              return mlo::build_network(cfg.topo, seed).to_json().dump();
          },
          py::arg("topology_json"), py::arg("seed"));

    m.def("default_config_json",
          [](const std::string& id) {
              if (id == "U1") return mlo::ScenarioConfig::u1().to_json().dump();
              if (id == "U2") return mlo::ScenarioConfig::u2().to_json().dump();
              if (id == "desk") return mlo::ScenarioConfig::desk_scale().to_json().dump();
              return mlo::ScenarioConfig{}.to_json().dump();
          },
          py::arg("id") = "custom");

    m.def("run_experiment_json",
          [](const std::string& config_json, int threads, bool include_events) {
              const auto cfg = mlo::ScenarioConfig::from_json(json::parse(config_json));
              py::gil_scoped_release release;
              const auto report = mlo::run_experiment(cfg, threads);
              return report.to_json(include_events).dump();
          },
          py::arg("config_json"), py::arg("threads") = 0, py::arg("include_events") = false);

    m.def("compare_policies_json",
          [](const std::vector<std::string>& config_jsons, int threads) {
              std::vector<mlo::ScenarioConfig> cfgs;
              for (const auto& s : config_jsons) {
                  cfgs.push_back(mlo::ScenarioConfig::from_json(json::parse(s)));
              }
              py::gil_scoped_release release;
              return mlo::compare_policies(cfgs, threads).dump();
          },
          py::arg("config_jsons"), py::arg("threads") = 0);
}
