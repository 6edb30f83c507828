#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlo/engine.hpp"
#include "mlo/sac.hpp"
#include "mlo/topology.hpp"
#include "mlo/traffic.hpp"

namespace mlo {

struct ScenarioConfig {
    std::string id = "custom";  // U1, U2, desk or custom
    TopologyConfig topo;
    TrafficConfig traffic;
    std::string policy = "mcaa";
    RewardSpec reward;
    // When hindsight is on and d_tol < 0, D_TOL is calibrated as the mean
    // TDR of an MCAA pre-run on the same scenario and seed.
    long calibration_decisions = 400;
    TrainerConfig trainer;
    bool per_ap_agent = false;  // default: one shared agent pooling all APs

    double horizon_s = 0.0;      // 0: bounded by decisions only
    long train_decisions = 2000; // mhrsac training length (also run length for baselines' logs)
    int eval_episodes = 5;
    long eval_decisions = 1000;
    std::vector<uint64_t> seeds{1, 2, 3, 4, 5};

    nlohmann::json to_json() const;
    static ScenarioConfig from_json(const nlohmann::json& j);
    uint64_t hash() const;  // of the canonical serialization

    static ScenarioConfig u1();
    static ScenarioConfig u2();
    static ScenarioConfig desk_scale();
};

struct CurvePoint {
    long step;
    double reward;
    double drop;
};

struct SeedResult {
    uint64_t seed = 0;
    double tdr = 0.0;                       // evaluation TDR (median over episodes)
    std::array<double, 3> fs{0, 0, 0};      // by flow type, NaN when unseen
    std::string events;                     // delimited event log (training+eval)
    uint64_t event_hash = 0;
    double d_tol_used = -1.0;
    std::vector<CurvePoint> curve;          // raw per-decision training log (mhrsac)
};

struct RunReport {
    nlohmann::json config;
    uint64_t config_hash = 0;
    std::string policy;
    std::vector<SeedResult> per_seed;
    double median_tdr = 0.0;
    std::array<double, 3> median_fs{0, 0, 0};
    double wall_time_s = 0.0;

    nlohmann::json to_json(bool include_events = false) const;
};

// Trains (for mhrsac) and evaluates each seed; seeds may run in parallel.
RunReport run_experiment(const ScenarioConfig& cfg, int threads = 0);

// Per-policy medians, spread and pairwise gains (absolute percentage points
// and relative). Configs must differ only in the policy field.
nlohmann::json compare_policies(const std::vector<ScenarioConfig>& cfgs, int threads = 0);

// Trailing-mean smoothing over 100 decisions; "step,reward,drop" lines
// with a header, empty input yields just the header.
std::string training_curves(const std::vector<CurvePoint>& log, int smooth_window = 100);

double median(std::vector<double> v);

namespace detail {
// Single-seed engine session behind a pluggable decide callback; used by
// run_experiment and by the bridge server. Returns the ledger plus the
// decision log needed for curves.
struct SessionResult {
    MetricsLedger ledger;
    std::vector<CurvePoint> curve;
};
SessionResult run_baseline_session(const ScenarioConfig& cfg, uint64_t seed, PolicyKind kind);
}  // namespace detail

}  // namespace mlo
