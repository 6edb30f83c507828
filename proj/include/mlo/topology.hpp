#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace mlo {

enum class Band : int { Band24 = 0, Band5 = 1, Band6 = 2 };
constexpr int kNumBands = 3;

// Carrier frequency (GHz) and channel bandwidth (MHz) per band. The default
// bandwidth mapping (20/80/160) is a config choice; frequencies are fixed by
// the 802.11be tri-band layout modeled here.
struct BandPlan {
    std::array<double, 3> freq_ghz{2.437, 5.230, 6.295};
    std::array<double, 3> bandwidth_mhz{20.0, 80.0, 160.0};
};

struct PathLossParams {
    double ref_loss_db = 40.05;
    double breakpoint_m = 10.0;
    double wall_count = 0.0;    // walls per link
    double wall_loss_db = 7.0;  // dB per wall
};

struct RadioParams {
    double ap_tx_dbm = 20.0;
    double sta_tx_dbm = 15.0;
    double noise_figure_db = 7.0;
    double cca_dbm = -82.0;  // stored for reference; contention is not modeled
    int max_streams = 16;
    int max_mcs = 13;
    double per = 0.10;  // packet error rate, scales effective rate
};

// Per-MCS SNR thresholds, 3 dB apart from 2 dB at MCS 0. Overridable.
struct McsTable {
    std::array<double, 14> snr_threshold_db;
    McsTable() {
        for (int i = 0; i < 14; ++i) snr_threshold_db[i] = 2.0 + 3.0 * i;
    }
    // Highest feasible MCS index for the SNR, or -1 if below MCS 0.
    int mcs_for_snr(double snr_db, int max_mcs) const;
};

// PHY rate (Mbps) of one MCS at a given bandwidth and stream count,
// from subcarrier counts and 0.8 us guard-interval symbols.
double mcs_rate_mbps(int mcs, double bandwidth_mhz, int streams);

double path_loss_db(double d_m, double fc_ghz, const PathLossParams& p);
double link_snr_db(double tx_dbm, double loss_db, double noise_figure_db, double bandwidth_mhz);
double snr_to_rate_mbps(double snr_db, double bandwidth_mhz, int streams, const McsTable& table,
                        const RadioParams& radio);

struct StationCapability {
    int n_f = 3;                                  // interface count, 1..3
    std::array<bool, 3> bands{true, true, true};  // lowest-frequency-first
};

struct Station {
    int id = 0;
    int ap = 0;
    double x = 0, y = 0;
    StationCapability cap;
    std::array<double, 3> rate_mbps{0, 0, 0};  // achievable per band, 0 if unsupported
};

struct Ap {
    int id = 0;
    double x = 0, y = 0;
};

struct TopologyConfig {
    int num_aps = 5;
    int sta_min = 15, sta_max = 20;  // stations per AP ~ U(sta_min, sta_max)
    std::array<double, 3> capability_mix{0.2, 0.4, 0.4};  // share of n_f = 1, 2, 3
    BandPlan bands;
    PathLossParams loss;
    RadioParams radio;
    McsTable mcs;
    double ap_spacing_m = 25.0;
    double rate_scale = 1.0;  // scales all link rates; desk-scale presets use it to force overload
};

struct Network {
    TopologyConfig cfg;
    std::vector<Ap> aps;
    std::vector<Station> stations;
    std::vector<std::vector<int>> ap_stations;  // station ids per AP

    nlohmann::json to_json() const;
    std::string serialize() const;  // stable text form for reproducibility snapshots
};

// Deterministic in (cfg, seed). 80% of stations at r in [1,8] m, 20% at [1,3] m.
Network build_network(const TopologyConfig& cfg, uint64_t seed);

}  // namespace mlo
