#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mlo/rng.hpp"
#include "mlo/topology.hpp"

namespace mlo {

enum class FlowType : int { WB = 0, V4K = 1, VR = 2 };

// Scalar identifier fed into the observation: V4K 0.33, VR 0.66, WB 1.0.
double flow_type_id(FlowType t);

// Loglogistic frame-size model (log-scale mu in log-bytes, shape sigma) and
// Burr frame inter-arrival model (k, c dimensionless, a in ms).
struct VRModelParams {
    // CALIBRATION-REQUIRED: the source measurement campaign does not publish
    // these values; defaults put the mean VR rate in the ~10 Mbps regime.
    double mu = 8.98719682066072;  // ln(8000)
    double sigma = 0.18;
    double k = 0.75;
    double a = 6.0;  // ms
    double c = 2.5;
};

// Inverse CDF of the loglogistic frame-size distribution, in bytes.
double vr_frame_size_inv_cdf(double y, const VRModelParams& p);
// Forward CDF, for oracles and fidelity tests.
double vr_frame_size_cdf(double x_bytes, const VRModelParams& p);

// Inverse CDF of the Burr frame inter-arrival distribution, in ms.
double vr_interarrival_inv_cdf(double y, const VRModelParams& p);
double vr_interarrival_cdf(double x_ms, const VRModelParams& p);

// CBR rate of a VR flow: frame size over inter-arrival at the same quantile,
// converted bytes/ms -> Mbps.
double vr_flow_rate_mbps(double y, const VRModelParams& p);

struct TrafficConfig {
    double wb_rate_min = 1.0, wb_rate_max = 3.0;    // Mbps
    double v4k_rate_min = 7.0, v4k_rate_max = 25.0; // Mbps
    std::array<double, 3> type_mix{0.8, 0.1, 0.1};  // WB, V4K, VR
    VRModelParams vr;
    double mean_on_s = 10.0;   // flow duration
    double mean_off_s = 10.0;  // gap between a departure and the next arrival
};

double draw_flow_rate(FlowType t, const TrafficConfig& cfg, RngStream& rng);

// Fixes one FlowType per station for the whole run. Per-AP counts follow the
// mix with largest-remainder rounding; assignment within an AP is a seeded
// shuffle. Returns flow type per station id.
std::vector<FlowType> assign_station_types(const Network& net, const std::array<double, 3>& mix,
                                           uint64_t seed);

struct Flow {
    long id = -1;
    int station = -1;
    FlowType type = FlowType::WB;
    double rate_mbps = 0.0;
    double t_arrive = 0.0;
    double duration_s = 0.0;
    std::array<double, 3> alloc_mbps{0, 0, 0};  // per band, set by the engine
};

}  // namespace mlo
