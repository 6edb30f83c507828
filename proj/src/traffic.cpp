#include "mlo/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mlo {

double flow_type_id(FlowType t) {
    switch (t) {
        case FlowType::V4K: return 0.33;
        case FlowType::VR: return 0.66;
        case FlowType::WB: return 1.0;
    }
    return 1.0;
}

namespace {
void check_quantile(double y) {
    if (!(y > 0.0 && y < 1.0)) throw std::domain_error("quantile must lie in (0,1)");
}
}  // namespace

double vr_frame_size_inv_cdf(double y, const VRModelParams& p) {
    check_quantile(y);
    return std::exp(p.mu) * std::pow(y / (1.0 - y), p.sigma);
}

double vr_frame_size_cdf(double x_bytes, const VRModelParams& p) {
    if (x_bytes <= 0.0) return 0.0;
    const double z = (std::log(x_bytes) - p.mu) / p.sigma;
    return 1.0 / (1.0 + std::exp(-z));
}

double vr_interarrival_inv_cdf(double y, const VRModelParams& p) {
    check_quantile(y);
    return p.a * std::pow(std::pow(1.0 / (1.0 - y), 1.0 / p.k) - 1.0, 1.0 / p.c);
}

double vr_interarrival_cdf(double x_ms, const VRModelParams& p) {
    if (x_ms <= 0.0) return 0.0;
    return 1.0 - std::pow(1.0 + std::pow(x_ms / p.a, p.c), -p.k);
}

double vr_flow_rate_mbps(double y, const VRModelParams& p) {
    // One quantile draw feeds both inverse CDFs; bytes/ms -> Mbps is x8/1000.
    const double bytes = vr_frame_size_inv_cdf(y, p);
    const double ms = vr_interarrival_inv_cdf(y, p);
    return bytes / ms * 8.0 / 1000.0;
}

double draw_flow_rate(FlowType t, const TrafficConfig& cfg, RngStream& rng) {
    switch (t) {
        case FlowType::WB: return rng.uniform(cfg.wb_rate_min, cfg.wb_rate_max);
        case FlowType::V4K: return rng.uniform(cfg.v4k_rate_min, cfg.v4k_rate_max);
        case FlowType::VR: return vr_flow_rate_mbps(rng.uniform_pos() * (1.0 - 1e-12), cfg.vr);
    }
    throw std::invalid_argument("draw_flow_rate: bad flow type");
}

std::vector<FlowType> assign_station_types(const Network& net, const std::array<double, 3>& mix,
                                           uint64_t seed) {
    const double sum = mix[0] + mix[1] + mix[2];
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("type mix must sum to 1");

    std::vector<FlowType> types(net.stations.size(), FlowType::WB);
    for (size_t a = 0; a < net.ap_stations.size(); ++a) {
        const auto& ids = net.ap_stations[a];
        const int n = static_cast<int>(ids.size());

        // Largest-remainder counts per AP.
        std::array<int, 3> counts{};
        std::array<double, 3> frac{};
        int assigned = 0;
        for (int k = 0; k < 3; ++k) {
            const double exact = mix[k] * n;
            counts[k] = static_cast<int>(std::floor(exact + 1e-9));
            frac[k] = exact - counts[k];
            assigned += counts[k];
        }
        while (assigned < n) {
            int best = 0;
            for (int k = 1; k < 3; ++k) {
                if (frac[k] > frac[best] + 1e-12) best = k;
            }
            counts[best]++;
            frac[best] = -1.0;
            assigned++;
        }

        std::vector<FlowType> bag;
        bag.insert(bag.end(), counts[0], FlowType::WB);
        bag.insert(bag.end(), counts[1], FlowType::V4K);
        bag.insert(bag.end(), counts[2], FlowType::VR);
        RngStream rng = RngStream::keyed(seed, 2000 + a);
        for (int i = n - 1; i > 0; --i) std::swap(bag[i], bag[rng.uniform_int(0, i)]);
        for (int i = 0; i < n; ++i) types[ids[i]] = bag[i];
    }
    return types;
}

}  // namespace mlo
