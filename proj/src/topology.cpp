#include "mlo/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mlo/rng.hpp"

namespace mlo {

int McsTable::mcs_for_snr(double snr_db, int max_mcs) const {
    int best = -1;
    for (int i = 0; i <= max_mcs && i < 14; ++i) {
        if (snr_db >= snr_threshold_db[i]) best = i;
    }
    return best;
}

namespace {

// 802.11be OFDMA numerology: data subcarriers per channel width, 12.8 us
// symbol + 0.8 us guard interval.
int data_subcarriers(double bandwidth_mhz) {
    if (bandwidth_mhz == 20.0) return 234;
    if (bandwidth_mhz == 40.0) return 468;
    if (bandwidth_mhz == 80.0) return 980;
    if (bandwidth_mhz == 160.0) return 1960;
    throw std::invalid_argument("unsupported channel bandwidth: " + std::to_string(bandwidth_mhz));
}

struct McsDef {
    int bits;      // bits per subcarrier per stream
    double code;   // coding rate
};

// MCS 0..13 up to 4096-QAM 5/6.
constexpr McsDef kMcs[14] = {
    {1, 1.0 / 2}, {2, 1.0 / 2}, {2, 3.0 / 4}, {4, 1.0 / 2}, {4, 3.0 / 4},
    {6, 2.0 / 3}, {6, 3.0 / 4}, {6, 5.0 / 6}, {8, 3.0 / 4}, {8, 5.0 / 6},
    {10, 3.0 / 4}, {10, 5.0 / 6}, {12, 3.0 / 4}, {12, 5.0 / 6},
};

constexpr double kSymbolUs = 13.6;

}  // namespace

double mcs_rate_mbps(int mcs, double bandwidth_mhz, int streams) {
    if (mcs < 0 || mcs > 13) throw std::invalid_argument("mcs index out of range");
    if (streams < 1 || streams > 16) throw std::invalid_argument("streams out of range");
    const int nsd = data_subcarriers(bandwidth_mhz);
    return nsd * kMcs[mcs].bits * kMcs[mcs].code * streams / kSymbolUs;
}

double path_loss_db(double d_m, double fc_ghz, const PathLossParams& p) {
    if (d_m <= 0.0) throw std::domain_error("path_loss: non-positive distance");
    if (fc_ghz <= 0.0) throw std::domain_error("path_loss: non-positive frequency");
    double loss = p.ref_loss_db + 20.0 * std::log10(fc_ghz / 2.4) +
                  20.0 * std::log10(std::min(d_m, p.breakpoint_m));
    if (d_m > p.breakpoint_m) loss += 35.0 * std::log10(d_m / p.breakpoint_m);
    loss += p.wall_loss_db * p.wall_count;
    return loss;
}

double link_snr_db(double tx_dbm, double loss_db, double noise_figure_db, double bandwidth_mhz) {
    if (bandwidth_mhz != 20.0 && bandwidth_mhz != 40.0 && bandwidth_mhz != 80.0 &&
        bandwidth_mhz != 160.0) {
        throw std::invalid_argument("link_snr: unsupported bandwidth");
    }
    const double noise_dbm = -174.0 + 10.0 * std::log10(bandwidth_mhz * 1e6) + noise_figure_db;
    return tx_dbm - loss_db - noise_dbm;
}

double snr_to_rate_mbps(double snr_db, double bandwidth_mhz, int streams, const McsTable& table,
                        const RadioParams& radio) {
    const int mcs = table.mcs_for_snr(snr_db, radio.max_mcs);
    if (mcs < 0) return 0.0;
    return mcs_rate_mbps(mcs, bandwidth_mhz, streams) * (1.0 - radio.per);
}

namespace {

StationCapability capability_for(int n_f) {
    StationCapability c;
    c.n_f = n_f;
    c.bands = {n_f >= 1, n_f >= 2, n_f >= 3};
    return c;
}

// Deterministic per-AP counts for a share vector: largest-remainder rounding.
std::array<int, 3> apportion(const std::array<double, 3>& mix, int total) {
    std::array<int, 3> counts{};
    std::array<double, 3> frac{};
    int assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const double exact = mix[i] * total;
        counts[i] = static_cast<int>(std::floor(exact + 1e-9));
        frac[i] = exact - counts[i];
        assigned += counts[i];
    }
    while (assigned < total) {
        int best = 0;
        for (int i = 1; i < 3; ++i) {
            if (frac[i] > frac[best] + 1e-12) best = i;
        }
        counts[best]++;
        frac[best] = -1.0;
        assigned++;
    }
    return counts;
}

}  // namespace

Network build_network(const TopologyConfig& cfg, uint64_t seed) {
    if (cfg.num_aps <= 0) throw std::invalid_argument("build_network: empty network");
    if (cfg.sta_min <= 0 || cfg.sta_max < cfg.sta_min) {
        throw std::invalid_argument("build_network: bad station range");
    }
    const double mix_sum = cfg.capability_mix[0] + cfg.capability_mix[1] + cfg.capability_mix[2];
    if (std::abs(mix_sum - 1.0) > 1e-9) {
        throw std::invalid_argument("build_network: capability mix must sum to 1");
    }

    Network net;
    net.cfg = cfg;
    net.ap_stations.resize(cfg.num_aps);

    int sta_id = 0;
    for (int a = 0; a < cfg.num_aps; ++a) {
        Ap ap;
        ap.id = a;
        ap.x = a * cfg.ap_spacing_m;
        ap.y = 0.0;
        net.aps.push_back(ap);

        RngStream rng = RngStream::keyed(seed, 1000 + a);
        const int n_sta = rng.uniform_int(cfg.sta_min, cfg.sta_max);
        const auto cap_counts = apportion(cfg.capability_mix, n_sta);

        // Capability list in fixed order, then a seeded shuffle.
        std::vector<int> caps;
        for (int k = 0; k < 3; ++k) caps.insert(caps.end(), cap_counts[k], k + 1);
        for (int i = static_cast<int>(caps.size()) - 1; i > 0; --i) {
            std::swap(caps[i], caps[rng.uniform_int(0, i)]);
        }

        for (int s = 0; s < n_sta; ++s) {
            Station st;
            st.id = sta_id++;
            st.ap = a;
            // 80% of stations at r in [1,8] m, the rest at [1,3] m.
            const bool outer = rng.uniform() < 0.8;
            const double r = outer ? rng.uniform(1.0, 8.0) : rng.uniform(1.0, 3.0);
            const double phi = rng.uniform(0.0, 2.0 * M_PI);
            st.x = ap.x + r * std::cos(phi);
            st.y = ap.y + r * std::sin(phi);
            st.cap = capability_for(caps[s]);
            for (int b = 0; b < kNumBands; ++b) {
                if (!st.cap.bands[b]) continue;
                const double d = std::max(0.1, std::hypot(st.x - ap.x, st.y - ap.y));
                const double loss = path_loss_db(d, cfg.bands.freq_ghz[b], cfg.loss);
                const double snr = link_snr_db(cfg.radio.ap_tx_dbm, loss, cfg.radio.noise_figure_db,
                                               cfg.bands.bandwidth_mhz[b]);
                st.rate_mbps[b] = snr_to_rate_mbps(snr, cfg.bands.bandwidth_mhz[b],
                                                   cfg.radio.max_streams, cfg.mcs, cfg.radio) *
                                  cfg.rate_scale;
            }
            net.ap_stations[a].push_back(st.id);
            net.stations.push_back(st);
        }
    }
    return net;
}

nlohmann::json Network::to_json() const {
    nlohmann::json j;
    j["num_aps"] = cfg.num_aps;
    j["rate_scale"] = cfg.rate_scale;
    j["capability_mix"] = cfg.capability_mix;
    j["bandwidth_mhz"] = cfg.bands.bandwidth_mhz;
    j["freq_ghz"] = cfg.bands.freq_ghz;
    auto& aps_j = j["aps"] = nlohmann::json::array();
    for (const auto& ap : aps) {
        aps_j.push_back({{"id", ap.id}, {"x", ap.x}, {"y", ap.y}});
    }
    auto& sta_j = j["stations"] = nlohmann::json::array();
    for (const auto& st : stations) {
        sta_j.push_back({{"id", st.id},
                         {"ap", st.ap},
                         {"x", st.x},
                         {"y", st.y},
                         {"n_f", st.cap.n_f},
                         {"rate_mbps", st.rate_mbps}});
    }
    return j;
}

std::string Network::serialize() const { return to_json().dump(); }

}  // namespace mlo
