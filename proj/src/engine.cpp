#include "mlo/engine.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace mlo {

double MetricsLedger::tdr_mean() const {
    if (decisions.empty()) return 0.0;
    double s = 0.0;
    for (const auto& d : decisions) s += d.drop_ratio;
    return s / decisions.size();
}

std::array<double, 3> MetricsLedger::fs_mean_by_type() const {
    std::array<double, 3> sum{0, 0, 0};
    std::array<int, 3> n{0, 0, 0};
    for (const auto& f : flows) {
        sum[static_cast<int>(f.type)] += f.fs;
        n[static_cast<int>(f.type)]++;
    }
    std::array<double, 3> out{};
    for (int i = 0; i < 3; ++i) out[i] = n[i] > 0 ? sum[i] / n[i] : std::nan("");
    return out;
}

std::string MetricsLedger::serialize_events(const std::string& policy) const {
    std::string out;
    char buf[160];
    for (const auto& d : decisions) {
        std::snprintf(buf, sizeof(buf), "D,%.9g,%d,%s,%.9g\n", d.t, d.ap, policy.c_str(),
                      d.drop_ratio);
        out += buf;
    }
    static const char* kType[3] = {"WB", "V4K", "VR"};
    for (const auto& f : flows) {
        std::snprintf(buf, sizeof(buf), "F,%.9g,%s,%.9g\n", f.t_end,
                      kType[static_cast<int>(f.type)], f.fs);
        out += buf;
    }
    return out;
}

nlohmann::json MetricsLedger::summary(const std::string& policy) const {
    const auto fs = fs_mean_by_type();
    auto or_null = [](double v) {
        return std::isnan(v) ? nlohmann::json() : nlohmann::json(v);
    };
    return {{"policy", policy},
            {"TDR_mean", tdr_mean()},
            {"FS_mean_by_type",
             {{"WB", or_null(fs[0])}, {"V4K", or_null(fs[1])}, {"VR", or_null(fs[2])}}},
            {"decisions", decisions.size()},
            {"completed_flows", flows.size()}};
}

Simulation::Simulation(const Network& net, const std::vector<FlowType>& station_types,
                       const TrafficConfig& cfg, uint64_t seed, int window_size)
    : net_(net), station_types_(station_types), cfg_(cfg), seed_(seed),
      window_size_(window_size) {
    if (station_types_.size() != net_.stations.size()) {
        throw std::invalid_argument("simulation: station type vector size mismatch");
    }
    aps_.resize(net_.aps.size());
    for (size_t a = 0; a < net_.aps.size(); ++a) {
        aps_[a].attached_stations = static_cast<int>(net_.ap_stations[a].size());
    }
    windows_.assign(net_.aps.size(), ObservationWindow(window_size_));
    pending_.resize(net_.aps.size());
    station_flow_.assign(net_.stations.size(), -1);
    rates_.resize(net_.stations.size());
    for (size_t s = 0; s < net_.stations.size(); ++s) rates_[s] = net_.stations[s].rate_mbps;
    station_rng_.reserve(net_.stations.size());
    for (size_t s = 0; s < net_.stations.size(); ++s) {
        station_rng_.push_back(RngStream::keyed(seed_, s));
        queue_.push({station_rng_[s].exponential(cfg_.mean_off_s), next_seq_++, true,
                     static_cast<int>(s), -1});
    }
}

void Simulation::set_station_rate(int station, Band band, double rate_mbps) {
    rates_.at(station)[static_cast<int>(band)] = rate_mbps;
}

double Simulation::served_rate(const ActiveFlow& af) const {
    const auto& ifs = aps_[net_.stations[af.flow.station].ap].ifaces;
    double served = 0.0;
    for (int b = 0; b < kNumBands; ++b) {
        if (af.flow.alloc_mbps[b] <= 0.0 || rates_[af.flow.station][b] <= 0.0) continue;
        const double scale = ifs[b].airtime > 1.0 ? 1.0 / ifs[b].airtime : 1.0;
        served += af.flow.alloc_mbps[b] * scale;
    }
    return served;
}

void Simulation::advance_time(double t) {
    const double dt = t - now_;
    if (dt > 0.0) {
        for (auto& [id, af] : flows_) af.served_integral += served_rate(af) * dt;
    }
    now_ = t;
}

double Simulation::decision_drop_ratio(int ap) const {
    double demanded = 0.0, served = 0.0;
    for (const auto& [id, af] : flows_) {
        if (net_.stations[af.flow.station].ap != ap) continue;
        demanded += af.flow.rate_mbps;
        served += served_rate(af);
    }
    if (demanded <= 0.0) return 0.0;
    const double d = (demanded - served) / demanded;
    return d < 0.0 ? 0.0 : (d > 1.0 ? 1.0 : d);
}

double Simulation::apply_allocation(Flow& flow, const std::vector<double>& fractions) {
    const Station& st = net_.stations.at(flow.station);
    if (static_cast<int>(fractions.size()) != st.cap.n_f) {
        throw std::invalid_argument("apply_allocation: fraction vector length != n_f");
    }
    double sum = 0.0;
    for (double f : fractions) {
        if (f < -1e-12) throw std::invalid_argument("apply_allocation: negative fraction");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("apply_allocation: fractions must sum to 1");
    }

    ApState& ap = aps_[st.ap];
    int fi = 0;
    for (int b = 0; b < kNumBands; ++b) {
        if (!st.cap.bands[b]) continue;
        const double alloc = fractions[fi++] * flow.rate_mbps;
        flow.alloc_mbps[b] = alloc;
        if (alloc > 0.0) {
            ap.ifaces[b].load_mbps += alloc;
            if (rates_[flow.station][b] > 0.0) {
                ap.ifaces[b].airtime += alloc / rates_[flow.station][b];
            }
        }
    }

    ActiveFlow af;
    af.flow = flow;
    af.t_scheduled_end = flow.t_arrive + flow.duration_s;
    flows_[flow.id] = af;
    station_flow_[flow.station] = flow.id;
    ap.active_flows++;
    return served_rate(flows_[flow.id]);
}

void Simulation::remove_flow(long flow_id) {
    auto it = flows_.find(flow_id);
    if (it == flows_.end()) throw std::invalid_argument("remove_flow: unknown flow id");
    const ActiveFlow& af = it->second;
    const Station& st = net_.stations[af.flow.station];
    ApState& ap = aps_[st.ap];
    for (int b = 0; b < kNumBands; ++b) {
        const double alloc = af.flow.alloc_mbps[b];
        if (alloc > 0.0) {
            ap.ifaces[b].load_mbps -= alloc;
            if (rates_[af.flow.station][b] > 0.0) {
                ap.ifaces[b].airtime -= alloc / rates_[af.flow.station][b];
            }
            if (ap.ifaces[b].load_mbps < 1e-12) ap.ifaces[b].load_mbps = 0.0;
            if (ap.ifaces[b].airtime < 1e-12) ap.ifaces[b].airtime = 0.0;
        }
    }
    ap.active_flows--;
    station_flow_[af.flow.station] = -1;
    flows_.erase(it);
}

void Simulation::finish_flow(ActiveFlow& af, double t_end, MetricsLedger& ledger) {
    const double lifetime = t_end - af.flow.t_arrive;
    if (lifetime <= 0.0) return;
    const double fs = af.served_integral / (af.flow.rate_mbps * lifetime);
    ledger.flows.push_back({af.flow.id, af.flow.station, af.flow.type, af.flow.rate_mbps,
                            af.flow.t_arrive, t_end, fs < 1.0 ? fs : 1.0});
}

void Simulation::handle_arrival(int station, const EngineHooks& hooks, MetricsLedger& ledger) {
    const Station& st = net_.stations[station];
    RngStream& rng = station_rng_[station];

    Flow flow;
    flow.id = next_flow_id_++;
    flow.station = station;
    flow.type = station_types_[station];
    flow.rate_mbps = draw_flow_rate(flow.type, cfg_, rng);
    flow.t_arrive = now_;
    flow.duration_s = rng.exponential(cfg_.mean_on_s);

    ApState& ap = aps_[st.ap];
    const auto frame = build_frame(ap.occupancies(), ap.active_flows, ap.attached_stations,
                                   flow.type);
    windows_[st.ap].push(frame);

    std::vector<double> fractions;
    const bool agent_decision = st.cap.n_f >= 2;
    if (!agent_decision) {
        fractions = {1.0};
    } else {
        if (!hooks.decide) throw std::runtime_error("simulation: no decide hook configured");
        DecisionContext ctx{windows_[st.ap], {}, st.cap.n_f, station, st.ap, flow.type,
                            decisions_};
        for (int b = 0; b < kNumBands; ++b) {
            if (st.cap.bands[b]) ctx.occupancies.push_back(ap.ifaces[b].occupancy());
        }
        fractions = hooks.decide(ctx);
    }
    apply_allocation(flow, fractions);

    const double drop = decision_drop_ratio(st.ap);
    ledger.decisions.push_back({now_, st.ap, drop});
    if (hooks.on_decision) hooks.on_decision(decisions_, now_, st.ap, drop);

    // Materialize the previous decision at this AP now that its window of
    // drop observations (including this arrival's) is complete.
    Pending& pend = pending_[st.ap];
    if (pend.active) {
        pend.drop_samples.push_back(drop);
        double sum = 0.0;
        for (double d : pend.drop_samples) sum += d;
        const double d_avg = sum / pend.drop_samples.size();
        if (hooks.on_materialized) {
            hooks.on_materialized(st.ap, pend.window, d_avg, windows_[st.ap],
                                  pend.decision_index);
        }
        pend.active = false;
    }
    if (agent_decision) {
        pend.active = true;
        pend.window = windows_[st.ap];
        pend.decision_index = decisions_;
        pend.drop_samples = {drop};
    }

    decisions_++;
    queue_.push({now_ + flow.duration_s, next_seq_++, false, -1, flow.id});
}

void Simulation::handle_departure(long flow_id, MetricsLedger& ledger) {
    auto it = flows_.find(flow_id);
    if (it == flows_.end()) return;  // already finalized
    ActiveFlow af = it->second;
    const int station = af.flow.station;
    const int ap = net_.stations[station].ap;
    remove_flow(flow_id);
    finish_flow(af, now_, ledger);
    if (pending_[ap].active) pending_[ap].drop_samples.push_back(decision_drop_ratio(ap));
    queue_.push({now_ + station_rng_[station].exponential(cfg_.mean_off_s), next_seq_++, true,
                 station, -1});
}

MetricsLedger Simulation::run(double horizon_s, long max_decisions, const EngineHooks& hooks) {
    MetricsLedger ledger;
    if (horizon_s <= 0.0 && max_decisions <= 0) return ledger;

    bool budget_hit = false;
    while (!queue_.empty()) {
        const Event e = queue_.top();
        if (horizon_s > 0.0 && e.t > horizon_s) break;
        if (max_decisions > 0 && decisions_ >= max_decisions) {
            budget_hit = true;
            break;
        }
        queue_.pop();
        advance_time(e.t);
        if (e.arrival) {
            handle_arrival(e.station, hooks, ledger);
        } else {
            handle_departure(e.flow_id, ledger);
        }
    }

    const double t_end = (!budget_hit && horizon_s > 0.0) ? std::max(horizon_s, now_) : now_;
    advance_time(t_end);
    for (auto& [id, af] : flows_) finish_flow(af, t_end, ledger);
    return ledger;
}

}  // namespace mlo
