#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mlo/mdp.hpp"
#include "mlo/policy.hpp"
#include "mlo/topology.hpp"
#include "mlo/traffic.hpp"

namespace mlo {

// Shared-airtime interface model. A flow allocated `alloc` Mbps towards a
// station whose link rate is r consumes alloc/r airtime; when the summed
// airtime u exceeds 1 every flow on the interface is served its allocation
// scaled by 1/u (proportional drop rule).
struct InterfaceState {
    double load_mbps = 0.0;  // summed allocations
    double airtime = 0.0;    // summed alloc/rate

    double occupancy() const { return airtime < 1.0 ? airtime : 1.0; }
    // Airtime-weighted harmonic mean of the active recipients' link rates.
    double capacity_mbps() const { return airtime > 0.0 ? load_mbps / airtime : 0.0; }
};

struct ApState {
    std::array<InterfaceState, 3> ifaces;
    int active_flows = 0;
    int attached_stations = 0;

    std::array<double, 3> occupancies() const {
        return {ifaces[0].occupancy(), ifaces[1].occupancy(), ifaces[2].occupancy()};
    }
};

struct MetricsLedger {
    struct DecisionRec {
        double t;
        int ap;
        double drop_ratio;
    };
    struct FlowEndRec {
        long id;
        int station;
        FlowType type;
        double rate_mbps;
        double t_arrive;
        double t_end;
        double fs;
    };
    std::vector<DecisionRec> decisions;
    std::vector<FlowEndRec> flows;

    double tdr_mean() const;
    std::array<double, 3> fs_mean_by_type() const;  // WB, V4K, VR; NaN when empty

    // Delimited event records; `policy` labels every decision line.
    std::string serialize_events(const std::string& policy) const;
    nlohmann::json summary(const std::string& policy) const;
};

// Context handed to the allocation policy on each flow arrival (n_f >= 2).
struct DecisionContext {
    const ObservationWindow& window;
    std::vector<double> occupancies;  // per supported band, lowest first
    int n_f;
    int station;
    int ap;
    FlowType type;
    long decision_index;
};

struct EngineHooks {
    // Returns allocation fractions over the supported bands. Required for
    // any run containing stations with n_f >= 2.
    std::function<std::vector<double>(const DecisionContext&)> decide;
    // Reward materialization: called at the next decision at the same AP
    // with the average drop ratio observed in between. Optional.
    std::function<void(int ap, const ObservationWindow& prev, double d_avg,
                       const ObservationWindow& next, long decision_index)>
        on_materialized;
    // Per environment decision, after allocation. Optional.
    std::function<void(long decision_index, double t, int ap, double drop_ratio)> on_decision;
};

class Simulation {
public:
    Simulation(const Network& net, const std::vector<FlowType>& station_types,
               const TrafficConfig& cfg, uint64_t seed, int window_size = 10);

    // Runs until the time horizon or the decision budget is exhausted,
    // whichever comes first (either may be unlimited with <= 0).
    MetricsLedger run(double horizon_s, long max_decisions, const EngineHooks& hooks);

    // Single-shot allocation used by unit tests: applies `fractions` (over
    // the station's supported bands) for `flow` and returns served Mbps.
    double apply_allocation(Flow& flow, const std::vector<double>& fractions);
    void remove_flow(long flow_id);
    double decision_drop_ratio(int ap) const;
    const ApState& ap_state(int ap) const { return aps_.at(ap); }

    // Test hook: overrides a station's per-band link rate.
    void set_station_rate(int station, Band band, double rate_mbps);
    // Test hooks: forward the clock (integrating served throughput) and
    // inspect a live flow's instantaneous/integrated service.
    void advance_to(double t) { advance_time(t); }
    double served_rate_of(long flow_id) const { return served_rate(flows_.at(flow_id)); }
    double served_integral_of(long flow_id) const { return flows_.at(flow_id).served_integral; }

private:
    struct ActiveFlow {
        Flow flow;
        double served_integral = 0.0;  // Mbit served so far
        double t_scheduled_end = 0.0;
    };
    struct Event {
        double t;
        long seq;
        bool arrival;
        int station;  // arrival
        long flow_id; // departure
    };
    struct EventOrder {
        bool operator()(const Event& a, const Event& b) const {
            return a.t != b.t ? a.t > b.t : a.seq > b.seq;
        }
    };
    struct Pending {
        bool active = false;
        ObservationWindow window{1};
        long decision_index = -1;
        std::vector<double> drop_samples;
    };

    double served_rate(const ActiveFlow& af) const;
    void advance_time(double t);
    void record_drop_sample(int ap);
    void handle_arrival(int station, const EngineHooks& hooks, MetricsLedger& ledger);
    void handle_departure(long flow_id, MetricsLedger& ledger);
    void finish_flow(ActiveFlow& af, double t_end, MetricsLedger& ledger);

    const Network& net_;
    std::vector<FlowType> station_types_;
    TrafficConfig cfg_;
    uint64_t seed_;
    int window_size_;

    std::vector<ApState> aps_;
    std::vector<ObservationWindow> windows_;  // per AP
    std::vector<Pending> pending_;            // per AP
    std::map<long, ActiveFlow> flows_;
    std::vector<long> station_flow_;  // active flow id per station, -1 if idle
    std::vector<std::array<double, 3>> rates_;  // per station per band, test-overridable

    std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;
    std::vector<RngStream> station_rng_;
    double now_ = 0.0;
    long next_flow_id_ = 0;
    long next_seq_ = 0;
    long decisions_ = 0;
    const EngineHooks* hooks_ = nullptr;
    MetricsLedger* ledger_ = nullptr;
};

}  // namespace mlo
