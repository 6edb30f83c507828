#include "mlo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <stdexcept>
#include <thread>

namespace mlo {

using nlohmann::json;

// ---------------------------------------------------------------- config io

static json traffic_to_json(const TrafficConfig& t) {
    return {{"wb_rate", {t.wb_rate_min, t.wb_rate_max}},
            {"v4k_rate", {t.v4k_rate_min, t.v4k_rate_max}},
            {"type_mix", t.type_mix},
            {"vr", {{"mu", t.vr.mu}, {"sigma", t.vr.sigma}, {"k", t.vr.k}, {"a", t.vr.a},
                    {"c", t.vr.c}}},
            {"mean_on_s", t.mean_on_s},
            {"mean_off_s", t.mean_off_s}};
}

static TrafficConfig traffic_from_json(const json& j, TrafficConfig t) {
    if (j.contains("wb_rate")) {
        t.wb_rate_min = j["wb_rate"][0];
        t.wb_rate_max = j["wb_rate"][1];
    }
    if (j.contains("v4k_rate")) {
        t.v4k_rate_min = j["v4k_rate"][0];
        t.v4k_rate_max = j["v4k_rate"][1];
    }
    if (j.contains("type_mix")) t.type_mix = j["type_mix"];
    if (j.contains("vr")) {
        const auto& v = j["vr"];
        t.vr.mu = v.value("mu", t.vr.mu);
        t.vr.sigma = v.value("sigma", t.vr.sigma);
        t.vr.k = v.value("k", t.vr.k);
        t.vr.a = v.value("a", t.vr.a);
        t.vr.c = v.value("c", t.vr.c);
    }
    t.mean_on_s = j.value("mean_on_s", t.mean_on_s);
    t.mean_off_s = j.value("mean_off_s", t.mean_off_s);
    return t;
}

static json topo_to_json(const TopologyConfig& t) {
    return {{"num_aps", t.num_aps},
            {"sta_min", t.sta_min},
            {"sta_max", t.sta_max},
            {"capability_mix", t.capability_mix},
            {"bandwidth_mhz", t.bands.bandwidth_mhz},
            {"freq_ghz", t.bands.freq_ghz},
            {"wall_count", t.loss.wall_count},
            {"max_streams", t.radio.max_streams},
            {"rate_scale", t.rate_scale},
            {"ap_spacing_m", t.ap_spacing_m}};
}

static TopologyConfig topo_from_json(const json& j, TopologyConfig t) {
    t.num_aps = j.value("num_aps", t.num_aps);
    t.sta_min = j.value("sta_min", t.sta_min);
    t.sta_max = j.value("sta_max", t.sta_max);
    if (j.contains("capability_mix")) t.capability_mix = j["capability_mix"];
    if (j.contains("bandwidth_mhz")) t.bands.bandwidth_mhz = j["bandwidth_mhz"];
    if (j.contains("freq_ghz")) t.bands.freq_ghz = j["freq_ghz"];
    t.loss.wall_count = j.value("wall_count", t.loss.wall_count);
    t.radio.max_streams = j.value("max_streams", t.radio.max_streams);
    t.rate_scale = j.value("rate_scale", t.rate_scale);
    t.ap_spacing_m = j.value("ap_spacing_m", t.ap_spacing_m);
    return t;
}

static json trainer_to_json(const TrainerConfig& t) {
    return {{"actor_lr", t.actor_lr},
            {"critic_lr", t.critic_lr},
            {"gamma", t.gamma},
            {"tau", t.tau},
            {"batch_size", t.batch_size},
            {"update_period", t.update_period},
            {"updates_per_session", t.updates_per_session},
            {"clip_norm", t.clip_norm},
            {"operator", t.avg_operator ? "avg" : "min"},
            {"entropy_tuning", t.entropy_tuning},
            {"target_entropy_scale", t.target_entropy_scale},
            {"alpha_init", t.alpha_init},
            {"replay_capacity", t.replay_capacity},
            {"plain_sgd", t.plain_sgd},
            {"hidden", t.hidden},
            {"dense", t.dense},
            {"window", t.window}};
}

static TrainerConfig trainer_from_json(const json& j, TrainerConfig t) {
    t.actor_lr = j.value("actor_lr", t.actor_lr);
    t.critic_lr = j.value("critic_lr", t.critic_lr);
    t.gamma = j.value("gamma", t.gamma);
    t.tau = j.value("tau", t.tau);
    t.batch_size = j.value("batch_size", t.batch_size);
    t.update_period = j.value("update_period", t.update_period);
    t.updates_per_session = j.value("updates_per_session", t.updates_per_session);
    t.clip_norm = j.value("clip_norm", t.clip_norm);
    if (j.contains("operator")) t.avg_operator = j["operator"] == "avg";
    t.entropy_tuning = j.value("entropy_tuning", t.entropy_tuning);
    t.target_entropy_scale = j.value("target_entropy_scale", t.target_entropy_scale);
    t.alpha_init = j.value("alpha_init", t.alpha_init);
    t.replay_capacity = j.value("replay_capacity", t.replay_capacity);
    t.plain_sgd = j.value("plain_sgd", t.plain_sgd);
    t.hidden = j.value("hidden", t.hidden);
    t.dense = j.value("dense", t.dense);
    t.window = j.value("window", t.window);
    return t;
}

json ScenarioConfig::to_json() const {
    return {{"id", id},
            {"topology", topo_to_json(topo)},
            {"traffic", traffic_to_json(traffic)},
            {"policy", policy},
            {"reward", {{"hindsight", reward.hindsight}, {"d_tol", reward.d_tol}}},
            {"calibration_decisions", calibration_decisions},
            {"trainer", trainer_to_json(trainer)},
            {"per_ap_agent", per_ap_agent},
            {"horizon_s", horizon_s},
            {"train_decisions", train_decisions},
            {"eval_episodes", eval_episodes},
            {"eval_decisions", eval_decisions},
            {"seeds", seeds}};
}

ScenarioConfig ScenarioConfig::from_json(const json& j) {
    ScenarioConfig c;
    const std::string id = j.value("id", "custom");
    if (id == "U1") c = u1();
    else if (id == "U2") c = u2();
    else if (id == "desk") c = desk_scale();
    c.id = id;
    if (j.contains("topology")) c.topo = topo_from_json(j["topology"], c.topo);
    if (j.contains("traffic")) c.traffic = traffic_from_json(j["traffic"], c.traffic);
    c.policy = j.value("policy", c.policy);
    if (j.contains("reward")) {
        c.reward.hindsight = j["reward"].value("hindsight", c.reward.hindsight);
        c.reward.d_tol = j["reward"].value("d_tol", c.reward.d_tol);
    }
    c.calibration_decisions = j.value("calibration_decisions", c.calibration_decisions);
    if (j.contains("trainer")) c.trainer = trainer_from_json(j["trainer"], c.trainer);
    c.per_ap_agent = j.value("per_ap_agent", c.per_ap_agent);
    c.horizon_s = j.value("horizon_s", c.horizon_s);
    c.train_decisions = j.value("train_decisions", c.train_decisions);
    c.eval_episodes = j.value("eval_episodes", c.eval_episodes);
    c.eval_decisions = j.value("eval_decisions", c.eval_decisions);
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<uint64_t>>();
    return c;
}

uint64_t ScenarioConfig::hash() const { return fnv1a(to_json().dump()); }

ScenarioConfig ScenarioConfig::u1() {
    ScenarioConfig c;
    c.id = "U1";
    c.topo.num_aps = 5;
    c.topo.sta_min = 15;
    c.topo.sta_max = 20;
    return c;
}

ScenarioConfig ScenarioConfig::u2() {
    ScenarioConfig c = u1();
    c.id = "U2";
    c.topo.sta_min = 20;
    c.topo.sta_max = 25;
    return c;
}

ScenarioConfig ScenarioConfig::desk_scale() {
    ScenarioConfig c;
    c.id = "desk";
    c.topo.num_aps = 2;
    c.topo.sta_min = 5;
    c.topo.sta_max = 8;
    // Overload regime tuned so splitting policies separate from single-link
    // ones: near-equal per-band capacities, links scaled down until one VR
    // flow needs all three, and no single-interface stations that would add
    // identical drops under every policy.
    c.topo.rate_scale = 0.0018;
    c.topo.bands.bandwidth_mhz = {20.0, 160.0, 160.0};
    c.topo.capability_mix = {0.0, 0.2, 0.8};
    c.traffic.vr.a = 0.8;
    c.trainer.hidden = 32;
    c.trainer.dense = 32;
    c.trainer.batch_size = 128;
    c.trainer.update_period = 25;
    c.trainer.updates_per_session = 8;
    c.trainer.replay_capacity = 20000;
    c.trainer.target_entropy_scale = 0.3;
    c.train_decisions = 12000;
    c.eval_episodes = 5;
    c.eval_decisions = 1000;
    return c;
}

double median(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ------------------------------------------------------------- sessions

namespace {

uint64_t eval_seed_for(uint64_t seed, int episode) {
    return seed * 0x9E3779B97F4A7C15ULL + 7919ULL * (episode + 1);
}

EngineHooks baseline_hooks(PolicyKind kind) {
    EngineHooks hooks;
    hooks.decide = [kind](const DecisionContext& ctx) {
        return kind == PolicyKind::Slci ? slci_decide(ctx.occupancies)
                                        : mcaa_decide(ctx.occupancies);
    };
    return hooks;
}

// Shared or per-AP agent pool; all APs pool into one agent by default.
struct AgentPool {
    AgentPool(const ScenarioConfig& cfg, int num_aps, uint64_t seed) {
        const int n = cfg.per_ap_agent ? num_aps : 1;
        for (int i = 0; i < n; ++i) {
            agents.push_back(std::make_unique<SacAgent>(cfg.trainer, seed + 31 * i));
            buffers.push_back(std::make_unique<ReplayBuffer>(cfg.trainer.replay_capacity));
        }
    }
    SacAgent& for_ap(int ap) { return *agents[agents.size() == 1 ? 0 : ap]; }
    ReplayBuffer& buffer_for(int ap) { return *buffers[buffers.size() == 1 ? 0 : ap]; }

    std::vector<std::unique_ptr<SacAgent>> agents;
    std::vector<std::unique_ptr<ReplayBuffer>> buffers;
};

struct MhrsacSession {
    MetricsLedger ledger;
    std::vector<CurvePoint> curve;
};

MhrsacSession run_mhrsac_session(const ScenarioConfig& cfg, const Network& net,
                                 const std::vector<FlowType>& types, uint64_t sim_seed,
                                 AgentPool& pool, const RewardSpec& spec, bool learn,
                                 long max_decisions, RngStream& train_rng) {
    Simulation sim(net, types, cfg.traffic, sim_seed, cfg.trainer.window);
    std::map<int, ActionChoice> last_action;  // per AP, set at each agent decision

    EngineHooks hooks;
    hooks.decide = [&](const DecisionContext& ctx) {
        const auto choice =
            pool.for_ap(ctx.ap).act(ctx.window.flat(), ctx.n_f, learn, train_rng);
        last_action[ctx.ap] = choice;
        return choice.fractions;
    };
    MhrsacSession out;
    hooks.on_materialized = [&](int ap, const ObservationWindow& prev, double d_avg,
                                const ObservationWindow& next, long decision_index) {
        const auto it = last_action.find(ap);
        if (it == last_action.end()) return;
        const double r = spec.hindsight ? reward_hindsight(d_avg, spec) : reward(d_avg);
        out.curve.push_back({decision_index, r, d_avg});
        if (!learn) return;
        Transition t = make_transition(prev, it->second.head, it->second.index, d_avg, next, spec);
        pool.buffer_for(ap).append(t);
        pool.for_ap(ap).on_env_step(pool.buffer_for(ap), train_rng);
    };

    out.ledger = sim.run(cfg.horizon_s, max_decisions, hooks);
    return out;
}

SeedResult run_seed(const ScenarioConfig& cfg, uint64_t seed) {
    SeedResult res;
    res.seed = seed;
    const PolicyKind kind = policy_kind_from_name(cfg.policy);

    std::unique_ptr<AgentPool> pool;
    RewardSpec spec = cfg.reward;
    std::string events;

    // One network per seed; training (mhrsac) and every evaluation episode
    // run on it, so evaluation measures fresh traffic, not a fresh topology.
    const Network net = build_network(cfg.topo, seed);
    const auto types = assign_station_types(net, cfg.traffic.type_mix, seed);

    if (kind == PolicyKind::Mhrsac) {
        if (spec.hindsight && spec.d_tol < 0.0) {
            Simulation calib(net, types, cfg.traffic, seed, cfg.trainer.window);
            auto hooks = baseline_hooks(PolicyKind::Mcaa);
            const auto led = calib.run(cfg.horizon_s, cfg.calibration_decisions, hooks);
            spec.d_tol = std::clamp(led.tdr_mean(), 0.02, 0.98);
        }
        res.d_tol_used = spec.hindsight ? spec.d_tol : -1.0;

        pool = std::make_unique<AgentPool>(cfg, cfg.topo.num_aps, seed);
        RngStream train_rng = RngStream::keyed(seed, 0xA6E17);
        auto train = run_mhrsac_session(cfg, net, types, seed, *pool, spec, true,
                                        cfg.train_decisions, train_rng);
        res.curve = std::move(train.curve);
        events += "# train\n" + train.ledger.serialize_events(cfg.policy);
    }

    // Evaluation episodes (baselines run only these).
    std::vector<double> ep_tdr;
    std::array<std::vector<double>, 3> ep_fs;
    RngStream eval_rng = RngStream::keyed(seed, 0xE7A1);
    for (int e = 0; e < cfg.eval_episodes; ++e) {
        const uint64_t es = eval_seed_for(seed, e);
        MetricsLedger led;
        if (kind == PolicyKind::Mhrsac) {
            auto session = run_mhrsac_session(cfg, net, types, es, *pool, spec, false,
                                              cfg.eval_decisions, eval_rng);
            led = std::move(session.ledger);
        } else {
            Simulation sim(net, types, cfg.traffic, es, cfg.trainer.window);
            auto hooks = baseline_hooks(kind);
            led = sim.run(cfg.horizon_s, cfg.eval_decisions, hooks);
        }
        ep_tdr.push_back(led.tdr_mean());
        const auto fs = led.fs_mean_by_type();
        for (int k = 0; k < 3; ++k) {
            if (!std::isnan(fs[k])) ep_fs[k].push_back(fs[k]);
        }
        events += "# eval " + std::to_string(e) + "\n" + led.serialize_events(cfg.policy);
    }

    res.tdr = median(ep_tdr);
    for (int k = 0; k < 3; ++k) res.fs[k] = median(ep_fs[k]);
    res.events = std::move(events);
    res.event_hash = fnv1a(res.events);
    return res;
}

}  // namespace

namespace detail {
SessionResult run_baseline_session(const ScenarioConfig& cfg, uint64_t seed, PolicyKind kind) {
    const Network net = build_network(cfg.topo, seed);
    const auto types = assign_station_types(net, cfg.traffic.type_mix, seed);
    Simulation sim(net, types, cfg.traffic, seed, cfg.trainer.window);
    auto hooks = baseline_hooks(kind);
    SessionResult out;
    out.ledger = sim.run(cfg.horizon_s, cfg.eval_decisions, hooks);
    return out;
}
}  // namespace detail

RunReport run_experiment(const ScenarioConfig& cfg, int threads) {
    policy_kind_from_name(cfg.policy);  // reject invalid config before simulating
    if (cfg.seeds.empty()) throw std::invalid_argument("run_experiment: no seeds");
    if (cfg.eval_episodes <= 0) throw std::invalid_argument("run_experiment: no eval episodes");

    const auto t0 = std::chrono::steady_clock::now();
    RunReport report;
    report.config = cfg.to_json();
    report.config_hash = cfg.hash();
    report.policy = cfg.policy;
    report.per_seed.resize(cfg.seeds.size());

    const int n_threads = threads > 0
                              ? threads
                              : std::min<int>(static_cast<int>(cfg.seeds.size()),
                                              std::max(1u, std::thread::hardware_concurrency()));
    if (n_threads <= 1 || cfg.seeds.size() == 1) {
        for (size_t i = 0; i < cfg.seeds.size(); ++i) {
            report.per_seed[i] = run_seed(cfg, cfg.seeds[i]);
        }
    } else {
        std::vector<std::thread> workers;
        std::atomic<size_t> next{0};
        for (int t = 0; t < n_threads; ++t) {
            workers.emplace_back([&]() {
                for (size_t i = next.fetch_add(1); i < cfg.seeds.size(); i = next.fetch_add(1)) {
                    report.per_seed[i] = run_seed(cfg, cfg.seeds[i]);
                }
            });
        }
        for (auto& w : workers) w.join();
    }

    std::vector<double> tdrs;
    std::array<std::vector<double>, 3> fss;
    for (const auto& s : report.per_seed) {
        tdrs.push_back(s.tdr);
        for (int k = 0; k < 3; ++k) {
            if (!std::isnan(s.fs[k])) fss[k].push_back(s.fs[k]);
        }
    }
    report.median_tdr = median(tdrs);
    for (int k = 0; k < 3; ++k) report.median_fs[k] = median(fss[k]);
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

json RunReport::to_json(bool include_events) const {
    char hex[19];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(config_hash));
    auto or_null = [](double v) { return std::isnan(v) ? json() : json(v); };
    json per = json::array();
    for (const auto& s : per_seed) {
        char ehex[19];
        std::snprintf(ehex, sizeof(ehex), "%016llx", static_cast<unsigned long long>(s.event_hash));
        json js = {{"seed", s.seed},
                   {"tdr", s.tdr},
                   {"fs", {{"WB", or_null(s.fs[0])}, {"V4K", or_null(s.fs[1])},
                           {"VR", or_null(s.fs[2])}}},
                   {"event_hash", ehex},
                   {"d_tol_used", s.d_tol_used},
                   {"curve_points", s.curve.size()}};
        if (include_events) js["events"] = s.events;
        per.push_back(std::move(js));
    }
    return {{"config", config},
            {"config_hash", hex},
            {"policy", policy},
            {"per_seed", per},
            {"median_tdr", median_tdr},
            {"median_fs", {{"WB", or_null(median_fs[0])}, {"V4K", or_null(median_fs[1])},
                           {"VR", or_null(median_fs[2])}}},
            {"wall_time_s", wall_time_s}};
}

json compare_policies(const std::vector<ScenarioConfig>& cfgs, int threads) {
    if (cfgs.size() < 2) throw std::invalid_argument("compare_policies: need >= 2 configs");
    auto strip = [](const ScenarioConfig& c) {
        json j = c.to_json();
        j.erase("policy");
        return j.dump();
    };
    for (size_t i = 1; i < cfgs.size(); ++i) {
        if (strip(cfgs[i]) != strip(cfgs[0])) {
            throw std::invalid_argument("compare_policies: configs differ beyond the policy field");
        }
    }

    json table = json::array();
    std::vector<RunReport> reports;
    for (const auto& c : cfgs) reports.push_back(run_experiment(c, threads));
    auto or_null = [](double v) { return std::isnan(v) ? json() : json(v); };
    for (const auto& r : reports) {
        std::vector<double> spread;
        for (const auto& s : r.per_seed) spread.push_back(s.tdr);
        table.push_back({{"policy", r.policy},
                         {"median_tdr", r.median_tdr},
                         {"tdr_per_seed", spread},
                         {"median_fs", {{"WB", or_null(r.median_fs[0])},
                                        {"V4K", or_null(r.median_fs[1])},
                                        {"VR", or_null(r.median_fs[2])}}}});
    }
    // Pairwise gains: both absolute percentage points and relative.
    json gains = json::array();
    for (size_t i = 0; i < reports.size(); ++i) {
        for (size_t j = 0; j < reports.size(); ++j) {
            if (i == j) continue;
            const double a = reports[i].median_tdr, b = reports[j].median_tdr;
            gains.push_back({{"policy", reports[i].policy},
                             {"versus", reports[j].policy},
                             {"tdr_gain_pp", (b - a) * 100.0},
                             {"tdr_gain_rel", b > 0.0 ? (b - a) / b : 0.0}});
        }
    }
    return {{"table", table}, {"gains", gains}};
}

std::string training_curves(const std::vector<CurvePoint>& log, int smooth_window) {
    std::string out = "step,reward,drop\n";
    char buf[96];
    double rsum = 0.0, dsum = 0.0;
    for (size_t i = 0; i < log.size(); ++i) {
        rsum += log[i].reward;
        dsum += log[i].drop;
        if (i >= static_cast<size_t>(smooth_window)) {
            rsum -= log[i - smooth_window].reward;
            dsum -= log[i - smooth_window].drop;
        }
        const double n = std::min<double>(i + 1, smooth_window);
        std::snprintf(buf, sizeof(buf), "%ld,%.9g,%.9g\n", log[i].step, rsum / n, dsum / n);
        out += buf;
    }
    return out;
}

}  // namespace mlo
