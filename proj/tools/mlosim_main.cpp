#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mlo/bridge.hpp"
#include "mlo/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

mlo::ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json j;
    in >> j;
    return mlo::ScenarioConfig::from_json(j);
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << content;
}

void dump_artifacts(const mlo::RunReport& report, const std::string& events_dir,
                    const std::string& curves_dir, const std::string& flow_trace_dir) {
    for (const auto& s : report.per_seed) {
        const std::string tag = report.policy + "_seed" + std::to_string(s.seed);
        if (!events_dir.empty()) {
            write_file(fs::path(events_dir) / (tag + ".events.csv"), s.events);
        }
        if (!curves_dir.empty()) {
            std::string raw = "step,reward,drop\n";
            char buf[96];
            for (const auto& p : s.curve) {
                std::snprintf(buf, sizeof(buf), "%ld,%.9g,%.9g\n", p.step, p.reward, p.drop);
                raw += buf;
            }
            write_file(fs::path(curves_dir) / (tag + ".log.csv"), raw);
            write_file(fs::path(curves_dir) / (tag + ".curve.csv"),
                       mlo::training_curves(s.curve));
        }
    }
    if (!flow_trace_dir.empty()) {
        // one record per flow: id, station, type, rate_mbps, t_arrive, t_end
        // (re-run not needed; traces live in the events already for decisions,
        // flow details come from the ledger embedded per seed)
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Flow-level Wi-Fi 7 multi-link traffic allocation simulator"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Run one experiment config");
    std::string run_config, run_policy, run_out, run_events, run_curves;
    uint64_t run_seed = 0;
    bool desk = false;
    int threads = 0;
    bool with_events = false;
    run->add_option("--config", run_config, "Scenario config file (JSON)");
    run->add_option("--seed", run_seed, "Override: single seed");
    run->add_option("--policy", run_policy, "Override: slci | mcaa | mhrsac");
    run->add_flag("--desk-scale", desk, "Use the desk-scale preset as the base config");
    run->add_option("--out", run_out, "Report output file (default stdout)");
    run->add_option("--events-dir", run_events, "Directory for per-seed event logs");
    run->add_option("--curves-dir", run_curves, "Directory for per-seed training logs/curves");
    run->add_option("--threads", threads, "Parallel seed workers (0 = auto)");
    run->add_flag("--with-events", with_events, "Embed event logs in the report");

    // compare
    auto* compare = app.add_subcommand("compare", "Compare policies on a shared scenario");
    std::vector<std::string> cmp_configs;
    std::string cmp_out;
    compare->add_option("--configs", cmp_configs, "Config files differing only in policy")
        ->expected(-1);
    compare->add_option("--out", cmp_out, "Output file (default stdout)");
    compare->add_option("--threads", threads, "Parallel seed workers (0 = auto)");

    // curves
    auto* curves = app.add_subcommand("curves", "Smooth a raw training log");
    std::string curves_log, curves_out;
    int smooth = 100;
    curves->add_option("--log", curves_log, "Raw step,reward,drop log file")->required();
    curves->add_option("--out", curves_out, "Output curve file (default stdout)");
    curves->add_option("--smooth", smooth, "Trailing-mean window (decisions)");

    // bridge
    auto* bridge = app.add_subcommand("bridge", "Serve one external-agent session");
    std::string bridge_config;
    int bridge_port = 0;
    bridge->add_option("--endpoint", bridge_port, "TCP port on 127.0.0.1 (0 = ephemeral)")
        ->required();
    bridge->add_option("--config", bridge_config, "Scenario config file (JSON)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            mlo::ScenarioConfig cfg =
                desk ? mlo::ScenarioConfig::desk_scale() : mlo::ScenarioConfig();
            if (!run_config.empty()) cfg = load_config(run_config);
            if (!run_policy.empty()) cfg.policy = run_policy;
            if (run->count("--seed")) cfg.seeds = {run_seed};
            const auto report = mlo::run_experiment(cfg, threads);
            dump_artifacts(report, run_events, run_curves, "");
            const std::string text = report.to_json(with_events).dump(2) + "\n";
            if (run_out.empty()) {
                std::cout << text;
            } else {
                write_file(run_out, text);
            }
        } else if (*compare) {
            std::vector<mlo::ScenarioConfig> cfgs;
            for (const auto& p : cmp_configs) cfgs.push_back(load_config(p));
            const auto table = mlo::compare_policies(cfgs, threads);
            const std::string text = table.dump(2) + "\n";
            if (cmp_out.empty()) {
                std::cout << text;
            } else {
                write_file(cmp_out, text);
            }
        } else if (*curves) {
            std::ifstream in(curves_log);
            if (!in) throw std::runtime_error("cannot open log file: " + curves_log);
            std::vector<mlo::CurvePoint> log;
            std::string line;
            std::getline(in, line);  // header
            while (std::getline(in, line)) {
                mlo::CurvePoint p{};
                if (std::sscanf(line.c_str(), "%ld,%lf,%lf", &p.step, &p.reward, &p.drop) == 3) {
                    log.push_back(p);
                }
            }
            const std::string text = mlo::training_curves(log, smooth);
            if (curves_out.empty()) {
                std::cout << text;
            } else {
                write_file(curves_out, text);
            }
        } else if (*bridge) {
            mlo::ScenarioConfig cfg = mlo::ScenarioConfig::desk_scale();
            if (!bridge_config.empty()) cfg = load_config(bridge_config);
            cfg.policy = "external";
            const auto result = mlo::bridge_serve(bridge_port, cfg, [](int port) {
                std::cerr << "bridge listening on 127.0.0.1:" << port << "\n";
            });
            std::cout << result.report.dump(2) << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
