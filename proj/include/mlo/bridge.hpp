#pragma once

#include <functional>
#include <string>

#include <nlohmann/json.hpp>

#include "mlo/harness.hpp"

namespace mlo {

// Newline-delimited JSON protocol over TCP, one decision per round trip:
//   server -> {"type":"obs","decision":k,"n_f":n,"window":[[..5]..],"occ":[..]}
//   client -> {"type":"act","head":h,"index":i}
//   server -> {"type":"reward","decision":k,"r":x}        (after materialization)
//   server -> {"type":"done","report":{...}}              (end of session)
// The client may open with {"type":"hello","label":name}; the label is used
// as the policy name in the emitted event log. A malformed or out-of-range
// action gets {"type":"err",...} and the decision falls back to MCAA.
struct BridgeResult {
    std::string label;
    MetricsLedger ledger;
    long fallbacks = 0;
    nlohmann::json report;
};

// Serves exactly one client session on 127.0.0.1:port, running the first
// seed of the scenario for eval_decisions decisions. Returns after the
// session completes. port 0 binds an ephemeral port; on_listening (if set)
// receives the actual port once the server accepts connections.
BridgeResult bridge_serve(int port, const ScenarioConfig& cfg,
                          const std::function<void(int)>& on_listening = {});

// Scripted client: connects, sends the hello label, answers every obs with
// decide(n_f, occupancies) snapped to an action index. Returns the final
// report. Used for tests and as a reference client implementation.
nlohmann::json bridge_client_run(
    const std::string& host, int port, const std::string& label,
    const std::function<std::vector<double>(int n_f, const std::vector<double>& occ)>& decide);

}  // namespace mlo
