#include "mlo/bridge.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace mlo {

using nlohmann::json;

namespace {

struct Socket {
    int fd = -1;
    explicit Socket(int f = -1) : fd(f) {}
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    Socket(Socket&& o) noexcept : fd(o.fd) { o.fd = -1; }
    ~Socket() {
        if (fd >= 0) ::close(fd);
    }
};

void send_line(int fd, const json& j) {
    std::string line = j.dump();
    line.push_back('\n');
    size_t off = 0;
    while (off < line.size()) {
        const ssize_t n = ::send(fd, line.data() + off, line.size() - off, 0);
        if (n <= 0) throw std::runtime_error("bridge: send failed");
        off += n;
    }
}

// Blocking line reader with a per-connection carry buffer.
struct LineReader {
    int fd;
    std::string buf;

    bool read_line(std::string* out) {
        for (;;) {
            const auto pos = buf.find('\n');
            if (pos != std::string::npos) {
                *out = buf.substr(0, pos);
                buf.erase(0, pos + 1);
                return true;
            }
            char tmp[4096];
            const ssize_t n = ::recv(fd, tmp, sizeof(tmp), 0);
            if (n <= 0) return false;
            buf.append(tmp, n);
        }
    }
};

json window_to_json(const ObservationWindow& w) {
    json out = json::array();
    for (const auto& f : w.frames) out.push_back(f.v);
    return out;
}

}  // namespace

BridgeResult bridge_serve(int port, const ScenarioConfig& cfg,
                          const std::function<void(int)>& on_listening) {
    Socket server(::socket(AF_INET, SOCK_STREAM, 0));
    if (server.fd < 0) throw std::runtime_error("bridge: cannot create socket");
    const int one = 1;
    ::setsockopt(server.fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<uint16_t>(port));
    if (::bind(server.fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        throw std::runtime_error("bridge: bind failed");
    }
    if (::listen(server.fd, 1) != 0) throw std::runtime_error("bridge: listen failed");
    socklen_t alen = sizeof(addr);
    ::getsockname(server.fd, reinterpret_cast<sockaddr*>(&addr), &alen);
    if (on_listening) on_listening(ntohs(addr.sin_port));

    Socket client(::accept(server.fd, nullptr, nullptr));
    if (client.fd < 0) throw std::runtime_error("bridge: accept failed");
    LineReader reader{client.fd};

    BridgeResult result;
    result.label = "external";

    // Optional hello; anything else is treated as the first action later.
    {
        std::string line;
        if (reader.read_line(&line)) {
            try {
                const json hello = json::parse(line);
                if (hello.value("type", "") == "hello") {
                    result.label = hello.value("label", "external");
                } else {
                    reader.buf.insert(0, line + "\n");  // not a hello, replay it
                }
            } catch (const json::parse_error&) {
                reader.buf.insert(0, line + "\n");
            }
        }
    }

    const uint64_t seed = cfg.seeds.empty() ? 1 : cfg.seeds[0];
    const Network net = build_network(cfg.topo, seed);
    const auto types = assign_station_types(net, cfg.traffic.type_mix, seed);
    Simulation sim(net, types, cfg.traffic, seed, cfg.trainer.window);

    const auto actions2 = enumerate_actions(2, 10);
    const auto actions3 = enumerate_actions(3, 10);

    EngineHooks hooks;
    hooks.decide = [&](const DecisionContext& ctx) -> std::vector<double> {
        send_line(client.fd, {{"type", "obs"},
                              {"decision", ctx.decision_index},
                              {"n_f", ctx.n_f},
                              {"window", window_to_json(ctx.window)},
                              {"occ", ctx.occupancies}});
        std::string line;
        auto fallback = [&](const std::string& why) {
            send_line(client.fd, {{"type", "err"}, {"reason", why}});
            result.fallbacks++;
            return mcaa_decide(ctx.occupancies);
        };
        if (!reader.read_line(&line)) return fallback("connection lost");
        json act;
        try {
            act = json::parse(line);
        } catch (const json::parse_error&) {
            return fallback("malformed message");
        }
        if (act.value("type", "") != "act" || !act.contains("index")) {
            return fallback("expected act message");
        }
        const int index = act.value("index", -1);
        const auto& actions = ctx.n_f == 2 ? actions2 : actions3;
        if (index < 0 || index >= static_cast<int>(actions.size())) {
            return fallback("action index out of range");
        }
        return actions[index];
    };
    hooks.on_materialized = [&](int, const ObservationWindow&, double d_avg,
                                const ObservationWindow&, long decision_index) {
        send_line(client.fd, {{"type", "reward"},
                              {"decision", decision_index},
                              {"r", reward(d_avg)}});
    };

    result.ledger = sim.run(cfg.horizon_s, cfg.eval_decisions, hooks);
    result.report = {{"policy", result.label},
                     {"events", result.ledger.serialize_events(result.label)},
                     {"summary", result.ledger.summary(result.label)},
                     {"fallbacks", result.fallbacks}};
    send_line(client.fd, {{"type", "done"}, {"report", result.report}});
    return result;
}

json bridge_client_run(
    const std::string& host, int port, const std::string& label,
    const std::function<std::vector<double>(int n_f, const std::vector<double>& occ)>& decide) {
    Socket sock(::socket(AF_INET, SOCK_STREAM, 0));
    if (sock.fd < 0) throw std::runtime_error("bridge client: cannot create socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        throw std::runtime_error("bridge client: bad host");
    }
    if (::connect(sock.fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        throw std::runtime_error("bridge client: connect failed");
    }
    LineReader reader{sock.fd};
    send_line(sock.fd, {{"type", "hello"}, {"label", label}});

    const auto actions2 = enumerate_actions(2, 10);
    const auto actions3 = enumerate_actions(3, 10);
    auto index_of = [&](const std::vector<double>& fractions) {
        const auto& actions = fractions.size() == 2 ? actions2 : actions3;
        for (size_t i = 0; i < actions.size(); ++i) {
            bool match = true;
            for (size_t k = 0; k < fractions.size(); ++k) {
                if (std::abs(actions[i][k] - fractions[k]) > 1e-9) {
                    match = false;
                    break;
                }
            }
            if (match) return static_cast<int>(i);
        }
        return -1;
    };

    std::string line;
    while (reader.read_line(&line)) {
        const json msg = json::parse(line);
        const std::string type = msg.value("type", "");
        if (type == "obs") {
            const int n_f = msg.value("n_f", 0);
            const std::vector<double> occ = msg.value("occ", std::vector<double>{});
            const int idx = index_of(decide(n_f, occ));
            send_line(sock.fd, {{"type", "act"}, {"head", n_f == 2 ? 0 : 1}, {"index", idx}});
        } else if (type == "done") {
            return msg["report"];
        }
        // reward and err messages need no reply
    }
    throw std::runtime_error("bridge client: connection closed before done");
}

}  // namespace mlo
