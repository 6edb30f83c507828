#include "mlo/mdp.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace mlo {

ObservationFrame build_frame(const std::array<double, 3>& occupancies, int active_flows,
                             int attached_stations, FlowType incoming) {
    ObservationFrame f;
    for (int b = 0; b < 3; ++b) f.v[b] = std::clamp(occupancies[b], 0.0, 1.0);
    f.v[3] = attached_stations > 0
                 ? std::clamp(static_cast<double>(active_flows) / attached_stations, 0.0, 1.0)
                 : 0.0;
    f.v[4] = flow_type_id(incoming);
    return f;
}

double reward(double d_avg) {
    if (d_avg < 0.0 || d_avg > 1.0) throw std::domain_error("reward: d_avg outside [0,1]");
    return 1.0 - 2.0 * d_avg;
}

double reward_hindsight(double d_avg, const RewardSpec& spec) {
    return d_avg < spec.d_tol ? reward(d_avg) : -1.0;
}

Transition make_transition(const ObservationWindow& prev, Head head, int action, double d_avg,
                           const ObservationWindow& next, const RewardSpec& spec) {
    Transition t;
    auto to_f32 = [](const std::vector<double>& v) {
        return std::vector<float>(v.begin(), v.end());
    };
    t.s = to_f32(prev.flat());
    t.s2 = to_f32(next.flat());
    t.head = head;
    t.action = action;
    t.r = static_cast<float>(spec.hindsight ? reward_hindsight(d_avg, spec) : reward(d_avg));
    return t;
}

namespace {
template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}
}  // namespace

void write_transitions(std::ostream& os, const std::vector<Transition>& ts) {
    put<uint32_t>(os, 0x4D545231u);  // "MTR1"
    put<uint64_t>(os, ts.size());
    for (const auto& t : ts) {
        put<uint32_t>(os, static_cast<uint32_t>(t.s.size()));
        os.write(reinterpret_cast<const char*>(t.s.data()), t.s.size() * sizeof(float));
        put<int32_t>(os, static_cast<int32_t>(t.head));
        put<int32_t>(os, t.action);
        put<float>(os, t.r);
        os.write(reinterpret_cast<const char*>(t.s2.data()), t.s2.size() * sizeof(float));
    }
}

std::vector<Transition> read_transitions(std::istream& is) {
    if (get<uint32_t>(is) != 0x4D545231u) throw std::runtime_error("bad transition log magic");
    const auto n = get<uint64_t>(is);
    std::vector<Transition> ts(n);
    for (auto& t : ts) {
        const auto dim = get<uint32_t>(is);
        t.s.resize(dim);
        is.read(reinterpret_cast<char*>(t.s.data()), dim * sizeof(float));
        t.head = static_cast<Head>(get<int32_t>(is));
        t.action = get<int32_t>(is);
        t.r = get<float>(is);
        t.s2.resize(dim);
        is.read(reinterpret_cast<char*>(t.s2.data()), dim * sizeof(float));
        if (!is) throw std::runtime_error("truncated transition log");
    }
    return ts;
}

}  // namespace mlo
