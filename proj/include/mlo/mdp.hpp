#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "mlo/policy.hpp"
#include "mlo/traffic.hpp"

namespace mlo {

constexpr int kFrameDim = 5;  // C1, C2, C3 occupancy, O_f, T_id

struct ObservationFrame {
    std::array<double, kFrameDim> v{0, 0, 0, 0, 0};
};

ObservationFrame build_frame(const std::array<double, 3>& occupancies, int active_flows,
                             int attached_stations, FlowType incoming);

// Sliding sequence of the last W frames, zero-padded until W decisions
// have been observed. Oldest first.
struct ObservationWindow {
    explicit ObservationWindow(int w = 10) : frames(w) {}
    std::vector<ObservationFrame> frames;

    void push(const ObservationFrame& f) {
        frames.erase(frames.begin());
        frames.push_back(f);
    }
    std::vector<double> flat() const {
        std::vector<double> out;
        out.reserve(frames.size() * kFrameDim);
        for (const auto& f : frames) out.insert(out.end(), f.v.begin(), f.v.end());
        return out;
    }
    int size() const { return static_cast<int>(frames.size()); }
};

struct RewardSpec {
    bool hindsight = false;
    double d_tol = 0.2;  // drop-ratio goal threshold, (0,1)
};

// 1 - d mapped affinely from [0,1] onto [-1,1].
double reward(double d_avg);
// Same, but -1 whenever d_avg fails the goal (strict inequality to pass).
double reward_hindsight(double d_avg, const RewardSpec& spec);

struct Transition {
    std::vector<float> s;   // W x 5, flattened
    std::vector<float> s2;  // W x 5
    Head head = Head::H1;
    int action = 0;
    float r = 0.0f;
};

Transition make_transition(const ObservationWindow& prev, Head head, int action, double d_avg,
                           const ObservationWindow& next, const RewardSpec& spec);

// Length-prefixed binary transition log for offline replay.
void write_transitions(std::ostream& os, const std::vector<Transition>& ts);
std::vector<Transition> read_transitions(std::istream& is);

}  // namespace mlo
