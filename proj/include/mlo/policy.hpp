#pragma once

#include <string>
#include <vector>

namespace mlo {

// Allocation fractions are discretized in tenths: every action is a
// composition of n integer parts over the available interfaces.
struct ActionSpaceConfig {
    int granularity = 10;
};

// All compositions of `granularity` into `interfaces` non-negative parts,
// divided by granularity. Lexicographic order, frozen (replay buffers store
// indices into this list).
std::vector<std::vector<double>> enumerate_actions(int interfaces, int granularity);

// Closed-form size of the list above: C(n + m - 1, m - 1).
long action_space_size(int interfaces, int granularity);

enum class Head : int { H1 = 0, H2 = 1 };  // h1: two interfaces, h2: three

// n_f = 1 bypasses the agent entirely; 2 -> h1, 3 -> h2.
struct HeadSelection {
    bool bypass = false;
    Head head = Head::H1;
};
HeadSelection select_head(int n_f);

// Whole flow to the least-occupied interface; ties to the lowest band index.
std::vector<double> slci_decide(const std::vector<double>& occupancies);

// Split proportional to free share (1 - o), snapped to tenths with
// largest-remainder rounding; uniform split when nothing is free.
std::vector<double> mcaa_decide(const std::vector<double>& occupancies, bool snap = true,
                                int granularity = 10);

// Largest-remainder rounding of non-negative weights to integer parts
// summing to `total`; ties go to the lowest index. Exposed for oracles.
std::vector<int> largest_remainder(const std::vector<double>& weights, int total);

enum class PolicyKind { Slci, Mcaa, Mhrsac, External };
PolicyKind policy_kind_from_name(const std::string& name);
std::string policy_name(PolicyKind kind);

}  // namespace mlo
