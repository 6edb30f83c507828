#include "mlo/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mlo {

std::vector<std::vector<double>> enumerate_actions(int interfaces, int granularity) {
    if (interfaces != 2 && interfaces != 3) {
        throw std::invalid_argument("enumerate_actions: interfaces must be 2 or 3");
    }
    if (granularity < 1) throw std::invalid_argument("enumerate_actions: granularity < 1");
    const int n = granularity;
    std::vector<std::vector<double>> out;
    if (interfaces == 2) {
        for (int a = 0; a <= n; ++a) {
            out.push_back({static_cast<double>(a) / n, static_cast<double>(n - a) / n});
        }
    } else {
        for (int a = 0; a <= n; ++a) {
            for (int b = 0; b <= n - a; ++b) {
                out.push_back({static_cast<double>(a) / n, static_cast<double>(b) / n,
                               static_cast<double>(n - a - b) / n});
            }
        }
    }
    return out;
}

long action_space_size(int interfaces, int granularity) {
    if (interfaces == 2) return granularity + 1;
    if (interfaces == 3) return static_cast<long>(granularity + 1) * (granularity + 2) / 2;
    throw std::invalid_argument("action_space_size: interfaces must be 2 or 3");
}

HeadSelection select_head(int n_f) {
    HeadSelection sel;
    switch (n_f) {
        case 1: sel.bypass = true; return sel;
        case 2: sel.head = Head::H1; return sel;
        case 3: sel.head = Head::H2; return sel;
        default: throw std::invalid_argument("select_head: n_f must be 1, 2 or 3");
    }
}

std::vector<double> slci_decide(const std::vector<double>& occupancies) {
    if (occupancies.empty()) throw std::invalid_argument("slci_decide: no interfaces");
    size_t best = 0;
    for (size_t i = 1; i < occupancies.size(); ++i) {
        if (occupancies[i] < occupancies[best]) best = i;
    }
    std::vector<double> out(occupancies.size(), 0.0);
    out[best] = 1.0;
    return out;
}

std::vector<int> largest_remainder(const std::vector<double>& weights, int total) {
    double sum = 0.0;
    for (double w : weights) sum += w;
    std::vector<int> parts(weights.size(), 0);
    std::vector<double> frac(weights.size(), 0.0);
    int assigned = 0;
    for (size_t i = 0; i < weights.size(); ++i) {
        const double exact = sum > 0.0 ? weights[i] / sum * total : 0.0;
        parts[i] = static_cast<int>(std::floor(exact + 1e-9));
        frac[i] = exact - parts[i];
        assigned += parts[i];
    }
    while (assigned < total) {
        size_t best = 0;
        for (size_t i = 1; i < weights.size(); ++i) {
            if (frac[i] > frac[best] + 1e-12) best = i;
        }
        parts[best]++;
        frac[best] = -1.0;
        assigned++;
    }
    return parts;
}

std::vector<double> mcaa_decide(const std::vector<double>& occupancies, bool snap,
                                int granularity) {
    if (occupancies.empty()) throw std::invalid_argument("mcaa_decide: no interfaces");
    std::vector<double> free(occupancies.size());
    double total_free = 0.0;
    for (size_t i = 0; i < occupancies.size(); ++i) {
        free[i] = std::max(0.0, 1.0 - occupancies[i]);
        total_free += free[i];
    }
    std::vector<double> w(occupancies.size());
    if (total_free <= 0.0) {
        std::fill(w.begin(), w.end(), 1.0 / occupancies.size());
    } else {
        for (size_t i = 0; i < w.size(); ++i) w[i] = free[i] / total_free;
    }
    if (!snap) return w;
    const auto parts = largest_remainder(w, granularity);
    std::vector<double> out(w.size());
    for (size_t i = 0; i < w.size(); ++i) out[i] = static_cast<double>(parts[i]) / granularity;
    return out;
}

PolicyKind policy_kind_from_name(const std::string& name) {
    if (name == "slci") return PolicyKind::Slci;
    if (name == "mcaa") return PolicyKind::Mcaa;
    if (name == "mhrsac") return PolicyKind::Mhrsac;
    if (name == "external") return PolicyKind::External;
    throw std::invalid_argument("unknown policy: " + name);
}

std::string policy_name(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::Slci: return "slci";
        case PolicyKind::Mcaa: return "mcaa";
        case PolicyKind::Mhrsac: return "mhrsac";
        case PolicyKind::External: return "external";
    }
    return "?";
}

}  // namespace mlo
