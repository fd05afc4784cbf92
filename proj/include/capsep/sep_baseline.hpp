#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <set>
#include <vector>

#include "capsep/graph.hpp"
#include "capsep/instance.hpp"
#include "capsep/rci.hpp"

namespace capsep {

/// Connected-components separation heuristic. Expects the raw (un-augmented)
/// support graph. Each component and its complement are screened; when
/// nothing violates, the union of the components not adjacent to the depot
/// gets one more try. Returns violated subsets, deduplicated.
inline std::vector<std::vector<int>> connected_components_separate(
    const WeightedGraph& support, const std::vector<long long>& demands, long long capacity) {
    const int n = support.num_vertices();
    const auto adj = support.adjacency();

    // Components of the support graph restricted to customers.
    std::vector<int> comp(n, -1);
    int n_comp = 0;
    for (int start = 1; start < n; ++start) {
        if (comp[start] >= 0) continue;
        std::vector<int> stack{start};
        comp[start] = n_comp;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (const auto& [u, w] : adj[v]) {
                (void)w;
                if (u == support.depot || comp[u] >= 0) continue;
                comp[u] = n_comp;
                stack.push_back(u);
            }
        }
        ++n_comp;
    }

    std::vector<std::vector<int>> members(n_comp);
    for (int v = 1; v < n; ++v) members[comp[v]].push_back(v);

    std::vector<char> depot_adjacent(n_comp, 0);
    for (const auto& [u, w] : adj[support.depot]) {
        (void)w;
        depot_adjacent[comp[u]] = 1;
    }

    std::set<std::vector<int>> seen;
    std::vector<std::vector<int>> cuts;
    auto offer = [&](std::vector<int> s) {
        if (s.empty()) return;
        std::sort(s.begin(), s.end());
        if (violation(s, support, demands, capacity) > kViolationTol && seen.insert(s).second)
            cuts.push_back(std::move(s));
    };

    for (int c = 0; c < n_comp; ++c) {
        offer(members[c]);
        std::vector<int> complement;
        for (int v = 1; v < n; ++v)
            if (comp[v] != c) complement.push_back(v);
        offer(std::move(complement));
    }

    if (cuts.empty()) {
        std::vector<int> isolated_union;
        for (int c = 0; c < n_comp; ++c)
            if (!depot_adjacent[c])
                isolated_union.insert(isolated_union.end(), members[c].begin(), members[c].end());
        offer(std::move(isolated_union));
    }
    return cuts;
}

inline std::vector<std::vector<int>> connected_components_separate(const WeightedGraph& support,
                                                                   const CvrpInstance& inst) {
    return connected_components_separate(support, inst.demands, inst.capacity);
}

/// Greedy growth separator for a single M: start from the most violated
/// singleton and absorb the neighbor with the best crossing-weight decrease
/// per unit of added demand until the demand threshold is passed.
inline std::optional<std::vector<int>> greedy_separate(const WeightedGraph& support,
                                                       const std::vector<long long>& demands,
                                                       long long capacity, int m) {
    const int n = support.num_vertices();
    if (n < 2) return std::nullopt;
    const auto adj = support.adjacency();
    const long long need = static_cast<long long>(m) * capacity + 1;

    int seed = -1;
    double best_viol = -std::numeric_limits<double>::infinity();
    for (int v = 1; v < n; ++v) {
        const double viol = violation({v}, support, demands, capacity);
        if (viol > best_viol + 1e-12) {
            best_viol = viol;
            seed = v;
        }
    }
    if (seed < 0) return std::nullopt;

    std::vector<char> in_set(n, 0);
    in_set[seed] = 1;
    long long demand = demands[seed];

    while (demand < need) {
        int pick = -1;
        double best_rate = -std::numeric_limits<double>::infinity();
        for (int v = 1; v < n; ++v) {
            if (in_set[v]) continue;
            bool adjacent = false;
            double delta = 0.0; // crossing-weight change if v joins
            for (const auto& [u, w] : adj[v]) {
                if (in_set[u]) {
                    adjacent = true;
                    delta -= w;
                } else {
                    delta += w;
                }
            }
            if (!adjacent) continue;
            const double rate = -delta / static_cast<double>(demands[v]);
            if (rate > best_rate + 1e-12) {
                best_rate = rate;
                pick = v;
            }
        }
        if (pick < 0) return std::nullopt; // ran out of adjacent vertices
        in_set[pick] = 1;
        demand += demands[pick];
    }

    std::vector<int> subset;
    for (int v = 1; v < n; ++v)
        if (in_set[v]) subset.push_back(v);
    if (violation(subset, support, demands, capacity) > kViolationTol) return subset;
    return std::nullopt;
}

inline std::optional<std::vector<int>> greedy_separate(const WeightedGraph& support,
                                                       const CvrpInstance& inst, int m) {
    return greedy_separate(support, inst.demands, inst.capacity, m);
}

} // namespace capsep
