#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <vector>

#include "capsep/errors.hpp"

namespace capsep {

/// Undirected weighted graph with per-vertex demands and a depot marker.
/// Used both as an LP support graph and as a coarsening level.
struct WeightedGraph {
    struct Edge {
        int u, v;   // u < v
        double w;
    };

    int depot = 0;
    std::vector<long long> demands;
    std::vector<Edge> edges;

    int num_vertices() const { return static_cast<int>(demands.size()); }

    long long total_demand() const {
        return std::accumulate(demands.begin(), demands.end(), 0LL);
    }

    std::vector<std::vector<std::pair<int, double>>> adjacency() const {
        std::vector<std::vector<std::pair<int, double>>> adj(demands.size());
        for (const auto& e : edges) {
            adj[e.u].emplace_back(e.v, e.w);
            adj[e.v].emplace_back(e.u, e.w);
        }
        return adj;
    }

    /// Sum of edge weights crossing the 0/1 partition given by in_set.
    double crossing_weight(const std::vector<char>& in_set) const {
        double s = 0.0;
        for (const auto& e : edges)
            if (in_set[e.u] != in_set[e.v]) s += e.w;
        return s;
    }

    double crossing_weight(const std::vector<int>& subset) const {
        std::vector<char> in_set(demands.size(), 0);
        for (int v : subset) in_set[v] = 1;
        return crossing_weight(in_set);
    }

    long long demand_of(const std::vector<int>& subset) const {
        long long s = 0;
        for (int v : subset) s += demands[v];
        return s;
    }
};

/// Add any missing depot edge with weight zero so every vertex can exchange
/// messages with the rest of the graph through the depot.
inline WeightedGraph augment_through_depot(const WeightedGraph& g) {
    WeightedGraph out = g;
    std::vector<char> has(g.demands.size(), 0);
    for (const auto& e : g.edges)
        if (e.u == g.depot) has[e.v] = 1;
        else if (e.v == g.depot) has[e.u] = 1;
    for (int v = 0; v < g.num_vertices(); ++v) {
        if (v == g.depot || has[v]) continue;
        out.edges.push_back({std::min(g.depot, v), std::max(g.depot, v), 0.0});
    }
    return out;
}

/// One level of a coarsening hierarchy: the shrunk graph plus the partition
/// of original vertex ids each super-vertex stands for.
struct CoarseGraph {
    int level = 0;
    WeightedGraph g;
    std::vector<std::vector<int>> groups; // groups[v] = original ids behind v

    static CoarseGraph level0(const WeightedGraph& g0) {
        CoarseGraph c;
        c.level = 0;
        c.g = g0;
        c.groups.resize(g0.demands.size());
        for (int v = 0; v < g0.num_vertices(); ++v) c.groups[v] = {v};
        return c;
    }

    /// Expand a set of super-vertex ids to the original vertex ids.
    std::vector<int> expand(const std::vector<int>& supers) const {
        std::vector<int> out;
        for (int s : supers)
            out.insert(out.end(), groups[s].begin(), groups[s].end());
        std::sort(out.begin(), out.end());
        return out;
    }
};

} // namespace capsep
