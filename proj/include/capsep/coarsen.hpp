#pragma once

#include <algorithm>
#include <map>
#include <vector>

#include "capsep/errors.hpp"
#include "capsep/graph.hpp"

namespace capsep {

inline constexpr double kGamma = 0.75;          // coarsening ratio
inline constexpr int kMaxCoarsenRounds = 50;    // hard cap per separation call

/// Contraction probability per edge: probability both endpoints land on the
/// same side, q = p_u p_v + (1-p_u)(1-p_v); zero on depot edges so the depot
/// is never merged away.
inline std::vector<double> contraction_probs(const std::vector<double>& p,
                                             const WeightedGraph& g) {
    std::vector<double> q(g.edges.size(), 0.0);
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        const auto& ed = g.edges[e];
        if (ed.u == g.depot || ed.v == g.depot) continue;
        q[e] = p[ed.u] * p[ed.v] + (1.0 - p[ed.u]) * (1.0 - p[ed.v]);
    }
    return q;
}

/// One coarsening round: contract the max-q edge until the vertex count
/// drops to floor(gamma * |V|) or no edge with positive q remains. Ties take
/// the lexicographically smallest edge. Parallel edges created by a
/// contraction merge with summed weights; demands add up; the mapping to
/// original vertices is maintained. Probabilities p drive the q values of
/// re-homed edges (the surviving endpoint keeps its p for the rest of the
/// round).
inline CoarseGraph gamma_coarsen(const CoarseGraph& in, const std::vector<double>& q,
                                 double gamma, const std::vector<double>& p) {
    if (!(gamma > 0.0 && gamma < 1.0))
        throw ValidationError("gamma_coarsen: gamma must lie in (0,1)");
    const int n = in.g.num_vertices();
    if (q.size() != in.g.edges.size())
        throw ValidationError("gamma_coarsen: q does not match edge list");
    if (static_cast<int>(p.size()) != n)
        throw ValidationError("gamma_coarsen: p does not match vertex count");

    // weight + contraction probability per live edge
    struct EdgeData {
        double w, q;
    };
    std::vector<std::map<int, EdgeData>> adj(n);
    for (std::size_t e = 0; e < in.g.edges.size(); ++e) {
        const auto& ed = in.g.edges[e];
        adj[ed.u][ed.v] = {ed.w, q[e]};
        adj[ed.v][ed.u] = {ed.w, q[e]};
    }

    std::vector<char> alive(n, 1);
    std::vector<long long> demands = in.g.demands;
    std::vector<double> prob = p;
    std::vector<std::vector<int>> groups = in.groups;
    int live = n;
    const int target = static_cast<int>(gamma * n);

    auto edge_q = [&](int a, int b) -> double {
        if (a == in.g.depot || b == in.g.depot) return 0.0;
        return prob[a] * prob[b] + (1.0 - prob[a]) * (1.0 - prob[b]);
    };

    while (live > target) {
        // argmax over live edges; ascending scan keeps the smallest edge id
        // on ties
        int bu = -1, bv = -1;
        double bq = 0.0;
        for (int u = 0; u < n; ++u) {
            if (!alive[u]) continue;
            for (const auto& [v, ed] : adj[u]) {
                if (v < u) continue;
                if (ed.q > bq) {
                    bq = ed.q;
                    bu = u;
                    bv = v;
                }
            }
        }
        if (bu < 0) break; // every remaining q is zero

        // merge the larger index into the smaller
        const int keep = bu, rem = bv;
        demands[keep] += demands[rem];
        groups[keep].insert(groups[keep].end(), groups[rem].begin(), groups[rem].end());
        adj[keep].erase(rem);
        for (const auto& [x, ed] : adj[rem]) {
            if (x == keep) continue;
            auto it = adj[keep].find(x);
            const double w = (it != adj[keep].end()) ? it->second.w + ed.w : ed.w;
            const EdgeData nd{w, edge_q(keep, x)};
            adj[keep][x] = nd;
            adj[x].erase(rem);
            adj[x][keep] = nd;
        }
        adj[rem].clear();
        alive[rem] = 0;
        --live;
    }

    // compact to a fresh graph, preserving relative vertex order (the depot
    // stays at index 0 since it is never merged away)
    std::vector<int> remap(n, -1);
    CoarseGraph out;
    out.level = in.level + 1;
    for (int v = 0; v < n; ++v) {
        if (!alive[v]) continue;
        remap[v] = out.g.num_vertices();
        out.g.demands.push_back(demands[v]);
        std::sort(groups[v].begin(), groups[v].end());
        out.groups.push_back(std::move(groups[v]));
    }
    out.g.depot = remap[in.g.depot];
    for (int u = 0; u < n; ++u) {
        if (!alive[u]) continue;
        for (const auto& [v, ed] : adj[u]) {
            if (v < u) continue;
            out.g.edges.push_back({remap[u], remap[v], ed.w});
        }
    }
    std::sort(out.g.edges.begin(), out.g.edges.end(),
              [](const WeightedGraph::Edge& a, const WeightedGraph::Edge& b) {
                  return a.u != b.u ? a.u < b.u : a.v < b.v;
              });
    return out;
}

/// Coarsest-graph set assignment followed by expansion through the mapping:
/// pick super-vertices with p above 1/2; when the threshold selects nothing,
/// fall back to the non-depot super-vertex with the largest p. The depot is
/// always excluded (its y is fixed to 0 in the separation problem; the
/// fallback argmax therefore also ranges over p of non-depot vertices only).
inline std::vector<int> assign_and_lift(const CoarseGraph& coarsest,
                                        const std::vector<double>& p) {
    const int n = coarsest.g.num_vertices();
    if (static_cast<int>(p.size()) != n)
        throw ValidationError("assign_and_lift: p does not match vertex count");
    std::vector<int> selected;
    for (int v = 0; v < n; ++v)
        if (v != coarsest.g.depot && p[v] > 0.5) selected.push_back(v);
    if (selected.empty()) {
        int best = -1;
        for (int v = 0; v < n; ++v) {
            if (v == coarsest.g.depot) continue;
            if (best < 0 || p[v] > p[best]) best = v;
        }
        if (best < 0) return {};
        selected.push_back(best);
    }
    return coarsest.expand(selected);
}

} // namespace capsep
