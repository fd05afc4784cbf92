#pragma once

// Shared fixtures and random generators for the test suites.

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "capsep/graph.hpp"
#include "capsep/instance.hpp"
#include "capsep/lp.hpp"
#include "capsep/util.hpp"

namespace testsupport {

/// Depot + three customers, d = (60,60,60), Q = 100; support weights
/// x(0,i) = 1.0 and 0.5 on the customer triangle. z(0) = 2 at {1},
/// z(1) = 3 at {1,2}.
inline capsep::CvrpInstance triangle_instance() {
    capsep::CvrpInstance inst;
    inst.name = "triangle-fixture";
    inst.coords = {{0.5, 0.5}, {0.0, 0.0}, {1.0, 0.0}, {0.5, 1.0}};
    inst.demands = {0, 60, 60, 60};
    inst.capacity = 100;
    inst.vehicles = 2;
    inst.costs = capsep::detail::rounded_euclidean_costs(inst.coords, 1000.0);
    inst.validate();
    return inst;
}

inline capsep::WeightedGraph triangle_support() {
    capsep::WeightedGraph g;
    g.depot = 0;
    g.demands = {0, 60, 60, 60};
    g.edges = {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}, {1, 2, 0.5}, {1, 3, 0.5}, {2, 3, 0.5}};
    return g;
}

/// Integer solution of a route partition as an edge-value vector
/// (first ordering of each group).
inline std::vector<double> routes_to_x(const std::vector<std::vector<int>>& routes, int n) {
    const capsep::EdgeIndexer idx(n);
    std::vector<double> x(static_cast<std::size_t>(idx.count()), 0.0);
    for (const auto& r : routes) {
        if (r.size() == 1) {
            x[static_cast<std::size_t>(idx(0, r[0]))] += 2.0;
            continue;
        }
        int prev = 0;
        for (int v : r) {
            x[static_cast<std::size_t>(idx(prev, v))] += 1.0;
            prev = v;
        }
        x[static_cast<std::size_t>(idx(prev, 0))] += 1.0;
    }
    return x;
}

/// Random degree-feasible fractional point: a convex combination of integer
/// route solutions (customer degree rows hold exactly for each of them).
inline std::vector<double> random_degree_feasible(const capsep::CvrpInstance& inst,
                                                  std::mt19937_64& rng) {
    const int nc = inst.num_customers();
    const int n = inst.num_vertices();
    std::vector<double> x(static_cast<std::size_t>(capsep::EdgeIndexer(n).count()), 0.0);
    const int terms = 2 + static_cast<int>(rng() % 3);
    std::vector<double> weights(static_cast<std::size_t>(terms));
    double wsum = 0.0;
    for (auto& w : weights) {
        w = 0.1 + std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        wsum += w;
    }
    for (int t = 0; t < terms; ++t) {
        // random partition into routes, ignoring capacity (degree rows only)
        std::vector<int> customers(static_cast<std::size_t>(nc));
        for (int v = 1; v <= nc; ++v) customers[static_cast<std::size_t>(v - 1)] = v;
        std::shuffle(customers.begin(), customers.end(), rng);
        std::vector<std::vector<int>> routes;
        std::size_t at = 0;
        while (at < customers.size()) {
            const std::size_t len = 1 + rng() % 3;
            routes.emplace_back(customers.begin() + static_cast<long>(at),
                                customers.begin() + static_cast<long>(std::min(at + len, customers.size())));
            at += len;
        }
        const auto xi = routes_to_x(routes, n);
        for (std::size_t e = 0; e < x.size(); ++e)
            x[e] += weights[static_cast<std::size_t>(t)] / wsum * xi[e];
    }
    return x;
}

/// Random sparse support-like graph: a cycle through all vertices plus a few
/// chords, random positive weights, random demands.
inline capsep::WeightedGraph random_support_graph(int n, std::mt19937_64& rng,
                                                  long long max_demand = 100) {
    capsep::WeightedGraph g;
    g.depot = 0;
    g.demands.resize(static_cast<std::size_t>(n));
    g.demands[0] = 0;
    std::uniform_int_distribution<long long> dem(1, max_demand);
    for (int v = 1; v < n; ++v) g.demands[static_cast<std::size_t>(v)] = dem(rng);
    std::uniform_real_distribution<double> w(0.05, 1.0);
    std::set<std::pair<int, int>> used;
    auto add = [&](int u, int v) {
        if (u == v) return;
        if (u > v) std::swap(u, v);
        if (!used.insert({u, v}).second) return;
        g.edges.push_back({u, v, w(rng)});
    };
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) order[static_cast<std::size_t>(v)] = v;
    std::shuffle(order.begin() + 1, order.end(), rng);
    for (int i = 0; i < n; ++i) add(order[static_cast<std::size_t>(i)],
                                    order[static_cast<std::size_t>((i + 1) % n)]);
    const int chords = n / 2;
    for (int c = 0; c < chords; ++c)
        add(static_cast<int>(rng() % static_cast<std::uint64_t>(n)),
            static_cast<int>(rng() % static_cast<std::uint64_t>(n)));
    return g;
}

} // namespace testsupport
