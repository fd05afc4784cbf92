#pragma once

// Exhaustive oracles over feasible integer CVRP solutions and RCI subsets,
// used to validate cuts and to compute the RCI closure bound.

#include <algorithm>
#include <functional>
#include <set>
#include <vector>

#include "capsep/instance.hpp"
#include "capsep/lp.hpp"
#include "capsep/rci.hpp"

namespace testsupport {

/// All partitions of the customers 1..n_C into capacity-feasible groups
/// (any number of vehicles -- the two-index formulation does not bound the
/// fleet).
inline std::vector<std::vector<std::vector<int>>> feasible_partitions(
    const capsep::CvrpInstance& inst) {
    std::vector<std::vector<std::vector<int>>> out;
    std::vector<std::vector<int>> groups;
    std::vector<long long> loads;
    const int nc = inst.num_customers();

    std::function<void(int)> rec = [&](int v) {
        if (v > nc) {
            out.push_back(groups);
            return;
        }
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (loads[g] + inst.demands[v] > inst.capacity) continue;
            groups[g].push_back(v);
            loads[g] += inst.demands[v];
            rec(v + 1);
            loads[g] -= inst.demands[v];
            groups[g].pop_back();
        }
        groups.push_back({v});
        loads.push_back(inst.demands[v]);
        rec(v + 1);
        groups.pop_back();
        loads.pop_back();
    };
    rec(1);
    return out;
}

/// Integer edge vectors of one partition: every cyclic ordering of every
/// group (singletons use the doubled depot edge). Grows fast; keep n small.
inline std::vector<std::vector<double>> partition_edge_vectors(
    const std::vector<std::vector<int>>& groups, const capsep::CvrpInstance& inst) {
    const capsep::EdgeIndexer idx(inst.num_vertices());
    std::vector<std::vector<double>> xs{std::vector<double>(idx.count(), 0.0)};
    for (const auto& g : groups) {
        std::vector<std::vector<double>> next;
        if (g.size() == 1) {
            for (auto x : xs) {
                x[idx(0, g[0])] += 2.0;
                next.push_back(std::move(x));
            }
        } else {
            std::vector<int> perm(g.begin() + 1, g.end());
            std::sort(perm.begin(), perm.end());
            do {
                // fix g[0] first to quotient out rotations; reflections just
                // repeat an edge set and are harmless here
                for (auto x : xs) {
                    int prev = 0;
                    x[idx(prev, g[0])] += 1.0;
                    prev = g[0];
                    for (int v : perm) {
                        x[idx(prev, v)] += 1.0;
                        prev = v;
                    }
                    x[idx(prev, 0)] += 1.0;
                    next.push_back(std::move(x));
                }
            } while (std::next_permutation(perm.begin(), perm.end()));
        }
        xs = std::move(next);
    }
    return xs;
}

/// Validity of a sparse row against every feasible integer solution, at the
/// partition level: a route contributes its minimum/maximum achievable
/// crossing, which for RCIs reduces to counting routes that touch S.
/// Exact for the crossing form; callers verify emitted rows on explicit
/// edge vectors separately (degree-feasible integer points make all three
/// forms agree).
inline bool rci_valid_all_partitions(const std::vector<int>& subset,
                                     const capsep::CvrpInstance& inst) {
    const int k = capsep::k_of_set(subset, inst.demands, inst.capacity);
    std::vector<char> in_set(static_cast<std::size_t>(inst.num_vertices()), 0);
    for (int v : subset) in_set[static_cast<std::size_t>(v)] = 1;
    for (const auto& partition : feasible_partitions(inst)) {
        int touching = 0;
        for (const auto& g : partition)
            if (std::any_of(g.begin(), g.end(),
                            [&](int v) { return in_set[static_cast<std::size_t>(v)]; }))
                ++touching;
        // min over orderings of x(delta(S)) is exactly 2 * touching routes
        if (2 * touching < 2 * k) return false;
    }
    return true;
}

/// All violated RCI subsets of a fractional solution, by full enumeration.
inline std::vector<std::vector<int>> all_violated_subsets(const capsep::RelaxedSolution& sol,
                                                          const capsep::CvrpInstance& inst) {
    const int nc = inst.num_customers();
    const capsep::EdgeIndexer idx(inst.num_vertices());
    std::vector<std::vector<int>> out;
    for (unsigned mask = 1; mask < (1u << nc); ++mask) {
        std::vector<int> s;
        for (int v = 1; v <= nc; ++v)
            if (mask & (1u << (v - 1))) s.push_back(v);
        const int k = capsep::k_of_set(s, inst.demands, inst.capacity);
        std::vector<char> in_set(static_cast<std::size_t>(inst.num_vertices()), 0);
        for (int v : s) in_set[static_cast<std::size_t>(v)] = 1;
        double crossing = 0.0;
        for (int i = 0; i < inst.num_vertices(); ++i)
            for (int j = i + 1; j < inst.num_vertices(); ++j)
                if (in_set[i] != in_set[j]) crossing += sol.x[idx(i, j)];
        if (2.0 * k - crossing > capsep::kViolationTol) out.push_back(std::move(s));
    }
    return out;
}

/// RCI closure bound: append every violated subset each round until none
/// remains.
inline double closure_bound(const capsep::CvrpInstance& inst, int max_rounds = 200) {
    capsep::LpModel model = capsep::build_relaxation(inst);
    double lb = 0.0;
    for (int round = 0; round < max_rounds; ++round) {
        const auto sol = model.solve();
        lb = sol.objective;
        const auto violated = all_violated_subsets(sol, inst);
        int added = 0;
        for (const auto& s : violated)
            if (model.append_cut(capsep::emit_rci(s, inst))) ++added;
        if (added == 0) return lb;
    }
    return lb;
}

} // namespace testsupport
