#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "capsep/errors.hpp"
#include "capsep/graph.hpp"
#include "capsep/instance.hpp"
#include "capsep/rci.hpp"

namespace capsep {

/// One instance of the exact separation problem: find the customer subset
/// with total demand > M*Q minimizing the crossing weight on the support
/// graph.
struct SeparationProblem {
    WeightedGraph graph;
    std::vector<long long> demands;
    long long capacity = 0;
    int m = 0;

    void validate() const {
        if (m < 0) throw ValidationError("separation: M must be nonnegative");
        long long total = 0;
        for (std::size_t v = 1; v < demands.size(); ++v) total += demands[v];
        if (static_cast<long long>(m) * capacity >= total)
            throw ValidationError("separation: M*Q >= total demand, no subset can qualify");
        if (demands.size() != static_cast<std::size_t>(graph.num_vertices()))
            throw ValidationError("separation: demand vector does not match graph");
    }
};

struct SeparationResult {
    std::vector<int> subset;   // optimal S*, sorted customer ids
    double z = 0.0;            // minimum crossing weight
    bool violated = false;     // z < 2(M+1) beyond the violation tolerance
    std::vector<char> labels;  // y*_i per vertex, depot forced 0
};

enum class SepMethod { Auto, Enumerate, BranchAndBound };

namespace detail {

// Lexicographic order on subsets read as ascending index sequences.
inline bool lex_less(const std::vector<int>& a, const std::vector<int>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

struct SepContext {
    int nc = 0;                       // customer count
    std::vector<int> customers;       // position -> vertex id
    std::vector<long long> demand;    // per position
    std::vector<std::vector<std::pair<int, double>>> adj; // position graph, -1 = depot
    long long need = 0;               // minimum qualifying demand: M*Q + 1

    explicit SepContext(const SeparationProblem& p) {
        const int n = p.graph.num_vertices();
        std::vector<int> pos(n, -1);
        for (int v = 0; v < n; ++v) {
            if (v == p.graph.depot) continue;
            pos[v] = static_cast<int>(customers.size());
            customers.push_back(v);
            demand.push_back(p.demands[v]);
        }
        nc = static_cast<int>(customers.size());
        adj.resize(nc);
        for (const auto& e : p.graph.edges) {
            const int pu = pos[e.u], pv = pos[e.v];
            if (pu >= 0 && pv >= 0) {
                adj[pu].emplace_back(pv, e.w);
                adj[pv].emplace_back(pu, e.w);
            } else if (pu >= 0) {
                adj[pu].emplace_back(-1, e.w);
            } else if (pv >= 0) {
                adj[pv].emplace_back(-1, e.w);
            }
        }
        need = static_cast<long long>(p.m) * p.capacity + 1;
    }

    double exact_crossing(const std::vector<char>& in_set) const {
        double z = 0.0;
        for (int v = 0; v < nc; ++v) {
            if (!in_set[v]) continue;
            for (const auto& [u, w] : adj[v])
                if (u == -1 || !in_set[u]) z += w;
        }
        return z;
    }

    std::vector<int> to_subset(const std::vector<char>& in_set) const {
        std::vector<int> s;
        for (int v = 0; v < nc; ++v)
            if (in_set[v]) s.push_back(customers[v]);
        std::sort(s.begin(), s.end());
        return s;
    }
};

struct Incumbent {
    double z = std::numeric_limits<double>::infinity();
    std::vector<int> subset;

    // Accept when strictly better, or tied within 1e-12 and lexicographically
    // smaller. Candidates must pass a from-scratch crossing weight so both
    // search strategies compare identical numbers.
    bool offer(double z_cand, std::vector<int> subset_cand) {
        if (z_cand < z - 1e-12 ||
            (std::abs(z_cand - z) <= 1e-12 && lex_less(subset_cand, subset))) {
            z = z_cand;
            subset = std::move(subset_cand);
            return true;
        }
        return false;
    }
};

inline void separate_enumerate(const SepContext& ctx, Incumbent& best) {
    const int nc = ctx.nc;
    std::vector<char> in_set(nc, 0);
    long long demand = 0;
    double crossing = 0.0;
    const std::uint64_t total = 1ULL << nc;
    // Gray-code walk: each step toggles one vertex and patches the running
    // crossing weight; a periodic rebuild keeps float drift out of the race.
    for (std::uint64_t it = 1; it < total; ++it) {
        const int v = std::countr_zero(it);
        const char newv = in_set[v] ? 0 : 1;
        for (const auto& [u, w] : ctx.adj[v]) {
            if (u == -1) { crossing += newv ? w : -w; continue; }
            crossing += (in_set[u] != newv) ? w : -w;
        }
        demand += newv ? ctx.demand[v] : -ctx.demand[v];
        in_set[v] = newv;
        if ((it & 0xfffULL) == 0) crossing = ctx.exact_crossing(in_set);
        if (demand < ctx.need) continue;
        if (crossing <= best.z + 1e-9)
            best.offer(ctx.exact_crossing(in_set), ctx.to_subset(in_set));
    }
}

struct BnbState {
    const SepContext& ctx;
    Incumbent& best;
    std::vector<char> decided, in_set;
    std::vector<double> w_in, w_out; // weight to decided-in / decided-out (incl depot)
    double crossing = 0.0;           // among decided pairs and depot
    double bound_extra = 0.0;        // sum of min(w_in, w_out) over undecided
    long long sel_demand = 0, rest_demand = 0;

    BnbState(const SepContext& c, Incumbent& b) : ctx(c), best(b) {
        const int nc = ctx.nc;
        decided.assign(nc, 0);
        in_set.assign(nc, 0);
        w_in.assign(nc, 0.0);
        w_out.assign(nc, 0.0);
        for (int v = 0; v < nc; ++v) {
            rest_demand += ctx.demand[v];
            for (const auto& [u, w] : ctx.adj[v])
                if (u == -1) w_out[v] += w; // depot is permanently out
            bound_extra += std::min(w_in[v], w_out[v]);
        }
    }

    void dfs(int v) {
        if (sel_demand + rest_demand < ctx.need) return; // cannot reach the demand floor
        if (crossing + bound_extra > best.z + 1e-12) return;
        if (v == ctx.nc) {
            if (sel_demand >= ctx.need)
                best.offer(ctx.exact_crossing(in_set), ctx.to_subset(in_set));
            return;
        }
        rest_demand -= ctx.demand[v];
        for (char side : {char(1), char(0)}) {
            decided[v] = 1;
            in_set[v] = side;
            const double cross_add = side ? w_out[v] : w_in[v];
            crossing += cross_add;
            bound_extra -= std::min(w_in[v], w_out[v]);
            if (side) sel_demand += ctx.demand[v];

            std::vector<std::pair<int, double>> touched;
            for (const auto& [u, w] : ctx.adj[v]) {
                if (u == -1 || decided[u]) continue;
                const double old_min = std::min(w_in[u], w_out[u]);
                if (side) w_in[u] += w; else w_out[u] += w;
                bound_extra += std::min(w_in[u], w_out[u]) - old_min;
                touched.emplace_back(u, w);
            }

            dfs(v + 1);

            for (const auto& [u, w] : touched) {
                const double old_min = std::min(w_in[u], w_out[u]);
                if (side) w_in[u] -= w; else w_out[u] -= w;
                bound_extra += std::min(w_in[u], w_out[u]) - old_min;
            }
            if (side) sel_demand -= ctx.demand[v];
            bound_extra += std::min(w_in[v], w_out[v]);
            crossing -= cross_add;
            decided[v] = 0;
            in_set[v] = 0;
        }
        rest_demand += ctx.demand[v];
    }
};

} // namespace detail

/// Globally optimal separation for one M. Ties in z break toward the
/// lexicographically smallest vertex set so labels are reproducible.
inline SeparationResult exact_separate(const SeparationProblem& problem,
                                       SepMethod method = SepMethod::Auto) {
    problem.validate();
    detail::SepContext ctx(problem);
    if (ctx.nc < 1) throw ValidationError("separation: graph has no customers");
    if (ctx.nc > 62) throw ValidationError("separation: graph too large for exact search");

    detail::Incumbent best;
    const bool enumerate =
        method == SepMethod::Enumerate || (method == SepMethod::Auto && ctx.nc <= 20);
    if (enumerate) {
        detail::separate_enumerate(ctx, best);
    } else {
        detail::BnbState state(ctx, best);
        state.dfs(0);
    }
    if (!std::isfinite(best.z)) throw InternalError("exact separation found no subset");

    SeparationResult res;
    res.subset = best.subset;
    res.z = best.z;
    res.violated = best.z < 2.0 * (problem.m + 1) - kViolationTol;
    res.labels.assign(problem.graph.num_vertices(), 0);
    for (int v : res.subset) res.labels[v] = 1;
    return res;
}

/// Optimal separation for every M in {0, ..., ceil(total demand / Q) - 1},
/// ascending.
inline std::vector<std::pair<int, SeparationResult>> exact_separate_all(
    const WeightedGraph& support, const CvrpInstance& inst,
    SepMethod method = SepMethod::Auto) {
    long long total = 0;
    for (int v = 1; v < inst.num_vertices(); ++v) total += inst.demands[v];
    const int m_count = static_cast<int>((total + inst.capacity - 1) / inst.capacity);
    std::vector<std::pair<int, SeparationResult>> out;
    out.reserve(m_count);
    for (int m = 0; m < m_count; ++m) {
        SeparationProblem p{support, inst.demands, inst.capacity, m};
        out.emplace_back(m, exact_separate(p, method));
    }
    return out;
}

} // namespace capsep
