#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "capsep/errors.hpp"
#include "capsep/graph.hpp"
#include "capsep/instance.hpp"
#include "capsep/util.hpp"

namespace capsep {

/// Sparse LP row: coefficients over edge-variable indices.
struct SparseRow {
    std::vector<std::pair<int, double>> coef; // (edge index, coefficient)
    char sense = 'L';                         // 'L' (<=) or 'G' (>=)
    double rhs = 0.0;

    double activity(const std::vector<double>& x) const {
        double a = 0.0;
        for (const auto& [e, c] : coef) a += c * x[e];
        return a;
    }

    /// rhs - activity for 'L', activity - rhs for 'G'; negative = violated.
    double slack(const std::vector<double>& x) const {
        const double a = activity(x);
        return sense == 'L' ? rhs - a : a - rhs;
    }
};

enum class RciForm { EdgesInside, Crossing, Complement };

/// A rounded capacity inequality on customer subset S, stored with the row
/// form chosen for emission.
struct Rci {
    std::vector<int> subset; // sorted customer ids
    int k = 0;               // k(S)
    RciForm form = RciForm::EdgesInside;
    SparseRow row;
};

namespace detail {

inline std::vector<char> subset_mask(const std::vector<int>& subset, int n) {
    std::vector<char> mask(n, 0);
    for (int v : subset) {
        if (v <= 0 || v >= n) throw ValidationError("subset contains non-customer vertex");
        mask[v] = 1;
    }
    return mask;
}

} // namespace detail

/// Row x(S:S) <= |S| - k(S).
inline SparseRow rci_row_edges_inside(const std::vector<int>& subset, int k, int n_vertices) {
    const EdgeIndexer idx(n_vertices);
    SparseRow row;
    row.sense = 'L';
    row.rhs = static_cast<double>(subset.size()) - k;
    for (std::size_t a = 0; a < subset.size(); ++a)
        for (std::size_t b = a + 1; b < subset.size(); ++b)
            row.coef.emplace_back(idx(subset[a], subset[b]), 1.0);
    std::sort(row.coef.begin(), row.coef.end());
    return row;
}

/// Row x(delta(S)) >= 2 k(S).
inline SparseRow rci_row_crossing(const std::vector<int>& subset, int k, int n_vertices) {
    const EdgeIndexer idx(n_vertices);
    const auto mask = detail::subset_mask(subset, n_vertices);
    SparseRow row;
    row.sense = 'G';
    row.rhs = 2.0 * k;
    for (int v : subset)
        for (int u = 0; u < n_vertices; ++u)
            if (!mask[u]) row.coef.emplace_back(idx(u, v), 1.0);
    std::sort(row.coef.begin(), row.coef.end());
    return row;
}

/// Row x(C:C) + x({0}:C)/2 - x({0}:S)/2 <= |C| - k(S), C = V_C \ S.
inline SparseRow rci_row_complement(const std::vector<int>& subset, int k, int n_vertices) {
    const EdgeIndexer idx(n_vertices);
    const auto mask = detail::subset_mask(subset, n_vertices);
    std::vector<int> complement;
    for (int v = 1; v < n_vertices; ++v)
        if (!mask[v]) complement.push_back(v);

    SparseRow row;
    row.sense = 'L';
    row.rhs = static_cast<double>(complement.size()) - k;
    for (std::size_t a = 0; a < complement.size(); ++a)
        for (std::size_t b = a + 1; b < complement.size(); ++b)
            row.coef.emplace_back(idx(complement[a], complement[b]), 1.0);
    for (int v : complement) row.coef.emplace_back(idx(0, v), 0.5);
    for (int v : subset) row.coef.emplace_back(idx(0, v), -0.5);
    std::sort(row.coef.begin(), row.coef.end());
    return row;
}

/// Build the RCI for S, picking the sparse form: edges-inside when
/// |S| <= |V|/2, complement otherwise. The crossing form stays available
/// through rci_row_crossing for violation reporting.
inline Rci emit_rci(const std::vector<int>& subset_in, const CvrpInstance& inst) {
    if (subset_in.empty()) throw ValidationError("emit_rci: empty subset");
    Rci rci;
    rci.subset = subset_in;
    std::sort(rci.subset.begin(), rci.subset.end());
    rci.k = k_of_set(rci.subset, inst.demands, inst.capacity);
    const int n = inst.num_vertices();
    if (2 * static_cast<int>(rci.subset.size()) <= n) {
        rci.form = RciForm::EdgesInside;
        rci.row = rci_row_edges_inside(rci.subset, rci.k, n);
    } else {
        rci.form = RciForm::Complement;
        rci.row = rci_row_complement(rci.subset, rci.k, n);
    }
    return rci;
}

/// 2 k(S) - x(delta(S)) on a support graph; positive iff the RCI is violated.
inline double violation(const std::vector<int>& subset, const WeightedGraph& support,
                        const std::vector<long long>& demands, long long capacity) {
    if (subset.empty()) throw ValidationError("violation: empty subset");
    const int k = k_of_set(subset, demands, capacity);
    return 2.0 * k - support.crossing_weight(subset);
}

/// Cuts below this violation are treated as numerically null.
inline constexpr double kViolationTol = 1e-4;

} // namespace capsep
