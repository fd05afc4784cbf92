#pragma once

#include <algorithm>
#include <set>
#include <vector>

#include "capsep/coarsen.hpp"
#include "capsep/gnn.hpp"
#include "capsep/graph.hpp"
#include "capsep/instance.hpp"
#include "capsep/rci.hpp"

namespace capsep {

struct NeuralSeparationStats {
    std::vector<int> rounds_per_m; // coarsening rounds spent on each M
};

/// Learned separation: for each M, alternate prediction and gamma-coarsening
/// until at most three vertices remain (or no contractible edge, or the
/// round cap), assign the coarsest vertices, lift through the mapping, and
/// keep the subset when its RCI is violated. At most one candidate per M;
/// duplicates across M collapse.
inline std::vector<std::vector<int>> neural_separate(const WeightedGraph& support_augmented,
                                                     const std::vector<long long>& demands,
                                                     long long capacity, int vehicles,
                                                     const GnnParams& params,
                                                     double gamma = kGamma,
                                                     NeuralSeparationStats* stats = nullptr) {
    long long total = 0;
    for (std::size_t v = 0; v < demands.size(); ++v)
        if (static_cast<int>(v) != support_augmented.depot) total += demands[v];
    const int m_count = static_cast<int>((total + capacity - 1) / capacity);

    std::set<std::vector<int>> seen;
    std::vector<std::vector<int>> cuts;
    nn::Tape tape(params.store);

    for (int m = 0; m < m_count; ++m) {
        CoarseGraph cg = CoarseGraph::level0(support_augmented);
        tape.reset();
        std::vector<double> p =
            predict_on_tape(tape, params, make_featured(cg.g, capacity, vehicles, m)).p;

        int rounds = 0;
        while (cg.g.num_vertices() > 3 && rounds < kMaxCoarsenRounds) {
            const auto q = contraction_probs(p, cg.g);
            const bool contractible =
                std::any_of(q.begin(), q.end(), [](double v) { return v > 0.0; });
            if (!contractible) break;
            CoarseGraph next = gamma_coarsen(cg, q, gamma, p);
            if (next.g.num_vertices() == cg.g.num_vertices()) break;
            cg = std::move(next);
            ++rounds;
            tape.reset();
            p = predict_on_tape(tape, params, make_featured(cg.g, capacity, vehicles, m)).p;
        }
        if (stats) stats->rounds_per_m.push_back(rounds);

        std::vector<int> subset = assign_and_lift(cg, p);
        if (subset.empty()) continue;
        if (violation(subset, support_augmented, demands, capacity) <= kViolationTol) continue;
        if (seen.insert(subset).second) cuts.push_back(std::move(subset));
    }
    return cuts;
}

inline std::vector<std::vector<int>> neural_separate(const WeightedGraph& support_augmented,
                                                     const CvrpInstance& inst,
                                                     const GnnParams& params,
                                                     double gamma = kGamma,
                                                     NeuralSeparationStats* stats = nullptr) {
    return neural_separate(support_augmented, inst.demands, inst.capacity, inst.vehicles, params,
                           gamma, stats);
}

} // namespace capsep
