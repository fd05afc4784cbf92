#pragma once

#include <array>
#include <string>
#include <vector>

#include "capsep/errors.hpp"
#include "capsep/graph.hpp"
#include "capsep/nn.hpp"

namespace capsep {

/// Learnable weights of the separation policy: feature encoders, five
/// non-shared rounds of edge/vertex update MLPs, and the probability head.
struct GnnParams {
    static constexpr int kLayers = 5;
    static constexpr int kEmbed = 32;

    nn::ParamStore store;
    nn::Mlp g_v, g_e, head;
    std::vector<nn::Mlp> f_e, f_v;

    GnnParams() {
        g_v = nn::make_mlp(store, "g_v", {2, 64, kEmbed}, nn::OutputAct::Identity);
        g_e = nn::make_mlp(store, "g_e", {1, 64, kEmbed}, nn::OutputAct::Identity);
        for (int l = 0; l < kLayers; ++l) {
            f_e.push_back(nn::make_mlp(store, "f_e" + std::to_string(l),
                                       {3 * kEmbed, 64, 32, kEmbed}, nn::OutputAct::Identity));
            f_v.push_back(nn::make_mlp(store, "f_v" + std::to_string(l),
                                       {2 * kEmbed, 64, 32, kEmbed}, nn::OutputAct::Identity));
        }
        head = nn::make_mlp(store, "pi", {kEmbed, 64, 32, 1}, nn::OutputAct::Sigmoid);
    }

    void init(std::uint64_t seed) { store.init_uniform(seed); }
};

/// A support graph dressed with the separation problem's features:
/// s_i = (d_i/Q, M/K) per vertex and s_ij = (x_ij) per edge.
struct FeaturedGraph {
    WeightedGraph graph;
    long long capacity = 1; // Q
    int vehicles = 1;       // K
    int m = 0;              // current demand-threshold index M

    std::array<double, 2> vertex_feature(int v) const {
        return {static_cast<double>(graph.demands[v]) / static_cast<double>(capacity),
                static_cast<double>(m) / static_cast<double>(vehicles)};
    }

    double edge_feature(std::size_t e) const { return graph.edges[e].w; }
};

inline FeaturedGraph make_featured(WeightedGraph graph, long long capacity, int vehicles, int m) {
    if (capacity <= 0) throw ValidationError("featured graph: capacity must be positive");
    if (vehicles <= 0) throw ValidationError("featured graph: vehicle count must be positive");
    return FeaturedGraph{std::move(graph), capacity, vehicles, m};
}

struct PredictResult {
    std::vector<double> p;     // probability per vertex, depot included
    std::vector<int> p_nodes;  // scalar tape nodes, for loss construction
};

/// Vertex selection probabilities via L rounds of message passing. The edge
/// update runs in both endpoint orders and averages, so the result is
/// equivariant under vertex relabeling.
inline PredictResult predict_on_tape(nn::Tape& tape, const GnnParams& params,
                                     const FeaturedGraph& fg) {
    const WeightedGraph& g = fg.graph;
    const int n = g.num_vertices();
    const int ne = static_cast<int>(g.edges.size());

    std::vector<int> h_v(n), h_e(ne);
    for (int v = 0; v < n; ++v) {
        const auto s = fg.vertex_feature(v);
        h_v[v] = nn::mlp_forward(tape, params.g_v, tape.input(s));
    }
    for (int e = 0; e < ne; ++e) {
        const double s = fg.edge_feature(static_cast<std::size_t>(e));
        h_e[e] = nn::mlp_forward(tape, params.g_e, tape.input(std::span<const double>(&s, 1)));
    }

    std::vector<std::vector<int>> incident(n);
    for (int e = 0; e < ne; ++e) {
        incident[g.edges[e].u].push_back(e);
        incident[g.edges[e].v].push_back(e);
    }

    std::vector<int> new_e(ne), msgs;
    for (int layer = 0; layer < GnnParams::kLayers; ++layer) {
        const auto& fe = params.f_e[static_cast<std::size_t>(layer)];
        const auto& fv = params.f_v[static_cast<std::size_t>(layer)];
        for (int e = 0; e < ne; ++e) {
            const int u = g.edges[e].u, v = g.edges[e].v;
            const int fwd = nn::mlp_forward(tape, fe, tape.concat({h_v[u], h_v[v], h_e[e]}));
            const int bwd = nn::mlp_forward(tape, fe, tape.concat({h_v[v], h_v[u], h_e[e]}));
            const std::array<int, 2> pair{fwd, bwd};
            new_e[e] = tape.mean(std::span<const int>(pair.data(), 2), GnnParams::kEmbed);
        }
        for (int v = 0; v < n; ++v) {
            msgs.clear();
            for (int e : incident[v]) msgs.push_back(new_e[e]);
            const int agg = tape.mean(msgs, GnnParams::kEmbed);
            h_v[v] = nn::mlp_forward(tape, fv, tape.concat({h_v[v], agg}));
        }
        h_e = new_e;
    }

    PredictResult out;
    out.p.resize(n);
    out.p_nodes.resize(n);
    for (int v = 0; v < n; ++v) {
        out.p_nodes[v] = nn::mlp_forward(tape, params.head, h_v[v]);
        out.p[v] = tape.scalar(out.p_nodes[v]);
    }
    return out;
}

inline std::vector<double> predict(const GnnParams& params, const FeaturedGraph& fg) {
    nn::Tape tape(params.store);
    return predict_on_tape(tape, params, fg).p;
}

} // namespace capsep
