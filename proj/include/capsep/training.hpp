#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "capsep/coarsen.hpp"
#include "capsep/gnn.hpp"
#include "capsep/graph.hpp"
#include "capsep/instance.hpp"
#include "capsep/lp.hpp"
#include "capsep/neural_sep.hpp"
#include "capsep/nn.hpp"
#include "capsep/rci.hpp"
#include "capsep/sep_exact.hpp"
#include "capsep/util.hpp"

namespace capsep {

/// One imitation-learning sample: a support graph with the optimal vertex
/// labels of the exact separation problem for a single M.
struct LabeledSample {
    WeightedGraph graph; // raw support graph, weights = x values
    long long capacity = 0;
    int vehicles = 0;
    int m = 0;
    std::vector<char> labels; // y*_i per vertex, depot 0

    void validate() const {
        if (labels.size() != static_cast<std::size_t>(graph.num_vertices()))
            throw ValidationError("sample: label vector does not match graph");
        if (labels[static_cast<std::size_t>(graph.depot)] != 0)
            throw ValidationError("sample: depot label must be 0");
        long long sel = 0;
        for (int v = 0; v < graph.num_vertices(); ++v)
            if (labels[v]) sel += graph.demands[v];
        if (sel < static_cast<long long>(m) * capacity + 1)
            throw ValidationError("sample: labeled demand below the M threshold");
    }

    std::vector<int> label_subset() const {
        std::vector<int> s;
        for (int v = 0; v < graph.num_vertices(); ++v)
            if (labels[v]) s.push_back(v);
        return s;
    }
};

inline bool operator==(const WeightedGraph::Edge& a, const WeightedGraph::Edge& b) {
    return a.u == b.u && a.v == b.v && a.w == b.w;
}

inline bool operator==(const LabeledSample& a, const LabeledSample& b) {
    return a.graph.depot == b.graph.depot && a.graph.demands == b.graph.demands &&
           a.graph.edges == b.graph.edges && a.capacity == b.capacity &&
           a.vehicles == b.vehicles && a.m == b.m && a.labels == b.labels;
}

/// Samples grouped conceptually by M; stored flat in collection order.
struct Dataset {
    std::vector<LabeledSample> samples;

    bool empty() const { return samples.empty(); }
    std::size_t size() const { return samples.size(); }

    int max_m() const {
        int m = -1;
        for (const auto& s : samples) m = std::max(m, s.m);
        return m;
    }

    std::map<int, std::vector<const LabeledSample*>> by_m() const {
        std::map<int, std::vector<const LabeledSample*>> groups;
        for (const auto& s : samples) groups[s.m].push_back(&s);
        return groups;
    }
};

inline bool operator==(const Dataset& a, const Dataset& b) { return a.samples == b.samples; }

/// Positive-class weight of one D_M: (# zero labels) / (# one labels) over
/// all vertices of all samples. All-positive groups degenerate to 1.
inline double positive_weight(const std::vector<const LabeledSample*>& group) {
    long long pos = 0, neg = 0;
    for (const auto* s : group)
        for (char y : s->labels) (y ? pos : neg) += 1;
    if (pos == 0) throw ValueError("positive_weight: D_M has no positive labels");
    if (neg == 0) return 1.0; // degenerate all-ones group
    return static_cast<double>(neg) / static_cast<double>(pos);
}

struct CollectLimits {
    int max_iter = 50;
    double sep_time_limit_s = std::numeric_limits<double>::infinity();
    SepMethod method = SepMethod::Auto;
    int max_customers = 40; // guard for the exponential exact separator
};

/// Exact labels for every M of one support graph.
inline std::vector<LabeledSample> labels_for_support(const WeightedGraph& support,
                                                     const CvrpInstance& inst,
                                                     SepMethod method = SepMethod::Auto) {
    std::vector<LabeledSample> out;
    for (const auto& [m, res] : exact_separate_all(support, inst, method)) {
        LabeledSample s;
        s.graph = support;
        s.capacity = inst.capacity;
        s.vehicles = inst.vehicles;
        s.m = m;
        s.labels = res.labels;
        s.validate();
        out.push_back(std::move(s));
    }
    return out;
}

/// Run the cutting-plane loop with the exact separator on each instance and
/// record one sample per M at every iteration, non-violated optima included.
inline Dataset collect_labels(const std::vector<CvrpInstance>& instances,
                              const CollectLimits& limits = {}) {
    Dataset ds;
    for (const auto& inst : instances) {
        if (inst.num_customers() > limits.max_customers)
            throw ValidationError("collect_labels: instance too large for exact separation");
        LpModel model = build_relaxation(inst);
        for (int iter = 0; iter < limits.max_iter; ++iter) {
            const RelaxedSolution sol = model.solve();
            const WeightedGraph support = support_graph(sol, inst, false);

            const auto t0 = std::chrono::steady_clock::now();
            std::vector<std::pair<int, SeparationResult>> results;
            bool timed_out = false;
            const long long total = [&] {
                long long t = 0;
                for (int v = 1; v < inst.num_vertices(); ++v) t += inst.demands[v];
                return t;
            }();
            const int m_count =
                static_cast<int>((total + inst.capacity - 1) / inst.capacity);
            for (int m = 0; m < m_count; ++m) {
                const double elapsed =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                if (elapsed > limits.sep_time_limit_s) {
                    std::cerr << "[capsep] warning: separation time limit hit on " << inst.name
                              << " (M=" << m << "), skipping remaining samples\n";
                    timed_out = true;
                    break;
                }
                SeparationProblem p{support, inst.demands, inst.capacity, m};
                results.emplace_back(m, exact_separate(p, limits.method));
            }

            int added = 0;
            for (const auto& [m, res] : results) {
                LabeledSample s;
                s.graph = support;
                s.capacity = inst.capacity;
                s.vehicles = inst.vehicles;
                s.m = m;
                s.labels = res.labels;
                s.validate();
                ds.samples.push_back(std::move(s));
                if (res.violated && model.append_cut(emit_rci(res.subset, inst))) ++added;
            }
            if (added == 0 || timed_out) break;
        }
    }
    return ds;
}

/// Teacher-forced coarsening step: q from the labels themselves, so
/// label-crossing edges are never contracted and every super-vertex carries
/// a well-defined label.
struct TeacherLevel {
    CoarseGraph cg;
    std::vector<char> labels; // per super-vertex
};

inline std::vector<double> labels_as_probs(const std::vector<char>& labels) {
    std::vector<double> p(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) p[i] = labels[i] ? 1.0 : 0.0;
    return p;
}

inline std::vector<char> carry_labels(const CoarseGraph& cg, const std::vector<char>& labels0) {
    std::vector<char> out(static_cast<std::size_t>(cg.g.num_vertices()));
    for (int v = 0; v < cg.g.num_vertices(); ++v) {
        const auto& grp = cg.groups[static_cast<std::size_t>(v)];
        const char y = labels0[static_cast<std::size_t>(grp.front())];
        for (int orig : grp)
            if (labels0[static_cast<std::size_t>(orig)] != y)
                throw InternalError("teacher coarsening merged mixed labels");
        out[static_cast<std::size_t>(v)] = y;
    }
    return out;
}

/// True when another teacher-forced round is possible (some q is positive).
inline bool teacher_can_coarsen(const TeacherLevel& lvl) {
    if (lvl.cg.g.num_vertices() <= 3) return false;
    const auto q = contraction_probs(labels_as_probs(lvl.labels), lvl.cg.g);
    return std::any_of(q.begin(), q.end(), [](double v) { return v > 0.0; });
}

inline TeacherLevel teacher_coarsen(const TeacherLevel& lvl, const std::vector<char>& labels0,
                                    double gamma) {
    const auto plike = labels_as_probs(lvl.labels);
    const auto q = contraction_probs(plike, lvl.cg.g);
    TeacherLevel next;
    next.cg = gamma_coarsen(lvl.cg, q, gamma, plike);
    next.labels = carry_labels(next.cg, labels0);
    return next;
}

/// Coarsen a labeled sample all the way down under teacher forcing and lift
/// the label-selected set back to the original vertices.
inline std::vector<int> teacher_forced_lift(const LabeledSample& sample, double gamma = kGamma) {
    TeacherLevel lvl{CoarseGraph::level0(augment_through_depot(sample.graph)), sample.labels};
    while (teacher_can_coarsen(lvl)) lvl = teacher_coarsen(lvl, sample.labels, gamma);
    std::vector<int> supers;
    for (int v = 0; v < lvl.cg.g.num_vertices(); ++v)
        if (lvl.labels[static_cast<std::size_t>(v)]) supers.push_back(v);
    return lvl.cg.expand(supers);
}

struct TrainConfig {
    int epochs = 20;
    int batch_size = 16;
    double gamma = kGamma;
    double learning_rate = 5e-4;
    int schedule_period = 32;
    std::uint64_t seed = 0;
    bool drop_nonviolated = false;
    std::string checkpoint_prefix; // when nonempty, write one checkpoint per epoch
    unsigned threads = 2;
};

struct TrainResult {
    GnnParams params;
    std::vector<double> epoch_loss; // mean optimizer-step loss per epoch
};

/// Imitation training: per batch and per coarsening level, predict on every
/// active graph, take one Adam step on the M-weighted positive-weight BCE,
/// then coarsen each graph teacher-forced until it bottoms out.
inline TrainResult train(const Dataset& dataset, const TrainConfig& cfg = {}) {
    if (dataset.empty()) throw ValidationError("train: empty dataset");

    // Dataset-level weights: w_M = |D_M| / sum |D_m| and the positive weight
    // rho_M. Groups without positive labels are dropped with a warning.
    std::map<int, double> rho, w_m;
    std::vector<int> usable;
    {
        const auto groups = dataset.by_m();
        std::size_t total = 0;
        for (const auto& [m, group] : groups) {
            try {
                rho[m] = positive_weight(group);
                w_m[m] = static_cast<double>(group.size());
                total += group.size();
            } catch (const ValueError&) {
                std::cerr << "[capsep] warning: D_" << m
                          << " has no positive labels and is dropped from training\n";
            }
        }
        if (total == 0) throw ValidationError("train: no usable samples");
        for (auto& [m, w] : w_m) w /= static_cast<double>(total);
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            const auto& s = dataset.samples[i];
            if (!w_m.count(s.m)) continue;
            if (cfg.drop_nonviolated) {
                const double z = s.graph.crossing_weight(s.label_subset());
                if (z >= 2.0 * (s.m + 1) - kViolationTol) continue;
            }
            usable.push_back(static_cast<int>(i));
        }
        if (usable.empty()) throw ValidationError("train: no usable samples after filtering");
    }

    TrainResult result;
    result.params.init(cfg.seed);
    nn::AdamState adam(result.params.store.size(), cfg.learning_rate, cfg.schedule_period);

    struct Slot {
        TeacherLevel lvl;
        const LabeledSample* sample = nullptr;
        bool active = false;
        double loss = 0.0;
        int n_vertices = 0;
    };
    std::vector<Slot> slots(static_cast<std::size_t>(cfg.batch_size));
    std::vector<nn::Tape> tapes;
    tapes.reserve(slots.size());
    for (std::size_t i = 0; i < slots.size(); ++i) tapes.emplace_back(result.params.store);

    std::mt19937_64 shuffle_rng(splitmix64(cfg.seed ^ 0x5e11ULL));
    std::vector<double> grad(static_cast<std::size_t>(result.params.store.size()));

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<int> order = usable;
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double epoch_loss_sum = 0.0;
        long epoch_steps = 0;

        for (std::size_t at = 0; at < order.size(); at += slots.size()) {
            const std::size_t count = std::min(slots.size(), order.size() - at);
            for (std::size_t k = 0; k < count; ++k) {
                Slot& s = slots[k];
                s.sample = &dataset.samples[static_cast<std::size_t>(order[at + k])];
                s.lvl = TeacherLevel{
                    CoarseGraph::level0(augment_through_depot(s.sample->graph)),
                    s.sample->labels};
                s.active = true;
            }
            for (std::size_t k = count; k < slots.size(); ++k) slots[k].active = false;

            while (std::any_of(slots.begin(), slots.end(),
                               [](const Slot& s) { return s.active; })) {
                // forward + backward per active sample, independent tapes
                parallel_for(
                    static_cast<int>(count),
                    [&](int k) {
                        Slot& s = slots[static_cast<std::size_t>(k)];
                        if (!s.active) return;
                        nn::Tape& tape = tapes[static_cast<std::size_t>(k)];
                        tape.reset();
                        tape.zero_param_grads();
                        const auto pred = predict_on_tape(
                            tape, result.params,
                            make_featured(s.lvl.cg.g, s.sample->capacity, s.sample->vehicles,
                                          s.sample->m));
                        const int loss =
                            tape.bce_sum(pred.p_nodes, s.lvl.labels, rho.at(s.sample->m));
                        tape.backward(loss);
                        s.loss = tape.scalar(loss);
                        s.n_vertices = s.lvl.cg.g.num_vertices();
                    },
                    cfg.threads);

                // combine: mean over vertices within each M group of the batch,
                // M groups weighted by w_M; reduction order fixed by slot index
                std::map<int, long> nv_m;
                for (std::size_t k = 0; k < count; ++k)
                    if (slots[k].active) nv_m[slots[k].sample->m] += slots[k].n_vertices;
                std::fill(grad.begin(), grad.end(), 0.0);
                double step_loss = 0.0;
                for (std::size_t k = 0; k < count; ++k) {
                    const Slot& s = slots[k];
                    if (!s.active) continue;
                    const double scale =
                        w_m.at(s.sample->m) / static_cast<double>(nv_m.at(s.sample->m));
                    step_loss += scale * s.loss;
                    const auto& g = tapes[k].param_grads();
                    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += scale * g[i];
                }
                adam.apply(result.params.store, grad);
                epoch_loss_sum += step_loss;
                ++epoch_steps;

                // teacher-forced coarsening; a sample retires once it cannot
                // shrink further
                for (std::size_t k = 0; k < count; ++k) {
                    Slot& s = slots[k];
                    if (!s.active) continue;
                    if (!teacher_can_coarsen(s.lvl)) {
                        s.active = false;
                        continue;
                    }
                    s.lvl = teacher_coarsen(s.lvl, s.sample->labels, cfg.gamma);
                }
            }
        }

        result.epoch_loss.push_back(epoch_loss_sum / static_cast<double>(epoch_steps));
        if (!cfg.checkpoint_prefix.empty()) {
            const std::string path =
                cfg.checkpoint_prefix + ".epoch" + std::to_string(epoch + 1) + ".json";
            nn::save_checkpoint_file(result.params.store, path);
        }
    }
    return result;
}

// ---- dataset persistence: versioned JSON-lines -----------------------------

inline void save_dataset(const Dataset& ds, std::ostream& out) {
    nlohmann::json header;
    header["format"] = "capsep-dataset";
    header["version"] = 1;
    out << header.dump() << "\n";
    for (const auto& s : ds.samples) {
        nlohmann::json j;
        auto edges = nlohmann::json::array();
        for (const auto& e : s.graph.edges) edges.push_back({e.u, e.v, e.w});
        j["edges"] = std::move(edges);
        j["demands"] = s.graph.demands;
        j["depot"] = s.graph.depot;
        j["capacity"] = s.capacity;
        j["vehicles"] = s.vehicles;
        j["m"] = s.m;
        std::vector<int> labels(s.labels.begin(), s.labels.end());
        j["labels"] = labels;
        out << j.dump() << "\n";
    }
}

inline Dataset load_dataset(std::istream& in) {
    Dataset ds;
    std::string line;
    long line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("dataset line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!saw_header) {
            if (j.value("format", "") != "capsep-dataset" || j.value("version", 0) != 1)
                throw FormatError("dataset line 1: bad header");
            saw_header = true;
            continue;
        }
        try {
            LabeledSample s;
            s.graph.depot = j.at("depot").get<int>();
            s.graph.demands = j.at("demands").get<std::vector<long long>>();
            for (const auto& e : j.at("edges"))
                s.graph.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>(),
                                         e.at(2).get<double>()});
            s.capacity = j.at("capacity").get<long long>();
            s.vehicles = j.at("vehicles").get<int>();
            s.m = j.at("m").get<int>();
            for (int y : j.at("labels").get<std::vector<int>>())
                s.labels.push_back(static_cast<char>(y));
            s.validate();
            ds.samples.push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("dataset line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!saw_header && line_no > 0)
        throw FormatError("dataset line 1: bad header");
    return ds;
}

inline void save_dataset_file(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write dataset " + path);
    save_dataset(ds, out);
}

inline Dataset load_dataset_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read dataset " + path);
    return load_dataset(in);
}

} // namespace capsep
