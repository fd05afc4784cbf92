#pragma once

#include <algorithm>
#include <chrono>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "capsep/errors.hpp"
#include "capsep/instance.hpp"
#include "capsep/lp.hpp"
#include "capsep/neural_sep.hpp"
#include "capsep/rci.hpp"
#include "capsep/sep_baseline.hpp"
#include "capsep/sep_exact.hpp"
#include "capsep/training.hpp"
#include "capsep/util.hpp"

namespace capsep {

enum class SeparatorKind { Exact, Components, Greedy, Neural };

inline const char* to_string(SeparatorKind k) {
    switch (k) {
        case SeparatorKind::Exact: return "exact";
        case SeparatorKind::Components: return "components";
        case SeparatorKind::Greedy: return "greedy";
        case SeparatorKind::Neural: return "neural";
    }
    return "?";
}

inline SeparatorKind separator_from_string(const std::string& s) {
    if (s == "exact") return SeparatorKind::Exact;
    if (s == "components") return SeparatorKind::Components;
    if (s == "greedy") return SeparatorKind::Greedy;
    if (s == "neural") return SeparatorKind::Neural;
    throw ValidationError("unknown separator '" + s + "'");
}

struct SeparatorConfig {
    SeparatorKind kind = SeparatorKind::Exact;
    const GnnParams* params = nullptr; // required for Neural
    SepMethod exact_method = SepMethod::Auto;
    double gamma = kGamma;
};

struct RunLimits {
    int max_iter = -1; // negative: size-bucketed default
    double time_limit_s = std::numeric_limits<double>::infinity();

    RunLimits() = default;
    explicit RunLimits(int iters, double tl = std::numeric_limits<double>::infinity())
        : max_iter(iters), time_limit_s(tl) {}
};

/// Size-bucketed iteration caps used when the caller does not override.
inline int default_max_iter(int n_customers) {
    if (n_customers < 300) return 200;
    if (n_customers <= 500) return 100;
    return 50;
}

struct TraceRecord {
    int iteration = 0;
    double lb = 0.0;
    int cuts_added = 0;
    double sep_time_s = 0.0;
    long lp_pivots = 0;
};

struct RunTrace {
    std::vector<TraceRecord> records;
    double final_lb = 0.0;
    std::string termination; // no-cuts | iteration-limit | time-limit
};

/// Violated subsets proposed by one separator backend on one support graph.
inline std::vector<std::vector<int>> run_separator(const SeparatorConfig& sep,
                                                   const RelaxedSolution& sol,
                                                   const CvrpInstance& inst) {
    const int cut_cap = std::min(inst.num_vertices(), 100); // baseline per-iteration cap
    switch (sep.kind) {
        case SeparatorKind::Exact: {
            const WeightedGraph support = support_graph(sol, inst, false);
            std::vector<std::vector<int>> subsets;
            for (const auto& [m, res] : exact_separate_all(support, inst, sep.exact_method))
                if (res.violated) subsets.push_back(res.subset);
            std::sort(subsets.begin(), subsets.end());
            subsets.erase(std::unique(subsets.begin(), subsets.end()), subsets.end());
            return subsets;
        }
        case SeparatorKind::Components: {
            const WeightedGraph support = support_graph(sol, inst, false);
            auto subsets = connected_components_separate(support, inst);
            if (static_cast<int>(subsets.size()) > cut_cap) subsets.resize(cut_cap);
            return subsets;
        }
        case SeparatorKind::Greedy: {
            const WeightedGraph support = support_graph(sol, inst, false);
            long long total = 0;
            for (int v = 1; v < inst.num_vertices(); ++v) total += inst.demands[v];
            const int m_count = static_cast<int>((total + inst.capacity - 1) / inst.capacity);
            std::set<std::vector<int>> seen;
            std::vector<std::vector<int>> subsets;
            for (int m = 0; m < m_count && static_cast<int>(subsets.size()) < cut_cap; ++m) {
                auto s = greedy_separate(support, inst, m);
                if (s && seen.insert(*s).second) subsets.push_back(std::move(*s));
            }
            return subsets;
        }
        case SeparatorKind::Neural: {
            if (!sep.params) throw ValidationError("neural separator needs parameters");
            const WeightedGraph support = support_graph(sol, inst, true);
            return neural_separate(support, inst, *sep.params, sep.gamma);
        }
    }
    throw InternalError("unreachable separator kind");
}

/// The cutting-plane driver: solve, separate, append, repeat until the
/// separator comes up empty or a limit hits. When keep_model is given it
/// receives the final model (degree rows plus the whole cut pool), e.g. for
/// LP export.
inline RunTrace cutting_plane(const CvrpInstance& inst, const SeparatorConfig& sep,
                              const RunLimits& limits, LpModel* keep_model = nullptr) {
    inst.validate();
    const int max_iter =
        limits.max_iter >= 0 ? limits.max_iter : default_max_iter(inst.num_customers());
    LpModel model = build_relaxation(inst);
    RunTrace trace;
    const auto t_start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    };

    double prev_lb = -std::numeric_limits<double>::infinity();
    for (int iter = 0;; ++iter) {
        const RelaxedSolution sol = model.solve();
        if (sol.objective < prev_lb - 1e-6)
            throw InternalError("lower bound regressed between iterations");
        prev_lb = sol.objective;

        TraceRecord rec;
        rec.iteration = iter;
        rec.lb = sol.objective;
        rec.lp_pivots = sol.iterations;

        if (iter >= max_iter) {
            trace.records.push_back(rec);
            trace.termination = "iteration-limit";
            break;
        }

        const auto t_sep = std::chrono::steady_clock::now();
        const auto subsets = run_separator(sep, sol, inst);
        rec.sep_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_sep).count();

        int added = 0;
        for (const auto& s : subsets)
            if (model.append_cut(emit_rci(s, inst))) ++added;
        rec.cuts_added = added;
        trace.records.push_back(rec);

        if (added == 0) {
            trace.termination = "no-cuts";
            break;
        }
        if (elapsed() > limits.time_limit_s) {
            trace.termination = "time-limit";
            break;
        }
    }
    trace.final_lb = trace.records.back().lb;
    if (keep_model) *keep_model = std::move(model);
    return trace;
}

/// Optimality gap (UB - LB) / UB * 100.
inline double gap(double ub, double lb) {
    if (ub <= 0.0) throw ValidationError("gap: UB must be positive");
    if (lb > ub + 1e-6) throw ValidationError("gap: LB exceeds UB");
    return (ub - lb) / ub * 100.0;
}

// ---- separation benchmarking on recorded support graphs --------------------

/// A recorded support graph with its demand context, ready to feed any
/// separator.
struct SupportCase {
    WeightedGraph graph;
    long long capacity = 0;
    int vehicles = 0;
};

/// Distinct support graphs of a labeled dataset, in collection order
/// (adjacent samples sharing a graph collapse to one case).
inline std::vector<SupportCase> support_cases(const Dataset& ds) {
    std::vector<SupportCase> cases;
    for (const auto& s : ds.samples) {
        if (!cases.empty()) {
            const auto& prev = cases.back();
            if (prev.capacity == s.capacity && prev.graph.demands == s.graph.demands &&
                prev.graph.edges == s.graph.edges)
                continue;
        }
        cases.push_back({s.graph, s.capacity, s.vehicles});
    }
    return cases;
}

struct SeparationMetrics {
    double avg_violation = 0.0; // mean over emitted (violated) cuts
    long cut_count = 0;
    double success_rate = 0.0;  // cases with at least one violated cut
};

inline SeparationMetrics separation_metrics(const std::vector<SupportCase>& cases,
                                            const SeparatorConfig& sep) {
    SeparationMetrics out;
    long successes = 0;
    double viol_sum = 0.0;
    for (const auto& c : cases) {
        std::vector<std::vector<int>> subsets;
        const long long total = c.graph.total_demand();
        const int m_count = static_cast<int>((total + c.capacity - 1) / c.capacity);
        switch (sep.kind) {
            case SeparatorKind::Exact: {
                for (int m = 0; m < m_count; ++m) {
                    SeparationProblem p{c.graph, c.graph.demands, c.capacity, m};
                    const auto res = exact_separate(p, sep.exact_method);
                    if (res.violated) subsets.push_back(res.subset);
                }
                break;
            }
            case SeparatorKind::Components: {
                subsets = connected_components_separate(c.graph, c.graph.demands, c.capacity);
                break;
            }
            case SeparatorKind::Greedy: {
                std::set<std::vector<int>> seen;
                for (int m = 0; m < m_count; ++m) {
                    auto s = greedy_separate(c.graph, c.graph.demands, c.capacity, m);
                    if (s && seen.insert(*s).second) subsets.push_back(std::move(*s));
                }
                break;
            }
            case SeparatorKind::Neural: {
                if (!sep.params) throw ValidationError("neural separator needs parameters");
                subsets = neural_separate(augment_through_depot(c.graph), c.graph.demands,
                                          c.capacity, c.vehicles, *sep.params, sep.gamma);
                break;
            }
        }
        std::sort(subsets.begin(), subsets.end());
        subsets.erase(std::unique(subsets.begin(), subsets.end()), subsets.end());
        if (!subsets.empty()) ++successes;
        for (const auto& s : subsets)
            viol_sum += violation(s, c.graph, c.graph.demands, c.capacity);
        out.cut_count += static_cast<long>(subsets.size());
    }
    out.avg_violation = out.cut_count > 0 ? viol_sum / static_cast<double>(out.cut_count) : 0.0;
    out.success_rate =
        cases.empty() ? 0.0 : static_cast<double>(successes) / static_cast<double>(cases.size());
    return out;
}

// ---- file formats -----------------------------------------------------------

inline void write_trace_csv(const RunTrace& trace, std::ostream& out) {
    out << "iteration,lb,cuts_added,sep_time_s,lp_pivots\n";
    out.precision(std::numeric_limits<double>::max_digits10);
    for (const auto& r : trace.records)
        out << r.iteration << "," << r.lb << "," << r.cuts_added << "," << r.sep_time_s << ","
            << r.lp_pivots << "\n";
}

inline RunTrace parse_trace_csv(std::istream& in) {
    RunTrace trace;
    std::string line;
    if (!std::getline(in, line) || line != "iteration,lb,cuts_added,sep_time_s,lp_pivots")
        throw FormatError("trace csv: bad header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        TraceRecord r;
        char c1, c2, c3, c4;
        std::istringstream row(line);
        if (!(row >> r.iteration >> c1 >> r.lb >> c2 >> r.cuts_added >> c3 >> r.sep_time_s >>
              c4 >> r.lp_pivots) ||
            c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',')
            throw FormatError("trace csv: bad row '" + line + "'");
        trace.records.push_back(r);
    }
    if (!trace.records.empty()) trace.final_lb = trace.records.back().lb;
    return trace;
}

/// UB file: one "name,value" pair per line.
inline std::map<std::string, double> load_ub_file(std::istream& in) {
    std::map<std::string, double> ubs;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw FormatError("ub file line " + std::to_string(line_no) + ": expected name,value");
        try {
            ubs[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
        } catch (const std::exception&) {
            throw FormatError("ub file line " + std::to_string(line_no) + ": bad value");
        }
    }
    return ubs;
}

struct SummaryRow {
    std::string instance;
    int n = 0, k = 0;
    std::string separator;
    double final_lb = 0.0;
    double gap_pct = -1.0; // negative = no UB known
    int iterations = 0;
    double wall_s = 0.0;
    std::string termination;
};

inline void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out) {
    out << "instance,n,k,separator,final_lb,gap_pct,iterations,wall_s,termination\n";
    out.precision(std::numeric_limits<double>::max_digits10);
    for (const auto& r : rows) {
        out << r.instance << "," << r.n << "," << r.k << "," << r.separator << "," << r.final_lb
            << ",";
        if (r.gap_pct >= 0.0) out << r.gap_pct;
        out << "," << r.iterations << "," << r.wall_s << "," << r.termination << "\n";
    }
}

/// Fan a set of instances x separators out over worker threads and collect
/// one summary row per run (deterministic order).
inline std::vector<SummaryRow> run_compare(const std::vector<CvrpInstance>& instances,
                                           const std::vector<SeparatorConfig>& seps,
                                           const RunLimits& limits,
                                           const std::map<std::string, double>& ubs,
                                           unsigned threads = 2) {
    const int total = static_cast<int>(instances.size() * seps.size());
    std::vector<SummaryRow> rows(static_cast<std::size_t>(total));
    parallel_for(
        total,
        [&](int t) {
            const auto& inst = instances[static_cast<std::size_t>(t) / seps.size()];
            const auto& sep = seps[static_cast<std::size_t>(t) % seps.size()];
            const auto t0 = std::chrono::steady_clock::now();
            const RunTrace trace = cutting_plane(inst, sep, limits);
            SummaryRow row;
            row.instance = inst.name;
            row.n = inst.num_customers();
            row.k = inst.vehicles;
            row.separator = to_string(sep.kind);
            row.final_lb = trace.final_lb;
            row.iterations = static_cast<int>(trace.records.size());
            row.wall_s =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            row.termination = trace.termination;
            auto it = ubs.find(inst.name);
            if (it != ubs.end()) row.gap_pct = gap(it->second, trace.final_lb);
            rows[static_cast<std::size_t>(t)] = std::move(row);
        },
        threads);
    return rows;
}

} // namespace capsep
