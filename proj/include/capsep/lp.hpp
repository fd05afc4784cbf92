#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "capsep/errors.hpp"
#include "capsep/graph.hpp"
#include "capsep/instance.hpp"
#include "capsep/rci.hpp"
#include "capsep/util.hpp"

namespace capsep {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kSupportEps = 1e-6; // x above this enters the support graph

/// Solution of the relaxed LP.
struct RelaxedSolution {
    std::vector<double> x;  // one value per undirected edge (i,j), i<j
    double objective = 0.0;
    long iterations = 0;    // simplex pivots spent in the producing solve()

    double value(const EdgeIndexer& idx, int i, int j) const { return x[idx(i, j)]; }
};

/// Two-index relaxation with an append-only cut pool, solved by a
/// bounded-variable revised simplex. Cold solves run the primal method from
/// the all-depot-edges basis; re-solves after appending cuts run the dual
/// method from the previous optimal basis.
class LpModel {
public:
    LpModel() = default;

    explicit LpModel(const CvrpInstance& inst) { build(inst); }

    void build(const CvrpInstance& inst) {
        inst.validate();
        n_vertices_ = inst.num_vertices();
        idx_ = EdgeIndexer(n_vertices_);
        n_struct_ = idx_.count();

        cost_.assign(n_struct_, 0.0);
        lb_.assign(n_struct_, 0.0);
        ub_.assign(n_struct_, 1.0);
        cols_.assign(n_struct_, {});
        for (int i = 0; i < n_vertices_; ++i)
            for (int j = i + 1; j < n_vertices_; ++j) {
                const int e = idx_(i, j);
                cost_[e] = inst.costs[i][j];
                if (i == 0) ub_[e] = 2.0; // depot edges may carry two visits
            }

        // Degree rows: x(delta({i})) = 2 for every customer i.
        rhs_.clear();
        row_names_.clear();
        n_degree_rows_ = n_vertices_ - 1;
        for (int i = 1; i < n_vertices_; ++i) {
            const int r = static_cast<int>(rhs_.size());
            for (int j = 0; j < n_vertices_; ++j)
                if (j != i) cols_[idx_(i, j)].emplace_back(r, 1.0);
            rhs_.push_back(2.0);
            row_names_.push_back("deg_" + std::to_string(i));
            add_logical(0.0, 0.0); // equality row
        }

        // Starting basis: the depot edge of each customer (B is the identity).
        basic_.resize(num_rows());
        vstat_.assign(num_cols(), AtLower);
        for (int i = 1; i < n_vertices_; ++i) {
            const int col = idx_(0, i);
            basic_[i - 1] = col;
            vstat_[col] = Basic;
        }
        binv_.assign(static_cast<std::size_t>(num_rows()) * num_rows(), 0.0);
        for (int r = 0; r < num_rows(); ++r) binv_[r * num_rows() + r] = 1.0;
        solved_once_ = false;
        pivots_since_refactor_ = 0;
    }

    int num_vertices() const { return n_vertices_; }
    int num_variables() const { return n_struct_; }
    int num_rows() const { return static_cast<int>(rhs_.size()); }
    int num_cut_rows() const { return num_rows() - n_degree_rows_; }
    const EdgeIndexer& edge_indexer() const { return idx_; }
    double lower_bound(int e) const { return lb_[e]; }
    double upper_bound(int e) const { return ub_[e]; }
    double objective_coeff(int e) const { return cost_[e]; }

    /// Append an RCI row. Returns false (and leaves the model untouched)
    /// when a cut on the same subset is already pooled.
    bool append_cut(const Rci& rci) {
        if (!pool_subsets_.insert(rci.subset).second) return false;
        append_row(rci.row, "cut_" + std::to_string(num_cut_rows() + 1));
        pool_rows_.push_back(rci.row);
        return true;
    }

    const std::vector<SparseRow>& pool_rows() const { return pool_rows_; }

    /// Solve to optimality. Not reentrant: mutates solver state.
    RelaxedSolution solve() {
        pivots_this_solve_ = 0;
        if (solved_once_) dual_simplex();
        primal_simplex();
        refresh_basic_values();
        solved_once_ = true;

        RelaxedSolution sol;
        sol.x.assign(n_struct_, 0.0);
        for (int j = 0; j < n_struct_; ++j) sol.x[j] = value_of(j);
        sol.objective = 0.0;
        for (int j = 0; j < n_struct_; ++j) sol.objective += cost_[j] * sol.x[j];
        sol.iterations = pivots_this_solve_;
        check_feasible(sol);
        return sol;
    }

    /// Debug export in LP interchange format.
    void write_lp(std::ostream& out) const {
        out.precision(12);
        out << "Minimize\n obj:";
        bool first = true;
        for (int i = 0; i < n_vertices_; ++i)
            for (int j = i + 1; j < n_vertices_; ++j) {
                const double c = cost_[idx_(i, j)];
                if (c == 0.0) continue;
                out << (first ? " " : " + ") << c << " " << var_name(i, j);
                first = false;
            }
        out << "\nSubject To\n";
        std::vector<std::vector<std::pair<int, double>>> rows(num_rows());
        for (int col = 0; col < n_struct_; ++col)
            for (const auto& [r, a] : cols_[col]) rows[r].emplace_back(col, a);
        for (int r = 0; r < num_rows(); ++r) {
            out << " " << row_names_[r] << ":";
            for (const auto& [col, a] : rows[r]) {
                const auto [i, j] = idx_.endpoints(col);
                out << (a >= 0 ? " + " : " - ") << std::abs(a) << " " << var_name(i, j);
            }
            const int logical = n_struct_ + r;
            const bool eq = lb_[logical] == 0.0 && ub_[logical] == 0.0;
            out << (eq ? " = " : (ub_[logical] == 0.0 ? " >= " : " <= ")) << rhs_[r] << "\n";
        }
        out << "Bounds\n";
        for (int i = 0; i < n_vertices_; ++i)
            for (int j = i + 1; j < n_vertices_; ++j)
                out << " 0 <= " << var_name(i, j) << " <= " << ub_[idx_(i, j)] << "\n";
        out << "End\n";
    }

private:
    enum VarStatus : char { AtLower, AtUpper, Basic };

    static constexpr double kPivTol = 1e-9;
    static constexpr double kDualTol = 1e-9;
    static constexpr double kPrimalTol = 1e-9;
    static constexpr double kDegenerateStep = 1e-11;
    static constexpr int kBlandAfter = 1000;   // degenerate pivots before Bland's rule
    static constexpr int kRefactorEvery = 120;

    int n_vertices_ = 0;
    int n_struct_ = 0;
    int n_degree_rows_ = 0;
    EdgeIndexer idx_;

    std::vector<double> cost_, lb_, ub_;                       // per column
    std::vector<std::vector<std::pair<int, double>>> cols_;    // structural columns
    std::vector<double> rhs_;
    std::vector<std::string> row_names_;
    std::vector<SparseRow> pool_rows_;
    std::set<std::vector<int>> pool_subsets_;

    std::vector<int> basic_;        // row -> basic column
    std::vector<char> vstat_;       // column -> VarStatus
    std::vector<double> binv_;      // dense row-major inverse of the basis
    std::vector<double> xb_;        // basic values, aligned with basic_
    bool solved_once_ = false;
    long pivots_this_solve_ = 0;
    int pivots_since_refactor_ = 0;

    int num_cols() const { return n_struct_ + num_rows(); }

    std::string var_name(int i, int j) const {
        return "x_" + std::to_string(i) + "_" + std::to_string(j);
    }

    void add_logical(double lo, double hi) {
        cost_.push_back(0.0);
        lb_.push_back(lo);
        ub_.push_back(hi);
        vstat_.push_back(AtLower);
    }

    // Column access that covers logicals (identity coefficient on own row).
    template <typename Fn>
    void for_column(int col, Fn&& fn) const {
        if (col < n_struct_) {
            for (const auto& [r, a] : cols_[col]) fn(r, a);
        } else {
            fn(col - n_struct_, 1.0);
        }
    }

    double value_of(int col) const {
        if (vstat_[col] == Basic) {
            for (int r = 0; r < num_rows(); ++r)
                if (basic_[r] == col) return xb_[r];
            throw InternalError("basic column missing from basis");
        }
        return vstat_[col] == AtLower ? (lb_[col] == -kInf ? 0.0 : lb_[col])
                                      : ub_[col];
    }

    void append_row(const SparseRow& row, const std::string& name) {
        const int m_old = num_rows();
        const int r_new = m_old;

        // Extend Binv: B' = [[B, 0], [r_B, 1]] => last row = [-r_B * Binv, 1].
        std::vector<double> rb(m_old, 0.0); // new row restricted to old basic columns
        std::vector<int> pos(num_cols(), -1);
        for (int r = 0; r < m_old; ++r) pos[basic_[r]] = r;
        for (const auto& [e, a] : row.coef) {
            cols_[e].emplace_back(r_new, a);
            if (pos[e] >= 0) rb[pos[e]] += a;
        }

        rhs_.push_back(row.rhs);
        row_names_.push_back(name);
        if (row.sense == 'L') add_logical(0.0, kInf);
        else add_logical(-kInf, 0.0);

        const int m = m_old + 1;
        std::vector<double> nb(static_cast<std::size_t>(m) * m, 0.0);
        for (int r = 0; r < m_old; ++r)
            for (int c = 0; c < m_old; ++c) nb[r * m + c] = binv_[r * m_old + c];
        for (int c = 0; c < m_old; ++c) {
            double s = 0.0;
            for (int r = 0; r < m_old; ++r) s += rb[r] * binv_[r * m_old + c];
            nb[r_new * m + c] = -s;
        }
        nb[r_new * m + r_new] = 1.0;
        binv_ = std::move(nb);

        const int logical = num_cols() - 1;
        basic_.push_back(logical);
        vstat_[logical] = Basic;
    }

    std::vector<double> rhs_minus_nonbasic() const {
        std::vector<double> bt = rhs_;
        for (int col = 0; col < num_cols(); ++col) {
            if (vstat_[col] == Basic) continue;
            const double v = (vstat_[col] == AtLower)
                                 ? (lb_[col] == -kInf ? 0.0 : lb_[col])
                                 : ub_[col];
            if (v == 0.0) continue;
            for_column(col, [&](int r, double a) { bt[r] -= a * v; });
        }
        return bt;
    }

    void refresh_basic_values() {
        const int m = num_rows();
        const auto bt = rhs_minus_nonbasic();
        xb_.assign(m, 0.0);
        for (int r = 0; r < m; ++r) {
            double s = 0.0;
            const double* row = &binv_[static_cast<std::size_t>(r) * m];
            for (int c = 0; c < m; ++c) s += row[c] * bt[c];
            xb_[r] = s;
        }
    }

    /// Rebuild the dense inverse from the basis columns (Gauss-Jordan).
    void refactor() {
        const int m = num_rows();
        std::vector<double> a(static_cast<std::size_t>(m) * m, 0.0);
        for (int c = 0; c < m; ++c)
            for_column(basic_[c], [&](int r, double coef) { a[r * m + c] = coef; });
        std::vector<double> inv(static_cast<std::size_t>(m) * m, 0.0);
        for (int r = 0; r < m; ++r) inv[r * m + r] = 1.0;
        for (int col = 0; col < m; ++col) {
            int piv = -1;
            double best = 0.0;
            for (int r = col; r < m; ++r)
                if (std::abs(a[r * m + col]) > best) { best = std::abs(a[r * m + col]); piv = r; }
            if (piv < 0 || best < 1e-12) throw InternalError("singular basis in refactor");
            if (piv != col) {
                for (int c = 0; c < m; ++c) {
                    std::swap(a[piv * m + c], a[col * m + c]);
                    std::swap(inv[piv * m + c], inv[col * m + c]);
                }
            }
            const double d = a[col * m + col];
            for (int c = 0; c < m; ++c) { a[col * m + c] /= d; inv[col * m + c] /= d; }
            for (int r = 0; r < m; ++r) {
                if (r == col) continue;
                const double f = a[r * m + col];
                if (f == 0.0) continue;
                for (int c = 0; c < m; ++c) {
                    a[r * m + c] -= f * a[col * m + c];
                    inv[r * m + c] -= f * inv[col * m + c];
                }
            }
        }
        binv_ = std::move(inv);
        pivots_since_refactor_ = 0;
    }

    std::vector<double> ftran(int col) const {
        const int m = num_rows();
        std::vector<double> alpha(m, 0.0);
        for_column(col, [&](int r, double a) {
            for (int i = 0; i < m; ++i) alpha[i] += binv_[static_cast<std::size_t>(i) * m + r] * a;
        });
        return alpha;
    }

    std::vector<double> duals() const {
        const int m = num_rows();
        std::vector<double> y(m, 0.0);
        for (int r = 0; r < m; ++r) {
            const double cb = cost_[basic_[r]];
            if (cb == 0.0) continue;
            const double* row = &binv_[static_cast<std::size_t>(r) * m];
            for (int c = 0; c < m; ++c) y[c] += cb * row[c];
        }
        return y;
    }

    double reduced_cost(int col, const std::vector<double>& y) const {
        double d = cost_[col];
        for_column(col, [&](int r, double a) { d -= y[r] * a; });
        return d;
    }

    void update_binv(int r_piv, const std::vector<double>& alpha) {
        const int m = num_rows();
        const double piv = alpha[r_piv];
        double* prow = &binv_[static_cast<std::size_t>(r_piv) * m];
        for (int c = 0; c < m; ++c) prow[c] /= piv;
        for (int r = 0; r < m; ++r) {
            if (r == r_piv) continue;
            const double f = alpha[r];
            if (f == 0.0) continue;
            double* row = &binv_[static_cast<std::size_t>(r) * m];
            for (int c = 0; c < m; ++c) row[c] -= f * prow[c];
        }
        if (++pivots_since_refactor_ >= kRefactorEvery) refactor();
    }

    void primal_simplex() {
        refresh_basic_values();
        int degenerate_streak = 0;
        const long guard = 20000L + 200L * num_cols();
        for (long iter = 0; iter < guard; ++iter) {
            const auto y = duals();
            const bool bland = degenerate_streak > kBlandAfter;

            int q = -1;
            double best = kDualTol;
            int dir = +1; // +1: entering increases from lower, -1: decreases from upper
            for (int col = 0; col < num_cols(); ++col) {
                if (vstat_[col] == Basic) continue;
                if (ub_[col] - lb_[col] < 1e-15) continue; // fixed variable
                const double d = reduced_cost(col, y);
                if (vstat_[col] == AtLower && d < -best) {
                    q = col; dir = +1;
                    if (bland) break;
                    best = -d;
                } else if (vstat_[col] == AtUpper && d > best) {
                    q = col; dir = -1;
                    if (bland) break;
                    best = d;
                }
            }
            if (q < 0) return; // optimal

            const auto alpha = ftran(q);
            // Ratio test: how far can x_q move before a basic variable or the
            // entering variable itself hits a bound.
            double t_max = (lb_[q] == -kInf || ub_[q] == kInf) ? kInf : ub_[q] - lb_[q];
            int r_leave = -1;
            double leave_alpha = 0.0;
            for (int r = 0; r < num_rows(); ++r) {
                const double rate = -dir * alpha[r]; // d x_B[r] / d t
                const int bcol = basic_[r];
                double limit = kInf;
                if (rate < -kPivTol && lb_[bcol] != -kInf)
                    limit = (xb_[r] - lb_[bcol]) / (-rate);
                else if (rate > kPivTol && ub_[bcol] != kInf)
                    limit = (ub_[bcol] - xb_[r]) / rate;
                if (limit < -1e-9) limit = 0.0;
                const bool tie_pref =
                    r_leave >= 0 && limit < t_max + 1e-12 &&
                    (bland ? basic_[r] < basic_[r_leave]
                           : std::abs(alpha[r]) > std::abs(leave_alpha));
                if (limit < t_max - 1e-12 || tie_pref) {
                    t_max = std::max(limit, 0.0);
                    r_leave = r;
                    leave_alpha = alpha[r];
                }
            }
            if (t_max == kInf) throw InternalError("primal simplex: unbounded direction");

            degenerate_streak = (t_max < kDegenerateStep) ? degenerate_streak + 1 : 0;

            if (r_leave < 0) {
                // Bound flip: entering variable crosses to its other bound.
                vstat_[q] = (dir > 0) ? AtUpper : AtLower;
                for (int r = 0; r < num_rows(); ++r) xb_[r] -= dir * t_max * alpha[r];
                ++pivots_this_solve_;
                continue;
            }

            const int leaving = basic_[r_leave];
            const double enter_val =
                (dir > 0 ? (lb_[q] == -kInf ? 0.0 : lb_[q]) + t_max : ub_[q] - t_max);
            for (int r = 0; r < num_rows(); ++r) xb_[r] -= dir * t_max * alpha[r];
            const double rate = -dir * alpha[r_leave];
            vstat_[leaving] = (rate < 0) ? AtLower : AtUpper;
            basic_[r_leave] = q;
            vstat_[q] = Basic;
            xb_[r_leave] = enter_val;
            update_binv(r_leave, alpha);
            ++pivots_this_solve_;
            if (pivots_since_refactor_ == 0) refresh_basic_values(); // just refactored
        }
        throw InternalError("primal simplex: iteration guard exhausted");
    }

    void dual_simplex() {
        refresh_basic_values();
        const long guard = 20000L + 200L * num_cols();
        for (long iter = 0; iter < guard; ++iter) {
            int r_leave = -1;
            double worst = 1e-9;
            int delta = 0; // +1: above upper bound, -1: below lower bound
            for (int r = 0; r < num_rows(); ++r) {
                const int bcol = basic_[r];
                if (lb_[bcol] != -kInf && xb_[r] < lb_[bcol] - worst) {
                    worst = lb_[bcol] - xb_[r];
                    r_leave = r;
                    delta = -1;
                } else if (ub_[bcol] != kInf && xb_[r] > ub_[bcol] + worst) {
                    worst = xb_[r] - ub_[bcol];
                    r_leave = r;
                    delta = +1;
                }
            }
            if (r_leave < 0) return; // primal feasible again

            const int m = num_rows();
            const double* rho = &binv_[static_cast<std::size_t>(r_leave) * m];
            const auto y = duals();

            int q = -1;
            double best_ratio = kInf;
            double best_alpha = 0.0;
            for (int col = 0; col < num_cols(); ++col) {
                if (vstat_[col] == Basic) continue;
                double a = 0.0;
                for_column(col, [&](int r, double coef) { a += rho[r] * coef; });
                // Eligibility: moving col must push x_B[r_leave] toward its bound.
                const double signed_a = delta * a;
                const bool ok = (vstat_[col] == AtLower && signed_a > kPivTol) ||
                                (vstat_[col] == AtUpper && signed_a < -kPivTol);
                if (!ok) continue;
                const double d = reduced_cost(col, y);
                const double ratio = std::abs(d) / std::abs(a);
                if (ratio < best_ratio - 1e-12 ||
                    (ratio < best_ratio + 1e-12 && std::abs(a) > std::abs(best_alpha))) {
                    best_ratio = ratio;
                    best_alpha = a;
                    q = col;
                }
            }
            if (q < 0) {
                throw InternalError("LP infeasible after cut: certificate row " +
                                    row_names_[r_leave]);
            }

            const int leaving = basic_[r_leave];
            vstat_[leaving] = (delta > 0) ? AtUpper : AtLower;
            const auto alpha = ftran(q);
            basic_[r_leave] = q;
            vstat_[q] = Basic;
            update_binv(r_leave, alpha);
            refresh_basic_values();
            ++pivots_this_solve_;
        }
        throw InternalError("dual simplex: iteration guard exhausted");
    }

    void check_feasible(const RelaxedSolution& sol) const {
        for (int j = 0; j < n_struct_; ++j)
            if (sol.x[j] < lb_[j] - 1e-9 || sol.x[j] > ub_[j] + 1e-9)
                throw InternalError("solution violates variable bounds");
        std::vector<double> act(num_rows(), 0.0);
        for (int j = 0; j < n_struct_; ++j) {
            if (sol.x[j] == 0.0) continue;
            for (const auto& [r, a] : cols_[j]) act[r] += a * sol.x[j];
        }
        for (int r = 0; r < num_rows(); ++r) {
            const int logical = n_struct_ + r;
            const double s = rhs_[r] - act[r]; // implied logical value
            const double lo = lb_[logical], hi = ub_[logical];
            if ((lo != -kInf && s < lo - 1e-7) || (hi != kInf && s > hi + 1e-7))
                throw InternalError("solution violates row " + row_names_[r]);
        }
    }
};

/// Degree rows + bounds of the two-index relaxation, empty cut pool.
inline LpModel build_relaxation(const CvrpInstance& inst) { return LpModel(inst); }

inline RelaxedSolution solve(LpModel& model) { return model.solve(); }

/// Support graph of a relaxed solution: edges with x above kSupportEps.
/// With augment set, every absent depot edge is added at weight zero so the
/// graph is connected through the depot.
inline WeightedGraph support_graph(const RelaxedSolution& sol, const CvrpInstance& inst,
                                   bool augment) {
    const int n = inst.num_vertices();
    const EdgeIndexer idx(n);
    WeightedGraph g;
    g.depot = 0;
    g.demands = inst.demands;
    std::vector<char> has_depot_edge(n, 0);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double v = sol.x[idx(i, j)];
            if (v > kSupportEps) {
                g.edges.push_back({i, j, v});
                if (i == 0) has_depot_edge[j] = 1;
            }
        }
    if (augment)
        for (int j = 1; j < n; ++j)
            if (!has_depot_edge[j]) g.edges.push_back({0, j, 0.0});
    return g;
}

} // namespace capsep
