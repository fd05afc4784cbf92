#include <catch2/catch_amalgamated.hpp>

#include <optional>
#include <random>
#include <sstream>

#include "capsep/lp.hpp"
#include "capsep/sep_exact.hpp"
#include "support/fixtures.hpp"
#include "support/tableau_lp.hpp"

using namespace capsep;

namespace {

CvrpInstance unit_triangle() {
    CvrpInstance inst;
    inst.name = "unit-triangle";
    inst.coords = {{1.0 / 3, 1.0 / 3}, {0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
    inst.demands = {0, 10, 10, 10};
    inst.capacity = 30;
    inst.vehicles = 1;
    inst.costs = detail::rounded_euclidean_costs(inst.coords, 1000.0);
    inst.validate();
    return inst;
}

/// Independent dense-tableau objective for the current relaxation: edge
/// variables, degree equalities, explicit upper-bound rows, optional extra
/// rows.
double oracle_objective(const CvrpInstance& inst, const std::vector<SparseRow>& cuts) {
    const int n = inst.num_vertices();
    const EdgeIndexer idx(n);
    std::vector<double> c(static_cast<std::size_t>(idx.count()));
    std::vector<testsupport::StdRow> rows;
    for (int i = 1; i < n; ++i) {
        testsupport::StdRow r;
        r.a.assign(c.size(), 0.0);
        for (int j = 0; j < n; ++j)
            if (j != i) r.a[static_cast<std::size_t>(idx(i, j))] = 1.0;
        r.b = 2.0;
        r.sense = 'E';
        rows.push_back(std::move(r));
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const int e = idx(i, j);
            c[static_cast<std::size_t>(e)] = inst.costs[i][j];
            testsupport::StdRow r;
            r.a.assign(c.size(), 0.0);
            r.a[static_cast<std::size_t>(e)] = 1.0;
            r.b = i == 0 ? 2.0 : 1.0;
            r.sense = 'L';
            rows.push_back(std::move(r));
        }
    for (const auto& cut : cuts) {
        testsupport::StdRow r;
        r.a.assign(c.size(), 0.0);
        for (const auto& [e, a] : cut.coef) r.a[static_cast<std::size_t>(e)] = a;
        r.b = cut.rhs;
        r.sense = cut.sense;
        rows.push_back(std::move(r));
    }
    return testsupport::tableau_solve_min(std::move(c), std::move(rows));
}

} // namespace

TEST_CASE("relaxation shape: variables, degree rows, bounds, empty pool") {
    const auto inst = unit_triangle(); // |V| = 4
    LpModel model = build_relaxation(inst);
    CHECK(model.num_variables() == 6);
    CHECK(model.num_rows() == 3);
    CHECK(model.num_cut_rows() == 0);
    const EdgeIndexer idx(4);
    CHECK(model.upper_bound(idx(0, 1)) == 2.0);
    CHECK(model.upper_bound(idx(1, 2)) == 1.0);
    CHECK(model.lower_bound(idx(1, 2)) == 0.0);
}

TEST_CASE("solver matches the dense-tableau oracle on the triangle") {
    auto inst = unit_triangle();
    LpModel model = build_relaxation(inst);
    const auto sol = model.solve();
    const double oracle = oracle_objective(inst, {});
    CHECK(sol.objective == Catch::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("solver matches the oracle on random instances, with and without cuts") {
    for (std::uint64_t seed : {3ull, 8ull, 15ull}) {
        const auto inst = generate_random(7, seed);
        LpModel model = build_relaxation(inst);
        const auto sol = model.solve();
        CHECK(sol.objective == Catch::Approx(oracle_objective(inst, {})).epsilon(1e-9));

        // append the most violated exact cuts and re-check against the oracle
        const auto support = support_graph(sol, inst, false);
        std::vector<SparseRow> rows;
        for (const auto& [m, res] : exact_separate_all(support, inst))
            if (res.violated) {
                const Rci rci = emit_rci(res.subset, inst);
                if (model.append_cut(rci)) rows.push_back(rci.row);
            }
        if (rows.empty()) continue;
        const auto sol2 = model.solve();
        CHECK(sol2.objective == Catch::Approx(oracle_objective(inst, rows)).epsilon(1e-9));
        CHECK(sol2.objective >= sol.objective - 1e-9);
    }
}

TEST_CASE("degree rows hold within 1e-7 on every solution") {
    const auto inst = generate_random(12, 4);
    LpModel model = build_relaxation(inst);
    const auto sol = model.solve();
    const int n = inst.num_vertices();
    const EdgeIndexer idx(n);
    for (int i = 1; i < n; ++i) {
        double deg = 0.0;
        for (int j = 0; j < n; ++j)
            if (j != i) deg += sol.x[idx(i, j)];
        CHECK(std::abs(deg - 2.0) <= 1e-7);
    }
}

TEST_CASE("appending an already-satisfied row leaves the optimum untouched") {
    const auto inst = generate_random(8, 2);
    LpModel model = build_relaxation(inst);
    const auto sol = model.solve();
    // any pair with k = 1 is satisfied: its crossing weight is
    // 4 - 2*x_ij >= 2 by the degree rows
    const auto support = support_graph(sol, inst, false);
    std::vector<int> pair;
    for (int i = 1; i < inst.num_vertices() && pair.empty(); ++i)
        for (int j = i + 1; j < inst.num_vertices() && pair.empty(); ++j)
            if (inst.demands[i] + inst.demands[j] <= inst.capacity) pair = {i, j};
    REQUIRE_FALSE(pair.empty());
    REQUIRE(violation(pair, support, inst.demands, inst.capacity) <= kViolationTol);
    REQUIRE(model.append_cut(emit_rci(pair, inst)));
    const auto sol2 = model.solve();
    CHECK(std::abs(sol2.objective - sol.objective) <= 1e-9);
    CHECK(sol2.iterations == 0);
}

TEST_CASE("duplicate subsets are suppressed by the pool") {
    const auto inst = generate_random(6, 9);
    LpModel model = build_relaxation(inst);
    CHECK(model.append_cut(emit_rci({1, 2}, inst)));
    CHECK_FALSE(model.append_cut(emit_rci({2, 1}, inst)));
    CHECK(model.num_cut_rows() == 1);
}

TEST_CASE("warm re-solve after one cut beats a cold solve on average") {
    double warm_total = 0.0, cold_total = 0.0;
    int measured = 0;
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        const auto inst = generate_random(6 + static_cast<int>(seed * 4) % 44, seed + 100);
        LpModel warm_model = build_relaxation(inst);
        const auto sol = warm_model.solve();
        const auto support = support_graph(sol, inst, false);
        std::optional<Rci> cut;
        for (const auto& [m, res] : exact_separate_all(support, inst))
            if (res.violated) {
                cut = emit_rci(res.subset, inst);
                break;
            }
        if (!cut) continue;
        REQUIRE(warm_model.append_cut(*cut));
        const auto warm = warm_model.solve();

        LpModel cold_model = build_relaxation(inst);
        REQUIRE(cold_model.append_cut(*cut));
        const auto cold = cold_model.solve();

        CHECK(warm.objective == Catch::Approx(cold.objective).epsilon(1e-9));
        warm_total += static_cast<double>(warm.iterations);
        cold_total += static_cast<double>(cold.iterations);
        ++measured;
    }
    REQUIRE(measured >= 5);
    INFO("warm pivots " << warm_total << " vs cold " << cold_total << " over " << measured);
    CHECK(warm_total <= cold_total);
}

TEST_CASE("an infeasible appended row raises an internal error naming a certificate") {
    const auto inst = generate_random(5, 6);
    LpModel model = build_relaxation(inst);
    model.solve();
    Rci bogus;
    bogus.subset = {1};
    bogus.k = 1;
    bogus.row.sense = 'L';
    bogus.row.rhs = -1.0; // 0 <= -1: unsatisfiable
    REQUIRE(model.append_cut(bogus));
    try {
        model.solve();
        FAIL("expected an internal error");
    } catch (const InternalError& e) {
        CHECK(std::string(e.what()).find("cut_1") != std::string::npos);
    }
}

TEST_CASE("support graph construction honors the threshold and augmentation") {
    CvrpInstance inst = unit_triangle();
    const int n = inst.num_vertices();
    RelaxedSolution sol;
    sol.x.assign(static_cast<std::size_t>(EdgeIndexer(n).count()), 0.0);
    const EdgeIndexer idx(n);
    // a single tour 0-1-2-3-0
    sol.x[idx(0, 1)] = 1.0;
    sol.x[idx(1, 2)] = 1.0;
    sol.x[idx(2, 3)] = 1.0;
    sol.x[idx(0, 3)] = 1.0;
    sol.x[idx(1, 3)] = 1e-9; // below the support threshold

    const auto raw = support_graph(sol, inst, false);
    CHECK(raw.edges.size() == 4);

    const auto aug = support_graph(sol, inst, true);
    CHECK(aug.edges.size() == 5); // adds (0,2) at weight zero
    bool found = false;
    for (const auto& e : aug.edges)
        if (e.u == 0 && e.v == 2) {
            found = true;
            CHECK(e.w == 0.0);
        }
    CHECK(found);
}

TEST_CASE("augment=false preserves disconnected components") {
    CvrpInstance inst = generate_random(4, 13);
    const int n = inst.num_vertices();
    RelaxedSolution sol;
    sol.x.assign(static_cast<std::size_t>(EdgeIndexer(n).count()), 0.0);
    const EdgeIndexer idx(n);
    sol.x[idx(1, 2)] = 1.0;
    sol.x[idx(3, 4)] = 1.0;
    const auto raw = support_graph(sol, inst, false);
    CHECK(raw.edges.size() == 2);
    for (const auto& e : raw.edges) CHECK(e.u != 0);
}

TEST_CASE("LP text export lists the model") {
    const auto inst = unit_triangle();
    LpModel model = build_relaxation(inst);
    model.append_cut(emit_rci({1, 2}, inst));
    std::ostringstream out;
    model.write_lp(out);
    const std::string text = out.str();
    CHECK(text.find("Minimize") != std::string::npos);
    CHECK(text.find("deg_1:") != std::string::npos);
    CHECK(text.find("cut_1:") != std::string::npos);
    CHECK(text.find("Bounds") != std::string::npos);
    CHECK(text.find("End") != std::string::npos);
}
