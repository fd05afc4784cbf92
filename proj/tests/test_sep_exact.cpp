#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "capsep/sep_exact.hpp"
#include "support/fixtures.hpp"

using namespace capsep;

namespace {

SeparationProblem triangle_problem(int m) {
    return SeparationProblem{testsupport::triangle_support(), {0, 60, 60, 60}, 100, m};
}

} // namespace

TEST_CASE("triangle fixture, M = 0: optimum at the first singleton, not violated") {
    // all seven nonempty subsets enumerated by hand: singletons cost 2.0,
    // pairs 3.0, the full set 3.0
    const auto res = exact_separate(triangle_problem(0));
    CHECK(res.subset == std::vector<int>{1});
    CHECK(res.z == Catch::Approx(2.0).margin(1e-12));
    CHECK_FALSE(res.violated); // 2.0 is not below 2(M+1) = 2
    CHECK(res.labels == std::vector<char>{0, 1, 0, 0});
}

TEST_CASE("triangle fixture, M = 1: pair {1,2} wins the lexicographic tie") {
    const auto res = exact_separate(triangle_problem(1));
    CHECK(res.subset == std::vector<int>{1, 2});
    CHECK(res.z == Catch::Approx(3.0).margin(1e-12));
    CHECK(res.violated); // 3.0 < 4
}

TEST_CASE("unsatisfiable demand threshold is rejected") {
    CHECK_THROWS_AS(exact_separate(triangle_problem(2)), ValidationError);
}

TEST_CASE("exact_separate_all covers exactly the M range") {
    const auto inst = testsupport::triangle_instance();
    const auto all = exact_separate_all(testsupport::triangle_support(), inst);
    REQUIRE(all.size() == 2); // ceil(180/100) = 2
    CHECK(all[0].first == 0);
    CHECK(all[1].first == 1);
    CHECK_FALSE(all[0].second.violated);
    CHECK(all[1].second.violated);

    // the violated optimum converts to x(delta({1,2})) >= 4
    const auto rci = rci_row_crossing(all[1].second.subset, 2, inst.num_vertices());
    CHECK(rci.rhs == 4.0);
}

TEST_CASE("integer-feasible supports yield no violated M") {
    // disjoint capacity-feasible tours: RCIs hold at every integer point
    const auto inst = generate_random(9, 5);
    const int n = inst.num_vertices();
    std::vector<std::vector<int>> routes;
    std::vector<long long> loads;
    for (int v = 1; v < n; ++v) {
        bool placed = false;
        for (std::size_t r = 0; r < routes.size(); ++r)
            if (loads[r] + inst.demands[v] <= inst.capacity) {
                routes[r].push_back(v);
                loads[r] += inst.demands[v];
                placed = true;
                break;
            }
        if (!placed) {
            routes.push_back({v});
            loads.push_back(inst.demands[v]);
        }
    }
    const auto x = testsupport::routes_to_x(routes, n);
    WeightedGraph g;
    g.depot = 0;
    g.demands = inst.demands;
    const EdgeIndexer idx(n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (x[idx(i, j)] > 0.0) g.edges.push_back({i, j, x[idx(i, j)]});
    for (const auto& [m, res] : exact_separate_all(g, inst)) CHECK_FALSE(res.violated);
}

TEST_CASE("branch-and-bound equals enumeration on random graphs") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 4 + static_cast<int>(rng() % 9); // up to 12 customers
        const auto g = testsupport::random_support_graph(n + 1, rng);
        const long long total = g.total_demand();
        const long long q = std::max<long long>(1, total / (2 + static_cast<long long>(rng() % 3)));
        const int m_count = static_cast<int>((total + q - 1) / q);
        for (int m = 0; m < m_count; ++m) {
            SeparationProblem p{g, g.demands, q, m};
            const auto a = exact_separate(p, SepMethod::Enumerate);
            const auto b = exact_separate(p, SepMethod::BranchAndBound);
            CHECK(a.subset == b.subset);
            CHECK(a.z == b.z); // both recompute z the same way on the same set
        }
    }
}

TEST_CASE("z(M) is non-decreasing in M") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const auto g = testsupport::random_support_graph(10, rng);
        const long long total = g.total_demand();
        const long long q = std::max<long long>(1, total / 4);
        const int m_count = static_cast<int>((total + q - 1) / q);
        double prev = -1.0;
        for (int m = 0; m < m_count; ++m) {
            SeparationProblem p{g, g.demands, q, m};
            const auto res = exact_separate(p);
            CHECK(res.z >= prev - 1e-9);
            prev = res.z;
        }
    }
}

TEST_CASE("the returned set always meets the demand threshold") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto g = testsupport::random_support_graph(9, rng);
        const long long total = g.total_demand();
        const long long q = std::max<long long>(1, total / 3);
        const int m_count = static_cast<int>((total + q - 1) / q);
        for (int m = 0; m < m_count; ++m) {
            SeparationProblem p{g, g.demands, q, m};
            const auto res = exact_separate(p);
            long long demand = 0;
            for (int v : res.subset) demand += g.demands[static_cast<std::size_t>(v)];
            CHECK(demand > static_cast<long long>(m) * q);
        }
    }
}
