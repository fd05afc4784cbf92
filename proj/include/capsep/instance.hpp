#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "capsep/errors.hpp"
#include "capsep/util.hpp"

namespace capsep {

/// A capacitated vehicle routing instance. Vertex 0 is always the depot.
struct CvrpInstance {
    std::string name;
    std::vector<std::pair<double, double>> coords; // index 0 = depot
    std::vector<long long> demands;                // demands[0] == 0
    long long capacity = 0;                        // Q
    int vehicles = 0;                              // K
    std::vector<std::vector<double>> costs;        // symmetric, zero diagonal

    int num_vertices() const { return static_cast<int>(coords.size()); }
    int num_customers() const { return num_vertices() - 1; }
    long long total_demand() const {
        return std::accumulate(demands.begin(), demands.end(), 0LL);
    }

    void validate() const {
        const int n = num_vertices();
        if (n < 2) throw ValidationError("instance needs a depot and at least one customer");
        if (static_cast<int>(demands.size()) != n || static_cast<int>(costs.size()) != n)
            throw ValidationError("coords/demands/costs size mismatch");
        if (demands[0] != 0) throw ValidationError("depot demand must be zero");
        for (int i = 1; i < n; ++i)
            if (demands[i] < 1)
                throw ValidationError("customer " + std::to_string(i) + " has demand < 1");
        if (capacity < 1) throw ValidationError("capacity must be positive");
        const long long dmax = *std::max_element(demands.begin(), demands.end());
        if (dmax > capacity)
            throw ValidationError("a customer demand exceeds the vehicle capacity");
        const long long total = total_demand();
        const int kmin = static_cast<int>((total + capacity - 1) / capacity);
        if (vehicles < kmin)
            throw ValidationError("vehicle count " + std::to_string(vehicles) +
                                  " below minimum fleet " + std::to_string(kmin));
        for (int i = 0; i < n; ++i) {
            if (static_cast<int>(costs[i].size()) != n)
                throw ValidationError("cost matrix is not square");
            if (costs[i][i] != 0.0) throw ValidationError("cost diagonal must be zero");
            for (int j = 0; j < n; ++j) {
                if (costs[i][j] < 0.0) throw ValidationError("negative edge cost");
                if (costs[i][j] != costs[j][i]) throw ValidationError("cost matrix not symmetric");
            }
        }
    }
};

/// k(S) = ceil(sum of demands over S / Q): the rounded vehicle requirement.
inline int k_of_set(const std::vector<int>& subset, const std::vector<long long>& demands,
                    long long capacity) {
    if (subset.empty()) throw ValidationError("k_of_set: empty subset");
    long long total = 0;
    for (int v : subset) total += demands.at(static_cast<std::size_t>(v));
    return static_cast<int>((total + capacity - 1) / capacity);
}

namespace detail {

inline std::vector<std::vector<double>> rounded_euclidean_costs(
    const std::vector<std::pair<double, double>>& coords, double scale) {
    const int n = static_cast<int>(coords.size());
    std::vector<std::vector<double>> c(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double dx = coords[i].first - coords[j].first;
            const double dy = coords[i].second - coords[j].second;
            c[i][j] = c[j][i] = nint(scale * std::hypot(dx, dy));
        }
    return c;
}

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace detail

/// Parse a CVRPLIB/TSPLIB-style instance (EUC_2D only). The depot is
/// relocated to index 0 when DEPOT_SECTION names another vertex, and K is
/// taken from a trailing "-k<NN>" in the name when present, otherwise
/// ceil(total demand / Q). Costs are nearest-integer Euclidean distances;
/// unit-square files (every coordinate in [0,1]) carry the x1000 cost scale
/// of the random-instance convention so distances stay meaningful integers.
inline CvrpInstance parse_cvrplib(std::istream& in) {
    std::string name = "unnamed";
    int dimension = -1;
    long long capacity = -1;
    std::string weight_type;
    bool saw_coords = false, saw_demands = false, saw_depot = false;
    std::vector<std::pair<double, double>> coords;
    std::vector<long long> demands;
    int depot_id = -1; // 1-based id from the file

    std::string line;
    std::string section;
    while (std::getline(in, line)) {
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line == "EOF") break;

        const auto colon = line.find(':');
        std::string key = detail::trim(colon == std::string::npos ? line : line.substr(0, colon));
        std::string val = colon == std::string::npos ? "" : detail::trim(line.substr(colon + 1));

        if (key == "NAME") { name = val; continue; }
        if (key == "TYPE" || key == "COMMENT") continue;
        if (key == "DIMENSION") { dimension = std::stoi(val); continue; }
        if (key == "CAPACITY") { capacity = std::stoll(val); continue; }
        if (key == "EDGE_WEIGHT_TYPE") { weight_type = val; continue; }

        if (key == "NODE_COORD_SECTION" || key == "DEMAND_SECTION" || key == "DEPOT_SECTION") {
            section = key;
            if (dimension <= 0) throw FormatError("DIMENSION must precede " + key);
            if (section == "NODE_COORD_SECTION") {
                coords.assign(dimension, {0.0, 0.0});
                std::vector<bool> seen(dimension, false);
                for (int k = 0; k < dimension; ++k) {
                    if (!std::getline(in, line)) throw FormatError("truncated NODE_COORD_SECTION");
                    std::istringstream row(line);
                    int id; double x, y;
                    if (!(row >> id >> x >> y)) throw FormatError("bad NODE_COORD_SECTION row: " + line);
                    if (id < 1 || id > dimension) throw FormatError("vertex id out of range in NODE_COORD_SECTION");
                    coords[id - 1] = {x, y};
                    seen[id - 1] = true;
                }
                if (std::find(seen.begin(), seen.end(), false) != seen.end())
                    throw FormatError("NODE_COORD_SECTION misses a vertex");
                saw_coords = true;
            } else if (section == "DEMAND_SECTION") {
                demands.assign(dimension, 0);
                for (int k = 0; k < dimension; ++k) {
                    if (!std::getline(in, line)) throw FormatError("truncated DEMAND_SECTION");
                    std::istringstream row(line);
                    int id; std::string dtok;
                    if (!(row >> id >> dtok)) throw FormatError("bad DEMAND_SECTION row: " + line);
                    if (id < 1 || id > dimension) throw FormatError("vertex id out of range in DEMAND_SECTION");
                    std::size_t used = 0;
                    long long d = 0;
                    try {
                        d = std::stoll(dtok, &used);
                    } catch (const std::exception&) {
                        throw ValueError("non-integer demand '" + dtok + "'");
                    }
                    if (used != dtok.size()) throw ValueError("non-integer demand '" + dtok + "'");
                    if (d < 0) throw ValueError("negative demand");
                    demands[id - 1] = d;
                }
                saw_demands = true;
            } else {
                while (std::getline(in, line)) {
                    line = detail::trim(line);
                    if (line.empty()) continue;
                    int id = std::stoi(line);
                    if (id == -1) break;
                    depot_id = id;
                }
                if (depot_id < 1) throw FormatError("DEPOT_SECTION names no depot");
                saw_depot = true;
            }
            continue;
        }
    }

    if (dimension <= 0) throw FormatError("DIMENSION");
    if (capacity < 0) throw FormatError("CAPACITY");
    if (weight_type.empty()) throw FormatError("EDGE_WEIGHT_TYPE");
    if (weight_type != "EUC_2D")
        throw FormatError("EDGE_WEIGHT_TYPE must be EUC_2D, got " + weight_type);
    if (!saw_coords) throw FormatError("NODE_COORD_SECTION");
    if (!saw_demands) throw FormatError("DEMAND_SECTION");
    if (!saw_depot) throw FormatError("DEPOT_SECTION");

    // Relocate the depot to index 0 by swapping.
    const int d0 = depot_id - 1;
    if (d0 != 0) {
        std::swap(coords[0], coords[d0]);
        std::swap(demands[0], demands[d0]);
    }
    if (demands[0] != 0) throw ValidationError("depot has nonzero demand");

    CvrpInstance inst;
    inst.name = name;
    inst.coords = std::move(coords);
    inst.demands = std::move(demands);
    inst.capacity = capacity;

    static const std::regex k_suffix("-k([0-9]+)$");
    std::smatch m;
    if (std::regex_search(inst.name, m, k_suffix)) {
        inst.vehicles = std::stoi(m[1].str());
    } else {
        inst.vehicles = static_cast<int>((inst.total_demand() + capacity - 1) / capacity);
    }
    bool unit_square = true;
    for (const auto& [x, y] : inst.coords)
        if (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0) unit_square = false;
    inst.costs = detail::rounded_euclidean_costs(inst.coords, unit_square ? 1000.0 : 1.0);
    inst.validate();
    return inst;
}

inline CvrpInstance parse_cvrplib(const std::string& text) {
    std::istringstream in(text);
    return parse_cvrplib(in);
}

/// Write the instance back out in canonical section order. Coordinates keep
/// full precision so parse(serialize(x)) == x.
inline void write_cvrplib(const CvrpInstance& inst, std::ostream& out) {
    out.precision(std::numeric_limits<double>::max_digits10);
    out << "NAME : " << inst.name << "\n";
    out << "TYPE : CVRP\n";
    out << "DIMENSION : " << inst.num_vertices() << "\n";
    out << "EDGE_WEIGHT_TYPE : EUC_2D\n";
    out << "CAPACITY : " << inst.capacity << "\n";
    out << "NODE_COORD_SECTION\n";
    for (int i = 0; i < inst.num_vertices(); ++i)
        out << (i + 1) << " " << inst.coords[i].first << " " << inst.coords[i].second << "\n";
    out << "DEMAND_SECTION\n";
    for (int i = 0; i < inst.num_vertices(); ++i)
        out << (i + 1) << " " << inst.demands[i] << "\n";
    out << "DEPOT_SECTION\n1\n-1\n";
    out << "EOF\n";
}

inline std::string serialize_cvrplib(const CvrpInstance& inst) {
    std::ostringstream out;
    write_cvrplib(inst, out);
    return out.str();
}

/// Random instance on the unit square: coords uniform, demands uniform in
/// [1,100], Q from a route-size factor r ~ U[5,12] as Q = ceil(r * avg
/// demand), K = minimum fleet. Costs are Euclidean x1000, rounded.
inline CvrpInstance generate_random(int n_customers, std::uint64_t seed) {
    if (n_customers < 3) throw ValidationError("generate_random needs n >= 3");
    std::mt19937_64 rng(splitmix64(seed));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<long long> dem(1, 100);

    CvrpInstance inst;
    inst.name = "random-" + std::to_string(seed) + "-n" + std::to_string(n_customers);
    inst.coords.resize(n_customers + 1);
    for (auto& c : inst.coords) {
        c.first = unit(rng);
        c.second = unit(rng);
    }
    inst.demands.resize(n_customers + 1);
    inst.demands[0] = 0;
    for (int i = 1; i <= n_customers; ++i) inst.demands[i] = dem(rng);

    const long long total = inst.total_demand();
    const double r = 5.0 + 7.0 * unit(rng);
    inst.capacity = static_cast<long long>(
        std::ceil(r * static_cast<double>(total) / static_cast<double>(n_customers)));
    inst.capacity = std::max<long long>(inst.capacity,
                                        *std::max_element(inst.demands.begin(), inst.demands.end()));
    inst.vehicles = static_cast<int>((total + inst.capacity - 1) / inst.capacity);
    inst.costs = detail::rounded_euclidean_costs(inst.coords, 1000.0);
    inst.validate();
    return inst;
}

inline bool operator==(const CvrpInstance& a, const CvrpInstance& b) {
    return a.name == b.name && a.coords == b.coords && a.demands == b.demands &&
           a.capacity == b.capacity && a.vehicles == b.vehicles && a.costs == b.costs;
}

} // namespace capsep
