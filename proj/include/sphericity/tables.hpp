#pragma once

// Design lists behind the published bound tables (1-5) and Type I error
// tables (6-9), in their printed row order.

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "sphericity/design.hpp"
#include "sphericity/errors.hpp"

namespace sphericity::tables {

struct BoundRow {
    int n, n1, p1, p2;
    MonotoneDesign design() const { return MonotoneDesign::from_n(n, n1, p1, p2); }
};

struct TypeOneRow {
    int N1, N2, p1, p2;
    double alpha;
    MonotoneDesign design() const { return {N1, N2, p1, p2}; }
};

inline std::vector<BoundRow> bound_table(int id) {
    std::vector<BoundRow> rows;
    auto grid = [&](int n, int n1) {
        for (int p1 : {5, 10, 15})
            for (int p2 : {5, 10, 15}) rows.push_back({n, n1, p1, p2});
    };
    switch (id) {
        case 1: grid(60, 40); break;
        case 2: grid(60, 50); break;
        case 3: grid(120, 80); break;
        case 4:
            for (auto [n, n1] : {std::pair{50, 40}, {100, 80}, {500, 400}, {5000, 4000}}) rows.push_back({n, n1, 20, 10});
            break;
        case 5:
            for (auto [n, n1, p, p1] : {std::array{50, 40, 30, 20}, {100, 80, 60, 40}, {1000, 800, 600, 400},
                                        {5000, 4000, 3000, 2000}})
                rows.push_back({n, n1, p1, p - p1});
            break;
        default: throw DomainError("no bound table " + std::to_string(id));
    }
    return rows;
}

/// (N1, N2) groups shared by tables 6-9.
inline const std::vector<std::pair<int, int>>& sample_size_groups() {
    static const std::vector<std::pair<int, int>> g{{50, 50},  {100, 100}, {200, 200}, {50, 100}, {100, 200},
                                                    {200, 400}, {50, 25},   {100, 50},  {200, 100}};
    return g;
}

inline std::vector<TypeOneRow> type_one_table(int id) {
    std::vector<TypeOneRow> rows;
    if (id == 6) {
        for (double alpha : {0.10, 0.05, 0.01})
            for (auto [N1, N2] : sample_size_groups()) rows.push_back({N1, N2, 2, 2, alpha});
        return rows;
    }
    double alpha = 0.0;
    switch (id) {
        case 7: alpha = 0.10; break;
        case 8: alpha = 0.05; break;
        case 9: alpha = 0.01; break;
        default: throw DomainError("no Type I error table " + std::to_string(id));
    }
    // p/N1 in {0.2, 0.4, 0.8}; p1/p2 in {1/4, 1, 4}.
    for (auto [N1, N2] : sample_size_groups())
        for (int ratio : {2, 4, 8}) {
            const int p = N1 * ratio / 10;
            for (auto [p1, p2] : {std::pair{p / 5, 4 * p / 5}, {p / 2, p / 2}, {4 * p / 5, p / 5}})
                rows.push_back({N1, N2, p1, p2, alpha});
        }
    return rows;
}

inline bool is_bound_table(int id) { return id >= 1 && id <= 5; }
inline bool is_type_one_table(int id) { return id >= 6 && id <= 9; }

}  // namespace sphericity::tables
