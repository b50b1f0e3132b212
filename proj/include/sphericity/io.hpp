#pragma once

// CSV format for monotone samples: header x1..xp, one observation per row,
// complete rows first, then rows whose last p2 cells are empty.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "sphericity/errors.hpp"
#include "sphericity/model.hpp"

namespace sphericity::io {

struct SampleLayout {
    std::optional<int> N1 = std::nullopt;  ///< number of complete rows, if known
    std::optional<int> p1 = std::nullopt;  ///< observed coordinates in partial rows, if known
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

inline double parse_number(std::string_view cell, std::size_t row, std::size_t col) {
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw ParseError("not a number: '" + std::string(cell) + "'", row, col);
    return value;
}

}  // namespace detail

/// Parses a sample. Rows are reported by file line (the header is row 1).
/// With layout.N1 set, rows after the first N1 observations must be partial;
/// with layout.p1 set, partial rows must have exactly p1 filled cells.
inline MonotoneSample read_sample_csv(std::istream& in, const SampleLayout& layout = {}) {
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!detail::trim(line).empty()) break;
    }
    if (detail::trim(line).empty()) throw ParseError("empty file: expected header x1..xp", row == 0 ? 1 : row);
    const auto header = detail::split(line);
    const int p = static_cast<int>(header.size());
    for (int j = 0; j < p; ++j)
        if (header[j] != "x" + std::to_string(j + 1))
            throw ParseError("header must be x1..x" + std::to_string(p) + ", found '" + std::string(header[j]) + "'",
                             row, j + 1);

    std::vector<std::vector<double>> complete, partial;
    std::optional<int> p1 = layout.p1;
    while (std::getline(in, line)) {
        ++row;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split(line);
        if (static_cast<int>(cells.size()) != p)
            throw ParseError("expected " + std::to_string(p) + " cells, found " + std::to_string(cells.size()), row);
        int filled = 0;
        while (filled < p && !cells[filled].empty()) ++filled;
        for (int j = filled; j < p; ++j)
            if (!cells[j].empty())
                throw ParseError("value after an empty cell; missing values must be the trailing coordinates", row,
                                 j + 1);
        if (filled == 0) throw ParseError("observation has no values", row, 1);

        std::vector<double> obs(filled);
        for (int j = 0; j < filled; ++j) obs[j] = detail::parse_number(cells[j], row, j + 1);

        const int index = static_cast<int>(complete.size() + partial.size()) + 1;
        const bool must_be_partial = layout.N1 && index > *layout.N1;
        if (filled == p) {
            if (must_be_partial)
                throw ParseError("observation " + std::to_string(index) + " lies beyond N1 = " +
                                     std::to_string(*layout.N1) + " but has all " + std::to_string(p) +
                                     " coordinates filled",
                                 row);
            if (!partial.empty()) throw ParseError("complete observation after a partial one", row);
            complete.push_back(std::move(obs));
        } else {
            if (layout.N1 && !must_be_partial)
                throw ParseError("observation " + std::to_string(index) + " is within the first N1 = " +
                                     std::to_string(*layout.N1) + " but is missing coordinates",
                                 row, filled + 1);
            if (!p1) p1 = filled;
            if (filled != *p1)
                throw ParseError("partial observation has " + std::to_string(filled) + " values, expected " +
                                     std::to_string(*p1),
                                 row, filled + 1);
            partial.push_back(std::move(obs));
        }
    }
    if (layout.N1 && static_cast<int>(complete.size()) != *layout.N1)
        throw ParseError("expected N1 = " + std::to_string(*layout.N1) + " complete observations, found " +
                             std::to_string(complete.size()),
                         row);
    const int q1 = p1.value_or(p);
    if (q1 < 1 || q1 > p) throw ParseError("p1 must lie in [1, " + std::to_string(p) + "]", 1);

    Eigen::MatrixXd xc(p, complete.size());
    for (std::size_t j = 0; j < complete.size(); ++j)
        for (int i = 0; i < p; ++i) xc(i, j) = complete[j][i];
    Eigen::MatrixXd xp(q1, partial.size());
    for (std::size_t j = 0; j < partial.size(); ++j)
        for (int i = 0; i < q1; ++i) xp(i, j) = partial[j][i];
    return {std::move(xc), std::move(xp), q1};
}

inline MonotoneSample read_sample_csv(const std::string& path, const SampleLayout& layout = {}) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'", 0);
    return read_sample_csv(in, layout);
}

/// Generic header + rows CSV, used for replaying emitted result files.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name, or -1.
    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }
};

inline CsvTable read_table_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (detail::trim(line).empty()) continue;
        std::vector<std::string> cells;
        for (auto c : detail::split(line)) cells.emplace_back(c);
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size())
            throw ParseError("expected " + std::to_string(t.header.size()) + " cells, found " +
                                 std::to_string(cells.size()),
                             row);
        t.rows.push_back(std::move(cells));
    }
    if (t.header.empty()) throw ParseError("empty file: expected a header row", row == 0 ? 1 : row);
    return t;
}

inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void write_sample_csv(std::ostream& out, const MonotoneSample& s) {
    const int p = s.p();
    for (int j = 0; j < p; ++j) out << (j ? "," : "") << 'x' << j + 1;
    out << '\n';
    for (int c = 0; c < s.N1(); ++c) {
        for (int i = 0; i < p; ++i) out << (i ? "," : "") << format_double(s.complete()(i, c));
        out << '\n';
    }
    for (int c = 0; c < s.N2(); ++c) {
        for (int i = 0; i < p; ++i) {
            if (i) out << ',';
            if (i < s.p1()) out << format_double(s.partial()(i, c));
        }
        out << '\n';
    }
}

}  // namespace sphericity::io
