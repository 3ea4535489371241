#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace survht::csv {

/// Comma-separated table with a mandatory header row.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw std::invalid_argument("csv: missing column '" + name + "'");
    }

    [[nodiscard]] bool has_column(const std::string& name) const {
        for (const auto& h : header)
            if (h == name) return true;
        return false;
    }
};

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline Table read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("csv: cannot open file '" + path + "'");
    Table table;
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("csv: empty file '" + path + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    table.header = split_line(line);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != table.header.size()) {
            throw std::invalid_argument("csv: row " + std::to_string(table.rows.size() + 1) +
                                        " has " + std::to_string(cells.size()) +
                                        " cells, expected " + std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    return table;
}

/// Strict double parse; `row` is the 1-based data row used in error messages.
inline double parse_double(const std::string& cell, std::size_t row, const std::string& col) {
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    while (first != last && (*first == ' ' || *first == '\t')) ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    while (ptr != last && (*ptr == ' ' || *ptr == '\t')) ++ptr;
    if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
        throw std::invalid_argument("csv: non-numeric cell in column '" + col + "' at row " +
                                    std::to_string(row));
    }
    return value;
}

/// Shortest text that round-trips a double (17 significant digits).
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline void write(const std::string& path, const std::vector<std::string>& header,
                  const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("csv: cannot write file '" + path + "'");
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << '\n';
    }
    if (!out) throw std::runtime_error("csv: write failed for '" + path + "'");
}

} // namespace survht::csv
