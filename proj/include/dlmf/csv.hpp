#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dlmf/dataset.hpp"

namespace dlmf {

namespace detail {

//! strtod wrapper that accepts the whole cell, including subnormals (which
//! std::stod rejects via ERANGE).
inline double parse_double_cell(const std::string& cell) {
    if (cell.empty()) throw std::invalid_argument("empty cell");
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size()) throw std::invalid_argument("trailing characters");
    return v;
}

inline std::vector<std::string> split_line(const std::string& line, char delimiter) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, delimiter)) cells.push_back(cell);
    if (!line.empty() && line.back() == delimiter) cells.emplace_back();
    return cells;
}

inline std::string strip_quotes(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    while (!s.empty() && s.front() == ' ') s.erase(s.begin());
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

} // namespace detail

//! Reads a delimited numeric table, extracting `target_column` as the
//! response and keeping the remaining columns as predictors in file order.
inline Dataset load_csv(const std::string& path, char delimiter, const std::string& target_column) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("csv: cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("csv: '" + path + "' is empty");
    std::vector<std::string> header = detail::split_line(line, delimiter);
    for (auto& h : header) h = detail::strip_quotes(h);

    std::ptrdiff_t target = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == target_column) target = static_cast<std::ptrdiff_t>(c);
    }
    if (target < 0) {
        throw std::runtime_error("csv: target column '" + target_column + "' not found in '" + path + "'");
    }

    std::vector<std::string> names;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (static_cast<std::ptrdiff_t>(c) != target) names.push_back(header[c]);
    }

    std::vector<std::vector<double>> rows;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> cells = detail::split_line(line, delimiter);
        if (cells.size() != header.size()) {
            throw std::runtime_error("csv: row " + std::to_string(lineno) + " has " +
                                     std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(header.size()));
        }
        std::vector<double> row(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const std::string cell = detail::strip_quotes(cells[c]);
            try {
                row[c] = detail::parse_double_cell(cell);
            } catch (...) {
                throw std::runtime_error("csv: cannot parse '" + cell + "' at row " +
                                         std::to_string(lineno) + ", column '" + header[c] + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("csv: '" + path + "' has no data rows");

    Dataset ds;
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index d = static_cast<Eigen::Index>(header.size()) - 1;
    ds.x.resize(n, d);
    ds.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index k = 0;
        for (std::size_t c = 0; c < rows[i].size(); ++c) {
            if (static_cast<std::ptrdiff_t>(c) == target) {
                ds.y(i) = rows[i][c];
            } else {
                ds.x(i, k++) = rows[i][c];
            }
        }
    }
    ds.feature_names = names;
    validate_dataset(ds);
    return ds;
}

//! Reads a delimited numeric table with a header but no response column.
inline Eigen::MatrixXd load_matrix_csv(const std::string& path, char delimiter) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("csv: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("csv: '" + path + "' is empty");
    const std::size_t cols = detail::split_line(line, delimiter).size();
    std::vector<std::vector<double>> rows;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> cells = detail::split_line(line, delimiter);
        if (cells.size() != cols) {
            throw std::runtime_error("csv: row " + std::to_string(lineno) + " has " +
                                     std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(cols));
        }
        std::vector<double> row(cols);
        for (std::size_t c = 0; c < cols; ++c) {
            const std::string cell = detail::strip_quotes(cells[c]);
            try {
                row[c] = detail::parse_double_cell(cell);
            } catch (...) {
                throw std::runtime_error("csv: cannot parse '" + cell + "' at row " +
                                         std::to_string(lineno) + ", column " + std::to_string(c + 1));
            }
        }
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
    }
    return m;
}

//! Canonical dataset CSV: comma-delimited, 17 significant digits, response
//! written last under the given name. Reading it back with load_csv
//! reproduces the dataset bit for bit.
inline void write_dataset_csv(std::ostream& os, const Dataset& ds,
                              const std::string& target_name = "y") {
    for (Eigen::Index j = 0; j < ds.d(); ++j) {
        const std::string name =
            ds.feature_names ? (*ds.feature_names)[j] : "x" + std::to_string(j + 1);
        os << name << ',';
    }
    os << target_name << '\n';
    char buf[40];
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        for (Eigen::Index j = 0; j < ds.d(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", ds.x(i, j));
            os << buf << ',';
        }
        std::snprintf(buf, sizeof(buf), "%.17g", ds.y(i));
        os << buf << '\n';
    }
}

inline void write_dataset_csv(const std::string& path, const Dataset& ds,
                              const std::string& target_name = "y") {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("csv: cannot write '" + path + "'");
    write_dataset_csv(os, ds, target_name);
}

} // namespace dlmf
