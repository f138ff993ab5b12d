#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "levymle/errors.hpp"

namespace levymle {

/// Uniformly sampled d-dimensional observations, row-major N x d.
struct TimeSeries {
    double delta = 1.0;
    std::size_t dim = 1;
    std::vector<double> values;
    std::vector<std::string> labels;
    std::vector<double> times;  ///< empty unless the source carried time stamps

    std::size_t size() const noexcept { return dim == 0 ? 0 : values.size() / dim; }

    std::span<const double> row(std::size_t t) const noexcept { return {values.data() + t * dim, dim}; }

    double at(std::size_t t, std::size_t i) const noexcept { return values[t * dim + i]; }

    /// Column i as a contiguous vector.
    std::vector<double> column(std::size_t i) const {
        std::vector<double> c(size());
        for (std::size_t t = 0; t < c.size(); ++t) c[t] = at(t, i);
        return c;
    }

    void validate() const {
        if (!(delta > 0.0) || !std::isfinite(delta)) throw DataError("time series: sampling step must be positive");
        if (dim == 0 || values.size() % dim != 0) throw DataError("time series: ragged value matrix");
        if (size() < 2) throw DataError("time series: at least two observations required");
        for (std::size_t t = 0; t < size(); ++t)
            for (std::size_t i = 0; i < dim; ++i)
                if (!std::isfinite(at(t, i)))
                    throw DataError("time series: non-finite value at row " + std::to_string(t + 1) +
                                    ", column " + std::to_string(i + 1));
        if (!times.empty()) check_uniform(times, delta);
    }

    /// Time stamps are uniform when every step is within 1e-6 relative of delta.
    static void check_uniform(std::span<const double> t, double delta) {
        for (std::size_t k = 1; k < t.size(); ++k) {
            const double step = t[k] - t[k - 1];
            if (std::abs(step - delta) > 1e-6 * delta)
                throw DataError("time series: non-uniform time stamps at row " + std::to_string(k + 1) +
                                " (step " + std::to_string(step) + ", expected " + std::to_string(delta) + ")");
        }
    }
};

namespace csv_detail {

inline std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline std::string trim(std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double parse_cell(const std::string& raw, std::size_t line, std::size_t col) {
    const std::string s = trim(raw);
    if (s.empty())
        throw DataError("csv: empty cell at line " + std::to_string(line) + ", column " + std::to_string(col));
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size())
        throw DataError("csv: unparsable cell '" + s + "' at line " + std::to_string(line) + ", column " +
                        std::to_string(col));
    if (!std::isfinite(v))
        throw DataError("csv: non-finite cell at line " + std::to_string(line) + ", column " + std::to_string(col));
    return v;
}

inline std::string format(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace csv_detail

/// Reads `t,x1,...,xd` (delta inferred from uniform stamps) or `x1,...,xd`
/// (delta from the caller). The header row is mandatory.
inline TimeSeries ingest_csv(const std::string& path, std::optional<double> delta = std::nullopt) {
    using namespace csv_detail;
    std::ifstream in(path);
    if (!in) throw DataError("csv: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("csv: '" + path + "' is empty");
    auto header = split(line);
    for (auto& h : header) h = trim(h);
    if (header.empty() || header[0].empty()) throw DataError("csv: missing header row in '" + path + "'");
    for (const auto& h : header) {
        std::size_t used = 0;
        try {
            std::stod(h, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used > 0 && used == h.size()) throw DataError("csv: header row missing in '" + path + "'");
    }
    const bool stamped = header[0] == "t" || header[0] == "time";
    const std::size_t first = stamped ? 1 : 0;
    if (header.size() <= first) throw DataError("csv: no value columns in '" + path + "'");

    TimeSeries ts;
    ts.dim = header.size() - first;
    ts.labels.assign(header.begin() + static_cast<long>(first), header.end());
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size())
            throw DataError("csv: line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                            " cells, header has " + std::to_string(header.size()));
        if (stamped) ts.times.push_back(parse_cell(cells[0], lineno, 1));
        for (std::size_t c = first; c < cells.size(); ++c) ts.values.push_back(parse_cell(cells[c], lineno, c + 1));
    }
    if (ts.size() < 2) throw DataError("csv: '" + path + "' needs at least two data rows");
    if (stamped) {
        ts.delta = (ts.times.back() - ts.times.front()) / static_cast<double>(ts.times.size() - 1);
        if (!(ts.delta > 0.0)) throw DataError("csv: time stamps must increase");
        TimeSeries::check_uniform(ts.times, ts.delta);
    } else {
        if (!delta) throw ConfigError("csv: '" + path + "' has no time column and no sampling step was given");
        ts.delta = *delta;
    }
    ts.validate();
    return ts;
}

/// Writes `t,<labels>` with 17 significant digits, LF line endings.
inline void write_csv(const std::string& path, const TimeSeries& ts, bool with_time = true) {
    using csv_detail::format;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("csv: cannot write '" + path + "'");
    if (with_time) out << "t";
    for (std::size_t i = 0; i < ts.dim; ++i) {
        if (with_time || i > 0) out << ',';
        out << (i < ts.labels.size() ? ts.labels[i] : "x" + std::to_string(i + 1));
    }
    out << '\n';
    for (std::size_t t = 0; t < ts.size(); ++t) {
        if (with_time) out << format(ts.times.empty() ? ts.delta * static_cast<double>(t) : ts.times[t]);
        for (std::size_t i = 0; i < ts.dim; ++i) {
            if (with_time || i > 0) out << ',';
            out << format(ts.at(t, i));
        }
        out << '\n';
    }
    if (!out) throw DataError("csv: write to '" + path + "' failed");
}

/// Two-column (or wider) numeric table with a header.
inline void write_table(const std::string& path, const std::vector<std::string>& header,
                        const std::vector<std::vector<double>>& columns) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("csv: cannot write '" + path + "'");
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
    const std::size_t n = columns.empty() ? 0 : columns[0].size();
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << csv_detail::format(columns[c][r]);
        out << '\n';
    }
    if (!out) throw DataError("csv: write to '" + path + "' failed");
}

}  // namespace levymle
