// CSV and small file helpers. Doubles are written with round-trip precision
// ("%.17g") so artifacts are byte-stable across reruns and reload exactly.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pareto_forge/common.hpp"
#include "pareto_forge/scalarize.hpp"

namespace pforge {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// One row per point, header `f0,f1,...,fm`.
inline std::string points_to_csv(const std::vector<ObjectiveVector>& points) {
    require(!points.empty(), "points_to_csv: empty point set");
    std::ostringstream out;
    for (std::size_t i = 0; i < points.front().size(); ++i) out << (i ? "," : "") << "f" << i;
    out << "\n";
    for (const auto& p : points) {
        require(p.size() == points.front().size(), "points_to_csv: ragged rows");
        for (std::size_t i = 0; i < p.size(); ++i) out << (i ? "," : "") << format_double(p[i]);
        out << "\n";
    }
    return out.str();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

inline std::vector<ObjectiveVector> points_from_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) throw IoError("points csv: missing header");
    const auto header = split_csv_line(line);
    if (header.empty() || header[0] != "f0") throw IoError("points csv: header must start with f0");
    std::vector<ObjectiveVector> points;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw IoError("points csv: row with " + std::to_string(fields.size()) +
                          " fields, expected " + std::to_string(header.size()));
        ObjectiveVector p;
        p.reserve(fields.size());
        for (const auto& f : fields) {
            try {
                p.push_back(std::stod(f));
            } catch (const std::exception&) {
                throw IoError("points csv: bad number '" + f + "'");
            }
        }
        points.push_back(std::move(p));
    }
    if (points.empty()) throw IoError("points csv: no data rows");
    return points;
}

}  // namespace pforge
