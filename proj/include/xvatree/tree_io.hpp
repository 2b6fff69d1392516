#pragma once

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "xvatree/lattice.hpp"
#include "xvatree/pricer.hpp"

namespace xvatree {

/// Shortest form that survives a text round trip: 17 significant digits.
inline std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline const char* tree_csv_header() {
    return "step,up_count,stock_price,value,effective_rate,exercised";
}

/// One row per node, ordered by step then up-count. The effective rate is
/// blank at expiry where nothing is discounted.
inline void write_tree_csv(std::ostream& out, const Lattice& lattice, const ValuedTree& tree) {
    if (tree.levels.size() != static_cast<std::size_t>(lattice.steps()) + 1)
        throw std::invalid_argument("valued tree does not match lattice");
    out << tree_csv_header() << '\n';
    for (int i = 0; i <= lattice.steps(); ++i) {
        for (int j = 0; j <= i; ++j) {
            const NodeValue& node = tree.levels[i][j];
            out << i << ',' << j << ',' << format_number(lattice.price_unchecked(i, j)) << ','
                << format_number(node.value) << ','
                << (std::isnan(node.effective_rate) ? std::string() : format_number(node.effective_rate))
                << ',' << (node.exercised ? "true" : "false") << '\n';
        }
    }
}

struct TreeRow {
    int step = 0;
    int up_count = 0;
    double stock_price = 0.0;
    double value = 0.0;
    double effective_rate = std::numeric_limits<double>::quiet_NaN();
    bool exercised = false;
};

inline std::vector<TreeRow> read_tree_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != tree_csv_header())
        throw std::runtime_error("tree CSV: unexpected header");
    std::vector<TreeRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (!line.empty() && line.back() == ',') fields.emplace_back();
        if (fields.size() != 6) throw std::runtime_error("tree CSV: expected 6 fields in '" + line + "'");
        TreeRow row;
        row.step = std::stoi(fields[0]);
        row.up_count = std::stoi(fields[1]);
        row.stock_price = std::stod(fields[2]);
        row.value = std::stod(fields[3]);
        if (!fields[4].empty()) row.effective_rate = std::stod(fields[4]);
        if (fields[5] == "true") row.exercised = true;
        else if (fields[5] != "false") throw std::runtime_error("tree CSV: bad exercised flag");
        rows.push_back(row);
    }
    return rows;
}

}  // namespace xvatree
