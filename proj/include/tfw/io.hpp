#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tfw/error.hpp"

namespace tfw::io {

using Json = nlohmann::ordered_json;

/// Column-major table written as CSV with a single header row.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    void add(std::string name, std::vector<double> values)
    {
        if (!columns.empty() && values.size() != columns.front().size())
            throw InvalidArgument("table column '" + name + "' has a different length");
        header.push_back(std::move(name));
        columns.push_back(std::move(values));
    }
    std::size_t rows() const noexcept { return columns.empty() ? 0 : columns.front().size(); }
};

inline std::string format_number(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw Error("write to '" + path.string() + "' failed");
}

inline void write_csv(const std::filesystem::path& path, const Table& t)
{
    std::string s;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
        if (c) s += ',';
        s += t.header[c];
    }
    s += '\n';
    for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            if (c) s += ',';
            s += format_number(t.columns[c][r]);
        }
        s += '\n';
    }
    write_text(path, s);
}

inline void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

/// Non-finite doubles become null rather than invalid JSON.
inline Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

// --- read-back validation ---------------------------------------------------

/// Checks that a CSV file has exactly the expected header and that every row
/// carries that many numeric fields.
inline void validate_csv(const std::filesystem::path& path, const std::vector<std::string>& header)
{
    std::ifstream in(path);
    if (!in) throw Error("schema check: cannot read '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw Error("schema check: '" + path.string() + "' is empty");
    std::string expected;
    for (std::size_t c = 0; c < header.size(); ++c) expected += (c ? "," : "") + header[c];
    if (line != expected)
        throw Error("schema check: '" + path.string() + "' header is '" + line + "', expected '" + expected + "'");
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        std::istringstream ss(line);
        std::string cell;
        std::size_t n = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                std::stod(cell, &used);
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw Error("schema check: '" + path.string() + "' row " + std::to_string(row) +
                            " has a non-numeric field '" + cell + "'");
            }
            ++n;
        }
        if (n != header.size())
            throw Error("schema check: '" + path.string() + "' row " + std::to_string(row) + " has " +
                        std::to_string(n) + " fields, expected " + std::to_string(header.size()));
    }
}

/// Checks that a JSON file parses to an object holding every listed key.
/// Keys may be dotted paths into nested objects.
inline void validate_json(const std::filesystem::path& path, const std::vector<std::string>& keys)
{
    std::ifstream in(path);
    if (!in) throw Error("schema check: cannot read '" + path.string() + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw Error("schema check: '" + path.string() + "' is not valid JSON: " + e.what());
    }
    for (const auto& key : keys) {
        const Json* node = &j;
        std::size_t start = 0;
        for (;;) {
            const auto dot = key.find('.', start);
            const std::string part = key.substr(start, dot - start);
            if (!node->is_object() || !node->contains(part))
                throw Error("schema check: '" + path.string() + "' lacks field '" + key + "'");
            node = &(*node)[part];
            if (dot == std::string::npos) break;
            start = dot + 1;
        }
    }
}

}  // namespace tfw::io
