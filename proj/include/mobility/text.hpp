#pragma once

// Locale-independent helpers for the delimited text files the toolkit reads
// and writes.

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "mobility/error.hpp"

namespace mobility::text {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

/// Parses a full field as a double; false on any trailing garbage.
inline bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, out);
    return res.ec == std::errc{} && res.ptr == end;
}

inline bool parse_int(std::string_view s, long long& out) {
    s = trim(s);
    if (s.empty()) return false;
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, out);
    return res.ec == std::errc{} && res.ptr == end;
}

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
    if (v == 0.0) return "0";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// A data row with its 1-based line number in the source file.
struct Row {
    std::size_t line = 0;
    std::vector<std::string_view> fields;
};

/// Comma-separated file held in memory. Blank lines and lines starting
/// with '#' are skipped; the first remaining line is the header.
class CsvFile {
public:
    explicit CsvFile(std::string path) : path_(std::move(path)) {
        std::ifstream in(path_, std::ios::binary);
        if (!in) throw InputError(path_, 0, "cannot open file");
        std::ostringstream ss;
        ss << in.rdbuf();
        buffer_ = ss.str();

        std::string_view all(buffer_);
        std::size_t line_no = 0;
        std::size_t start = 0;
        bool have_header = false;
        while (start <= all.size()) {
            const auto pos = all.find('\n', start);
            const auto line = all.substr(start, pos == std::string_view::npos ? all.size() - start : pos - start);
            ++line_no;
            const auto t = trim(line);
            if (!t.empty() && t.front() != '#') {
                if (!have_header) {
                    header_ = split(t, ',');
                    have_header = true;
                } else {
                    rows_.push_back({line_no, split(t, ',')});
                }
            }
            if (pos == std::string_view::npos) break;
            start = pos + 1;
        }
        if (!have_header) throw InputError(path_, 0, "empty file");
    }

    CsvFile(const CsvFile&) = delete;
    CsvFile& operator=(const CsvFile&) = delete;

    const std::string& path() const { return path_; }
    const std::vector<std::string_view>& header() const { return header_; }
    const std::vector<Row>& rows() const { return rows_; }

    /// Column index of `name`; throws if absent.
    std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < header_.size(); ++i)
            if (header_[i] == name) return i;
        throw InputError(path_, 1, "missing column '" + std::string(name) + "'");
    }

    double number(const Row& row, std::size_t col) const {
        double v = 0.0;
        if (col >= row.fields.size() || !parse_double(row.fields[col], v))
            throw InputError(path_, row.line, "malformed row: expected a number in column " + std::to_string(col + 1));
        return v;
    }

    long long integer(const Row& row, std::size_t col) const {
        long long v = 0;
        if (col >= row.fields.size() || !parse_int(row.fields[col], v))
            throw InputError(path_, row.line, "malformed row: expected an integer in column " + std::to_string(col + 1));
        return v;
    }

private:
    std::string path_;
    std::string buffer_;
    std::vector<std::string_view> header_;
    std::vector<Row> rows_;
};

}  // namespace mobility::text
