#pragma once
// Graph sequences and plain-text persistence: MatrixMarket matrices and
// RFC-4180 CSV tables.

#include "arlink/types.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace arlink {

/// Ordered snapshots A_0..A_T of a weighted graph on n nodes.
/// Validated on construction: square, same size, finite, nonnegative, length >= 2.
class GraphSequence {
public:
    explicit GraphSequence(std::vector<Matrix> snapshots) : snapshots_(std::move(snapshots)) {
        if (snapshots_.size() < 2) {
            throw DomainError("graph sequence needs at least two snapshots, got " +
                              std::to_string(snapshots_.size()));
        }
        const Index n = snapshots_.front().rows();
        if (n < 1) throw DimensionError("graph sequence: empty snapshot");
        for (std::size_t t = 0; t < snapshots_.size(); ++t) {
            const Matrix& a = snapshots_[t];
            if (a.rows() != n || a.cols() != n) {
                throw DimensionError("snapshot " + std::to_string(t) + " is " +
                                     std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                     ", expected " + std::to_string(n) + "x" + std::to_string(n));
            }
            if (!a.allFinite()) {
                throw DomainError("snapshot " + std::to_string(t) + " has non-finite entries");
            }
            if ((a.array() < 0.0).any()) {
                throw DomainError("snapshot " + std::to_string(t) + " has negative entries");
            }
        }
    }

    Index n() const noexcept { return snapshots_.front().rows(); }
    /// Number of transitions T (the sequence holds T+1 snapshots).
    Index horizon() const noexcept { return static_cast<Index>(snapshots_.size()) - 1; }
    std::size_t size() const noexcept { return snapshots_.size(); }

    const Matrix& operator[](std::size_t t) const { return snapshots_.at(t); }
    const Matrix& last() const noexcept { return snapshots_.back(); }
    const std::vector<Matrix>& snapshots() const noexcept { return snapshots_; }

private:
    std::vector<Matrix> snapshots_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
        if (i >= s.size()) break;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
        out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

inline double parse_double(std::string_view tok, std::size_t line) {
    double v = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (!tok.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw ParseError("non-numeric token '" + std::string(tok) + "'", line);
    }
    return v;
}

inline long long parse_int(std::string_view tok, std::size_t line) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ParseError("expected an integer, got '" + std::string(tok) + "'", line);
    }
    return v;
}

inline std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace detail

/// Shortest text that reads back to the same double: 17 significant digits.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Parses MatrixMarket text (array or coordinate; real, integer or pattern;
/// general or symmetric). Coordinate entries not listed are zero.
inline Matrix parse_matrix_market(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;

    if (!std::getline(in, line)) throw ParseError("empty file", 1);
    ++lineno;
    const auto header = detail::split_ws(detail::trim(line));
    if (header.size() != 5 || detail::lower(header[0]) != "%%matrixmarket" ||
        detail::lower(header[1]) != "matrix") {
        throw ParseError("malformed header, expected '%%MatrixMarket matrix <format> <field> <symmetry>'",
                         lineno);
    }
    const std::string format = detail::lower(header[2]);
    const std::string field = detail::lower(header[3]);
    const std::string symmetry = detail::lower(header[4]);
    if (format != "array" && format != "coordinate") {
        throw ParseError("unknown format '" + std::string(header[2]) + "'", lineno);
    }
    if (field != "real" && field != "integer" && field != "double" &&
        !(field == "pattern" && format == "coordinate")) {
        throw ParseError("unsupported field '" + std::string(header[3]) + "'", lineno);
    }
    if (symmetry != "general" && symmetry != "symmetric") {
        throw ParseError("unsupported symmetry '" + std::string(header[4]) + "'", lineno);
    }
    const bool symmetric = symmetry == "symmetric";
    const bool pattern = field == "pattern";

    // Next non-comment, non-blank line is the size line.
    std::vector<std::string_view> size_tokens;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = detail::trim(line);
        if (t.empty() || t.front() == '%') continue;
        size_tokens = detail::split_ws(t);
        break;
    }
    const std::size_t expected_size_tokens = format == "array" ? 2 : 3;
    if (size_tokens.size() != expected_size_tokens) {
        throw ParseError("malformed size line", lineno);
    }
    const long long rows = detail::parse_int(size_tokens[0], lineno);
    const long long cols = detail::parse_int(size_tokens[1], lineno);
    if (rows < 0 || cols < 0) throw ParseError("negative dimension", lineno);
    if (symmetric && rows != cols) throw ParseError("symmetric matrix must be square", lineno);
    const std::size_t size_line = lineno;

    Matrix m = Matrix::Zero(rows, cols);

    auto next_data_line = [&](std::vector<std::string_view>& toks, std::string& storage) {
        while (std::getline(in, storage)) {
            ++lineno;
            auto t = detail::trim(storage);
            if (t.empty() || t.front() == '%') continue;
            toks = detail::split_ws(t);
            return true;
        }
        return false;
    };

    std::vector<std::string_view> toks;
    if (format == "array") {
        // Column-major; symmetric arrays list the lower triangle only.
        for (long long j = 0; j < cols; ++j) {
            for (long long i = symmetric ? j : 0; i < rows; ++i) {
                if (!next_data_line(toks, line)) {
                    throw ParseError("dimension mismatch: fewer values than declared " +
                                         std::to_string(rows) + "x" + std::to_string(cols),
                                     lineno);
                }
                if (toks.size() != 1) throw ParseError("expected one value per line", lineno);
                const double v = detail::parse_double(toks[0], lineno);
                m(i, j) = v;
                if (symmetric) m(j, i) = v;
            }
        }
    } else {
        const long long nnz = detail::parse_int(size_tokens[2], size_line);
        if (nnz < 0) throw ParseError("negative entry count", size_line);
        for (long long k = 0; k < nnz; ++k) {
            if (!next_data_line(toks, line)) {
                throw ParseError("dimension mismatch: fewer entries than declared " +
                                     std::to_string(nnz),
                                 lineno);
            }
            if (toks.size() != (pattern ? 2u : 3u)) {
                throw ParseError("malformed coordinate entry", lineno);
            }
            const long long i = detail::parse_int(toks[0], lineno);
            const long long j = detail::parse_int(toks[1], lineno);
            if (i < 1 || i > rows || j < 1 || j > cols) {
                throw ParseError("dimension mismatch: index (" + std::to_string(i) + "," +
                                     std::to_string(j) + ") outside " + std::to_string(rows) +
                                     "x" + std::to_string(cols),
                                 lineno);
            }
            const double v = pattern ? 1.0 : detail::parse_double(toks[2], lineno);
            m(i - 1, j - 1) = v;
            if (symmetric) m(j - 1, i - 1) = v;
        }
    }
    if (next_data_line(toks, line)) {
        throw ParseError("dimension mismatch: more values than declared", lineno);
    }
    return m;
}

inline Matrix read_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return parse_matrix_market(in);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what(), e.line());
    }
}

/// Dense MatrixMarket text, array format, column-major value order, %.17g.
inline std::string format_matrix_market(const Matrix& m) {
    if (!m.allFinite()) throw DomainError("write_matrix: matrix has non-finite entries");
    std::string out = "%%MatrixMarket matrix array real general\n";
    out += std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
    for (Index j = 0; j < m.cols(); ++j) {
        for (Index i = 0; i < m.rows(); ++i) {
            out += format_double(m(i, j));
            out += '\n';
        }
    }
    return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

inline void write_matrix(const Matrix& m, const std::filesystem::path& path) {
    write_text(path, format_matrix_market(m));
}

// ---------------------------------------------------------------------------
// CSV

inline std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

/// Accumulates an RFC-4180 table (CRLF line endings, header row first).
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : columns_(header.size()) {
        add_row(header);
    }

    void add_row(const std::vector<std::string>& fields) {
        if (fields.size() != columns_) {
            throw DimensionError("csv row has " + std::to_string(fields.size()) +
                                 " fields, expected " + std::to_string(columns_));
        }
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) text_ += ',';
            text_ += csv_escape(fields[i]);
        }
        text_ += "\r\n";
    }

    const std::string& str() const noexcept { return text_; }
    void save(const std::filesystem::path& path) const { write_text(path, text_); }

private:
    std::size_t columns_;
    std::string text_;
};

/// Parses RFC-4180 text back into rows of fields.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        any = true;
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else {
            field += c;
        }
    }
    if (any) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace arlink
