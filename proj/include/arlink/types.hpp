#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace arlink {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shape disagreement between operands.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A parameter is outside its mathematical domain (negative weight, r > n, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed input file; carries the 1-based line number of the offending line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Invalid experiment configuration; `field()` is the dotted path of the culprit.
class ConfigError : public Error {
public:
    ConfigError(const std::string& field, const std::string& what)
        : Error(field.empty() ? what : field + ": " + what), field_(field) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Numerical failure inside an iterative routine.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// File could not be opened or written.
class IoError : public Error {
public:
    using Error::Error;
};

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(what) + ": expected " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + ", got " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()));
    }
}

inline void require_shape(const Matrix& m, Index rows, Index cols, const char* what) {
    if (m.rows() != rows || m.cols() != cols) {
        throw DimensionError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                             std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()));
    }
}

/// Euclidean matrix product <A, B> = tr(A^T B).
inline double inner(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "inner product");
    return a.cwiseProduct(b).sum();
}

}  // namespace arlink
