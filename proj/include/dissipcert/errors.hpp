#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dissipcert {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnknownTransfer : public Error {
public:
    explicit UnknownTransfer(const std::string& name)
        : Error("unknown transfer function '" + name + "' (expected tanh or arctan)"), name_(name) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

/// ψ was asked for a slope outside (0, s0].
class DomainError : public Error {
public:
    DomainError(double y, double s0)
        : Error("psi argument " + std::to_string(y) + " outside (0, " + std::to_string(s0) + "]"),
          y_(y), s0_(s0) {}
    double value() const noexcept { return y_; }
    double s0() const noexcept { return s0_; }

private:
    double y_;
    double s0_;
};

class PoleError : public Error {
public:
    PoleError(double lambda, std::size_t index)
        : Error("secular function evaluated at pole d[" + std::to_string(index) + "] = " +
                std::to_string(lambda)),
          index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class DegenerateCurvature : public Error {
public:
    explicit DegenerateCurvature(std::size_t index)
        : Error("curvature d[" + std::to_string(index) + "] is zero"), index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// Two ratios q_i = l_i / c_i coincide; the reduced problem is not constructed.
class DegenerateQ : public Error {
public:
    DegenerateQ(std::size_t i, std::size_t j)
        : Error("coincident ratios q[" + std::to_string(i) + "] and q[" + std::to_string(j) + "]"),
          first_(i), second_(j) {}
    std::size_t first() const noexcept { return first_; }
    std::size_t second() const noexcept { return second_; }

private:
    std::size_t first_;
    std::size_t second_;
};

class ConvergenceFailure : public Error {
public:
    explicit ConvergenceFailure(const std::string& what, std::vector<double> last = {})
        : Error(what), last_(std::move(last)) {}
    /// Last iterate, when the failing routine has one.
    const std::vector<double>& last_iterate() const noexcept { return last_; }

private:
    std::vector<double> last_;
};

class UnsupportedDimension : public Error {
public:
    explicit UnsupportedDimension(std::size_t n)
        : Error("dimension " + std::to_string(n) + " is not supported here"), n_(n) {}
    std::size_t dimension() const noexcept { return n_; }

private:
    std::size_t n_;
};

class UnboundedDomain : public Error {
public:
    using Error::Error;
};

/// A structural bound that the uniqueness theory guarantees was observed to fail.
class TheoremViolation : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Malformed input text; the message is prefixed with source:line:column.
class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, std::size_t column, const std::string& what)
        : Error(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
          line_(line), column_(column) {}
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

}  // namespace dissipcert
