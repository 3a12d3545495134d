#pragma once

#include <stdexcept>
#include <string>

namespace gtf {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input: expression text, config files, CLI arguments.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, int line, int col)
        : Error(msg + " (line " + std::to_string(line) + ", col " + std::to_string(col) + ")"),
          line(line), col(col), what_short(msg) {}
    int line;
    int col;
    std::string what_short;
};

// Evaluation hit a point outside a function's domain (ln of non-positive,
// division by zero). Carries the offending subexpression.
class DomainError : public Error {
public:
    DomainError(const std::string& msg, const std::string& subexpr)
        : Error(msg + " in `" + subexpr + "`"), subexpr(subexpr) {}
    std::string subexpr;
};

// A trajectory left the validity box of a vector field.
class BoxExit : public Error {
public:
    BoxExit(const std::string& msg, double t_exit) : Error(msg), t_exit(t_exit) {}
    double t_exit;
};

// Numerical procedure failed to converge (Newton, continuation, event search).
class SolverError : public Error {
public:
    explicit SolverError(const std::string& msg) : Error(msg) {}
};

// A planning stage failed after retries; carries the stage tag.
class StageError : public Error {
public:
    StageError(const std::string& stage, const std::string& msg)
        : Error("[" + stage + "] " + msg), stage(stage) {}
    std::string stage;
};

}  // namespace gtf
