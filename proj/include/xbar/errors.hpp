#pragma once

#include <stdexcept>
#include <string>

namespace xbar {

// Bad user input: malformed config, missing file, unknown key.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string &msg) : std::runtime_error(msg) {}
};

// Violated API precondition (shape mismatch, out-of-range argument).
class ContractError : public std::logic_error {
public:
  explicit ContractError(const std::string &msg) : std::logic_error(msg) {}
};

// Syntax or structural error while parsing text formats (SPICE, DSL, CSV).
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string &msg, int line = 0)
      : std::runtime_error(line > 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
        line_(line) {}
  int line() const { return line_; }

private:
  int line_;
};

// Numerical failure: singular system, non-convergence, degenerate fit.
class SolveError : public std::runtime_error {
public:
  explicit SolveError(const std::string &msg) : std::runtime_error(msg) {}
};

} // namespace xbar
