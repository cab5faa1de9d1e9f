#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace betafit {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Malformed input text. line == 0 when no single line is at fault.
class ParseError : public Error {
  public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

// Well-formed input that violates a documented precondition (negative lambda, d_i > n-1, ...).
class InputError : public Error {
  public:
    using Error::Error;
};

// Total edge count is 0 or C(n,2): the unpenalized mean direction has no finite optimum.
class DegenerateGraphError : public Error {
  public:
    using Error::Error;
};

class DivergedError : public Error {
  public:
    DivergedError(const std::string& what, int iterations) : Error(what), iterations_(iterations) {}
    int iterations() const { return iterations_; }

  private:
    int iterations_;
};

class SelectionError : public Error {
  public:
    using Error::Error;
};

// Residual normalization undefined because some fitted probability saturated.
class NormalizationError : public Error {
  public:
    using Error::Error;
};

class TuneError : public Error {
  public:
    TuneError(const std::string& what, std::vector<std::pair<double, std::string>> failures)
        : Error(what), failures_(std::move(failures)) {}
    const std::vector<std::pair<double, std::string>>& failures() const { return failures_; }

  private:
    std::vector<std::pair<double, std::string>> failures_;
};

class MonteCarloError : public Error {
  public:
    using Error::Error;
};

}  // namespace betafit
