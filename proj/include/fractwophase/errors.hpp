#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fractwophase {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exponent outside its admissible range (p <= 1, non-positive eps, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Fields that live on different grids, masks that do not match, ...
class DomainError : public Error {
 public:
  using Error::Error;
};

class OracleSizeError : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, std::size_t iterations, double residual,
                 int stage = -1)
      : Error(what), iterations_(iterations), residual_(residual), stage_(stage) {}

  std::size_t iterations() const { return iterations_; }
  double residual() const { return residual_; }
  // Index in the eps schedule, -1 when raised outside a continuation.
  int stage() const { return stage_; }

 private:
  std::size_t iterations_;
  double residual_;
  int stage_;
};

class FixedPointNonConvergence : public Error {
 public:
  FixedPointNonConvergence(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

class DegenerateFit : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A check whose hypotheses do not hold for the given input.
class UnsupportedRegime : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fractwophase
