#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rfrac {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Zero cell counts, non-positive lengths, strips that do not fit.
class InvalidGeometry : public Error {
 public:
  using Error::Error;
};

/// Fracture paths that are not a contiguous run of free interior faces.
class TopologyError : public Error {
 public:
  using Error::Error;
};

/// Arguments outside the mathematical domain of a kernel.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Configuration errors. Carries every problem found, not only the first.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : Error(join(problems)), problems_(std::move(problems)) {}
  explicit ConfigError(const std::string& problem)
      : ConfigError(std::vector<std::string>{problem}) {}

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& problems) {
    std::string out;
    for (const auto& p : problems) {
      if (!out.empty()) out += '\n';
      out += p;
    }
    return out;
  }

  std::vector<std::string> problems_;
};

class ParseError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class IoError : public Error {
 public:
  IoError(const std::string& what, std::string path)
      : Error(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Pure-Neumann (floating) system whose net source does not vanish.
class SingularSystem : public Error {
 public:
  SingularSystem(const std::string& what, double compatibility_residual)
      : Error(what), residual_(compatibility_residual) {}
  double compatibility_residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}
  const std::vector<double>& residual_history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

class FixedPointError : public SolverFailure {
 public:
  FixedPointError(const std::string& what, double last_residual)
      : SolverFailure(what, {last_residual}), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

class ComparisonError : public Error {
 public:
  using Error::Error;
};

}  // namespace rfrac
