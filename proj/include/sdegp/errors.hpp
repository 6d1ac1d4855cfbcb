#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace sdegp {

/// Base of all library errors. code() is a short stable tag the CLI prints as
/// a machine-parsable prefix ("E_CONFIG: ...").
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

/// Invalid configuration value: bad hyperparameters, counts, tolerances.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& m) : Error("E_CONFIG", m) {}
};

/// API misuse: mismatched dimensions, unknown identifiers, bad call order.
class UsageError : public Error {
public:
  explicit UsageError(const std::string& m) : Error("E_USAGE", m) {}
};

/// Numerical failure in the optimization/linear-algebra layer.
class NumericalError : public Error {
public:
  explicit NumericalError(const std::string& m) : Error("E_NUMERIC", m) {}
};

/// Cholesky failure; carries the index of the first non-positive pivot so the
/// caller can decide whether a jitter retry is worthwhile.
class DecompositionError : public NumericalError {
public:
  DecompositionError(const std::string& m, int pivot)
      : NumericalError(m), pivot_(pivot) {}
  int pivot() const noexcept { return pivot_; }

private:
  int pivot_ = -1;
};

/// Failure inside the variational inference updates.
class InferenceError : public Error {
public:
  explicit InferenceError(const std::string& m) : Error("E_INFER", m) {}
};

/// Every restart of a fit failed.
class FitError : public Error {
public:
  explicit FitError(const std::string& m) : Error("E_FIT", m) {}
};

class SimulationError : public Error {
public:
  explicit SimulationError(const std::string& m) : Error("E_SIM", m) {}
};

/// Malformed or inconsistent input series (CSV ingestion).
class IngestionError : public Error {
public:
  explicit IngestionError(const std::string& m) : Error("E_INGEST", m) {}
};

/// Malformed model file or config file.
class ParseError : public Error {
public:
  explicit ParseError(const std::string& m) : Error("E_PARSE", m) {}
};

/// Invalid data handed to a preprocessing transform.
class PreprocessError : public Error {
public:
  explicit PreprocessError(const std::string& m) : Error("E_PREPROC", m) {}
};

}  // namespace sdegp
