// Copyright (c) 2026 admmkit contributors
// Licensed under the Apache License, Version 2.0.

#ifndef ADMMKIT_ERRORS_HPP
#define ADMMKIT_ERRORS_HPP

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace admmkit {

enum class ErrorCode {
  DimensionMismatch,
  InvalidSet,
  NonPsd,
  InvalidObjective,
  InvalidConfig,
  SingularKkt,
  SingularBlock,
  NonFiniteEncountered,
  MaxIterExceeded,
  UnsupportedSubproblem,
  ObserverFailure,
  SequentialEngineRejected,
  Infeasible,
  InfeasibleScenario,
  ParseError,
  InvalidCase,
  IoError,
};

const char* to_string(ErrorCode code);

/// Library-wide exception. `code()` identifies the failure class so callers
/// can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Iteration budget exhausted; carries the best iterate seen so far.
class MaxIterError : public Error {
 public:
  MaxIterError(const std::string& message, Eigen::VectorXd best);
  const Eigen::VectorXd& best_iterate() const noexcept { return best_; }

 private:
  Eigen::VectorXd best_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace admmkit

#endif  // ADMMKIT_ERRORS_HPP
