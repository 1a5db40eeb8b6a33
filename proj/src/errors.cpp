// Copyright (c) 2026 admmkit contributors
// Licensed under the Apache License, Version 2.0.

#include "admmkit/errors.hpp"

#include <utility>

namespace admmkit {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidSet: return "InvalidSet";
    case ErrorCode::NonPsd: return "NonPsd";
    case ErrorCode::InvalidObjective: return "InvalidObjective";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::SingularKkt: return "SingularKkt";
    case ErrorCode::SingularBlock: return "SingularBlock";
    case ErrorCode::NonFiniteEncountered: return "NonFiniteEncountered";
    case ErrorCode::MaxIterExceeded: return "MaxIterExceeded";
    case ErrorCode::UnsupportedSubproblem: return "UnsupportedSubproblem";
    case ErrorCode::ObserverFailure: return "ObserverFailure";
    case ErrorCode::SequentialEngineRejected: return "SequentialEngineRejected";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::InfeasibleScenario: return "InfeasibleScenario";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidCase: return "InvalidCase";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

MaxIterError::MaxIterError(const std::string& message, Eigen::VectorXd best)
    : Error(ErrorCode::MaxIterExceeded, message), best_(std::move(best)) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace admmkit
