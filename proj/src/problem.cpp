// Copyright (c) 2026 admmkit contributors
// Licensed under the Apache License, Version 2.0.

#include "admmkit/problem.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace admmkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string block_label(std::size_t i) {
  std::ostringstream os;
  os << "block " << i;
  return os.str();
}

void check_quadratic(const QuadraticTerm& t, Eigen::Index dim, const std::string& where) {
  if (t.Q.rows() != dim || t.Q.cols() != dim || t.q.size() != dim)
    fail(ErrorCode::DimensionMismatch, where + ": quadratic term shape");
  const double scale = std::max(1.0, t.Q.cwiseAbs().maxCoeff());
  const double asym = (t.Q - t.Q.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale)
    fail(ErrorCode::NonPsd, where + ": quadratic matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (t.Q + t.Q.transpose()),
                                                    Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
  if (lo < -1e-10 * std::max(1.0, hi))
    fail(ErrorCode::NonPsd, where + ": quadratic matrix has a negative eigenvalue");
}

void check_objective(const ObjectiveTerm& term, Eigen::Index dim, const std::string& where) {
  if (std::holds_alternative<ZeroTerm>(term)) return;
  if (const auto* lin = std::get_if<LinearTerm>(&term)) {
    if (lin->q.size() != dim) fail(ErrorCode::DimensionMismatch, where + ": linear term length");
    return;
  }
  if (const auto* quad = std::get_if<QuadraticTerm>(&term)) {
    check_quadratic(*quad, dim, where);
    return;
  }
  if (const auto* nl = std::get_if<NegLogAffineTerm>(&term)) {
    if (nl->a.size() != dim) fail(ErrorCode::DimensionMismatch, where + ": log term length");
    if (!(nl->weight > 0.0))
      fail(ErrorCode::InvalidObjective, where + ": log term weight must be positive");
    if (!(nl->offset > 0.0))
      fail(ErrorCode::InvalidObjective, where + ": log term offset must be positive");
    return;
  }
  const auto& oracle = std::get<SmoothOracleTerm>(term);
  if (!oracle.value || !oracle.gradient)
    fail(ErrorCode::InvalidObjective, where + ": oracle term missing callbacks");
  if (!(oracle.lipschitz > 0.0))
    fail(ErrorCode::InvalidObjective, where + ": oracle Lipschitz bound must be positive");
}

void check_set(const FeasibleSet& set, Eigen::Index dim, const std::string& where) {
  if (const auto* box = std::get_if<BoxSet>(&set)) {
    if (box->lower.size() != dim || box->upper.size() != dim)
      fail(ErrorCode::DimensionMismatch, where + ": box bound lengths");
    for (Eigen::Index i = 0; i < dim; ++i) {
      if (std::isnan(box->lower[i]) || std::isnan(box->upper[i]) ||
          box->lower[i] > box->upper[i])
        fail(ErrorCode::InvalidSet, where + ": box bounds crossed");
    }
    return;
  }
  if (const auto* cap = std::get_if<NonNegCappedSumSet>(&set)) {
    if (!(cap->cap >= 0.0)) fail(ErrorCode::InvalidSet, where + ": cap must be nonnegative");
    return;
  }
  if (const auto* eq = std::get_if<AffineEqualitySet>(&set)) {
    if (eq->E.cols() != dim || eq->d.size() != eq->E.rows())
      fail(ErrorCode::DimensionMismatch, where + ": equality set shape");
    if (eq->E.rows() > 0) {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(eq->E);
      if (lu.rank() < eq->E.rows())
        fail(ErrorCode::InvalidSet, where + ": equality rows are rank deficient");
    }
    return;
  }
  // FreeSet / ZeroSumAcrossBlocksSet carry no data.
}

}  // namespace

Eigen::Index BlockProblem::total_dim() const {
  Eigen::Index n = 0;
  for (const auto& b : blocks) n += b.dim;
  return n;
}

Eigen::VectorXd BlockVector::flatten() const {
  Eigen::Index n = 0;
  for (const auto& s : segments) n += s.size();
  Eigen::VectorXd out(n);
  Eigen::Index at = 0;
  for (const auto& s : segments) {
    out.segment(at, s.size()) = s;
    at += s.size();
  }
  return out;
}

BlockVector BlockVector::zeros_like(const BlockProblem& p) {
  BlockVector v;
  v.segments.reserve(p.blocks.size());
  for (const auto& b : p.blocks) v.segments.push_back(Eigen::VectorXd::Zero(b.dim));
  return v;
}

BlockProblem assemble_problem(std::vector<BlockSpec> blocks, Eigen::VectorXd rhs) {
  if (blocks.empty()) fail(ErrorCode::DimensionMismatch, "a problem needs at least one block");
  const Eigen::Index m = rhs.size();
  std::optional<Eigen::Index> zero_sum_dim;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    auto& b = blocks[i];
    const std::string where = block_label(i);
    if (b.dim <= 0) fail(ErrorCode::DimensionMismatch, where + ": dimension must be positive");
    if (b.coupling.rows() != m || b.coupling.cols() != b.dim)
      fail(ErrorCode::DimensionMismatch, where + ": coupling must be " + std::to_string(m) +
                                             " x " + std::to_string(b.dim));
    check_objective(b.objective, b.dim, where);
    check_set(b.set, b.dim, where);
    if (std::holds_alternative<ZeroSumAcrossBlocksSet>(b.set)) {
      if (zero_sum_dim && *zero_sum_dim != b.dim)
        fail(ErrorCode::InvalidSet, where + ": zero-sum blocks must share one dimension");
      zero_sum_dim = b.dim;
    }
    if (auto* quad = std::get_if<QuadraticTerm>(&b.objective))
      quad->Q = 0.5 * (quad->Q + quad->Q.transpose()).eval();
  }
  BlockProblem p;
  p.blocks = std::move(blocks);
  p.rhs = std::move(rhs);
  return p;
}

Eigen::VectorXd primal_residual(const BlockProblem& p, const BlockVector& x) {
  if (x.block_count() != p.block_count())
    fail(ErrorCode::DimensionMismatch, "iterate has wrong block count");
  Eigen::VectorXd r = -p.rhs;
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    if (x.segments[i].size() != p.blocks[i].dim)
      fail(ErrorCode::DimensionMismatch, block_label(i) + ": segment length");
    r += p.blocks[i].coupling * x.segments[i];
  }
  return r;
}

double term_value(const ObjectiveTerm& term, const Eigen::VectorXd& x) {
  if (std::holds_alternative<ZeroTerm>(term)) return 0.0;
  if (const auto* lin = std::get_if<LinearTerm>(&term)) return lin->q.dot(x);
  if (const auto* quad = std::get_if<QuadraticTerm>(&term))
    return 0.5 * x.dot(quad->Q * x) + quad->q.dot(x) + quad->r;
  if (const auto* nl = std::get_if<NegLogAffineTerm>(&term)) {
    const double s = nl->a.dot(x) + nl->offset;
    if (!(s > 0.0)) return kInf;
    return -nl->weight * std::log(s);
  }
  return std::get<SmoothOracleTerm>(term).value(x);
}

Eigen::VectorXd term_gradient(const ObjectiveTerm& term, const Eigen::VectorXd& x) {
  if (std::holds_alternative<ZeroTerm>(term)) return Eigen::VectorXd::Zero(x.size());
  if (const auto* lin = std::get_if<LinearTerm>(&term)) return lin->q;
  if (const auto* quad = std::get_if<QuadraticTerm>(&term)) return quad->Q * x + quad->q;
  if (const auto* nl = std::get_if<NegLogAffineTerm>(&term)) {
    const double s = nl->a.dot(x) + nl->offset;
    if (!(s > 0.0))
      fail(ErrorCode::NonFiniteEncountered, "log term gradient requested outside its domain");
    return (-nl->weight / s) * nl->a;
  }
  return std::get<SmoothOracleTerm>(term).gradient(x);
}

double set_violation(const FeasibleSet& set, const Eigen::VectorXd& x) {
  if (const auto* box = std::get_if<BoxSet>(&set)) {
    double v = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (x[i] < box->lower[i]) v = std::max(v, box->lower[i] - x[i]);
      if (x[i] > box->upper[i]) v = std::max(v, x[i] - box->upper[i]);
    }
    return v;
  }
  if (const auto* cap = std::get_if<NonNegCappedSumSet>(&set)) {
    double v = std::max(0.0, x.sum() - cap->cap);
    if (x.size() > 0) v = std::max(v, -x.minCoeff());
    return std::max(v, 0.0);
  }
  if (const auto* eq = std::get_if<AffineEqualitySet>(&set)) {
    if (eq->E.rows() == 0) return 0.0;
    return (eq->E * x - eq->d).cwiseAbs().maxCoeff();
  }
  return 0.0;  // FreeSet, ZeroSumAcrossBlocksSet
}

double objective_value(const BlockProblem& p, const BlockVector& x) {
  if (x.block_count() != p.block_count())
    fail(ErrorCode::DimensionMismatch, "iterate has wrong block count");
  double total = 0.0;
  std::optional<Eigen::VectorXd> zero_sum;
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    const auto& b = p.blocks[i];
    const auto& xi = x.segments[i];
    if (xi.size() != b.dim) fail(ErrorCode::DimensionMismatch, block_label(i) + ": segment length");
    if (set_violation(b.set, xi) > kSetMembershipTol) return kInf;
    if (std::holds_alternative<ZeroSumAcrossBlocksSet>(b.set)) {
      if (!zero_sum) zero_sum = Eigen::VectorXd::Zero(xi.size());
      *zero_sum += xi;
    }
    const double v = term_value(b.objective, xi);
    if (!std::isfinite(v)) return kInf;
    total += v;
  }
  if (zero_sum && zero_sum->cwiseAbs().maxCoeff() > kSetMembershipTol) return kInf;
  return total;
}

double dual_residual_metric(const BlockProblem& p, const BlockVector& prev,
                            const BlockVector& curr, double rho) {
  if (prev.block_count() != p.block_count() || curr.block_count() != p.block_count())
    fail(ErrorCode::DimensionMismatch, "iterates have wrong block count");
  double worst = 0.0;
  for (std::size_t i = 0; i < p.blocks.size(); ++i)
    worst = std::max(worst,
                     (p.blocks[i].coupling * (curr.segments[i] - prev.segments[i])).norm());
  return rho * worst;
}

Eigen::VectorXd set_projection_of_zero(const FeasibleSet& set, Eigen::Index dim) {
  if (const auto* box = std::get_if<BoxSet>(&set)) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
    for (Eigen::Index i = 0; i < dim; ++i)
      x[i] = std::min(std::max(0.0, box->lower[i]), box->upper[i]);
    return x;
  }
  if (const auto* eq = std::get_if<AffineEqualitySet>(&set)) {
    if (eq->E.rows() == 0) return Eigen::VectorXd::Zero(dim);
    // Least-norm point of {x : Ex = d}: x = E'(EE')^{-1} d.
    Eigen::MatrixXd gram = eq->E * eq->E.transpose();
    return eq->E.transpose() * gram.ldlt().solve(eq->d);
  }
  // FreeSet, NonNegCappedSumSet (origin is feasible), ZeroSumAcrossBlocksSet.
  return Eigen::VectorXd::Zero(dim);
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

json scalar_to_json(double v) {
  if (std::isfinite(v)) return v;
  if (v > 0.0) return "inf";
  if (v < 0.0) return "-inf";
  fail(ErrorCode::InvalidObjective, "cannot serialize NaN");
}

double scalar_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  fail(ErrorCode::ParseError, where + ": expected a number or \"inf\"/\"-inf\"");
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(scalar_to_json(v[i]));
  return out;
}

Eigen::VectorXd vector_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) fail(ErrorCode::ParseError, where + ": expected an array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = scalar_from_json(j[i], where);
  return v;
}

json matrix_to_json(const Eigen::MatrixXd& mat) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < mat.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < mat.cols(); ++c) row.push_back(scalar_to_json(mat(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) fail(ErrorCode::ParseError, where + ": expected an array of rows");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  Eigen::MatrixXd mat;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array()) fail(ErrorCode::ParseError, where + ": expected nested arrays");
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      mat.resize(rows, cols);
    }
    if (static_cast<Eigen::Index>(row.size()) != cols)
      fail(ErrorCode::ParseError, where + ": ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c)
      mat(r, c) = scalar_from_json(row[static_cast<std::size_t>(c)], where);
  }
  if (rows == 0) mat.resize(0, 0);
  return mat;
}

json objective_to_json(const ObjectiveTerm& term) {
  json j;
  if (std::holds_alternative<ZeroTerm>(term)) {
    j["kind"] = "zero";
  } else if (const auto* lin = std::get_if<LinearTerm>(&term)) {
    j["kind"] = "linear";
    j["q"] = vector_to_json(lin->q);
  } else if (const auto* quad = std::get_if<QuadraticTerm>(&term)) {
    j["kind"] = "quadratic";
    j["Q"] = matrix_to_json(quad->Q);
    j["q"] = vector_to_json(quad->q);
    j["r"] = scalar_to_json(quad->r);
  } else if (const auto* nl = std::get_if<NegLogAffineTerm>(&term)) {
    j["kind"] = "neg_log_affine";
    j["weight"] = scalar_to_json(nl->weight);
    j["a"] = vector_to_json(nl->a);
    j["offset"] = scalar_to_json(nl->offset);
  } else {
    fail(ErrorCode::InvalidObjective, "oracle objectives cannot be serialized");
  }
  return j;
}

ObjectiveTerm objective_from_json(const json& j, const std::string& where) {
  const std::string kind = j.value("kind", "");
  if (kind == "zero") return ZeroTerm{};
  if (kind == "linear") return LinearTerm{vector_from_json(j.at("q"), where)};
  if (kind == "quadratic")
    return QuadraticTerm{matrix_from_json(j.at("Q"), where), vector_from_json(j.at("q"), where),
                         scalar_from_json(j.at("r"), where)};
  if (kind == "neg_log_affine")
    return NegLogAffineTerm{scalar_from_json(j.at("weight"), where),
                            vector_from_json(j.at("a"), where),
                            scalar_from_json(j.at("offset"), where)};
  fail(ErrorCode::ParseError, where + ": unknown objective kind \"" + kind + "\"");
}

json set_to_json(const FeasibleSet& set) {
  json j;
  if (std::holds_alternative<FreeSet>(set)) {
    j["kind"] = "free";
  } else if (const auto* box = std::get_if<BoxSet>(&set)) {
    j["kind"] = "box";
    j["lower"] = vector_to_json(box->lower);
    j["upper"] = vector_to_json(box->upper);
  } else if (const auto* cap = std::get_if<NonNegCappedSumSet>(&set)) {
    j["kind"] = "non_neg_capped_sum";
    j["cap"] = scalar_to_json(cap->cap);
  } else if (const auto* eq = std::get_if<AffineEqualitySet>(&set)) {
    j["kind"] = "affine_equality";
    j["E"] = matrix_to_json(eq->E);
    j["d"] = vector_to_json(eq->d);
  } else {
    j["kind"] = "zero_sum_across_blocks";
  }
  return j;
}

FeasibleSet set_from_json(const json& j, const std::string& where) {
  const std::string kind = j.value("kind", "");
  if (kind == "free") return FreeSet{};
  if (kind == "box")
    return BoxSet{vector_from_json(j.at("lower"), where), vector_from_json(j.at("upper"), where)};
  if (kind == "non_neg_capped_sum") return NonNegCappedSumSet{scalar_from_json(j.at("cap"), where)};
  if (kind == "affine_equality")
    return AffineEqualitySet{matrix_from_json(j.at("E"), where),
                             vector_from_json(j.at("d"), where)};
  if (kind == "zero_sum_across_blocks") return ZeroSumAcrossBlocksSet{};
  fail(ErrorCode::ParseError, where + ": unknown set kind \"" + kind + "\"");
}

}  // namespace

nlohmann::json problem_to_json(const ProblemDocument& doc) {
  json j;
  j["rhs"] = vector_to_json(doc.problem.rhs);
  json blocks = json::array();
  for (const auto& b : doc.problem.blocks) {
    json jb;
    jb["dim"] = b.dim;
    jb["objective"] = objective_to_json(b.objective);
    jb["set"] = set_to_json(b.set);
    jb["coupling"] = matrix_to_json(b.coupling);
    blocks.push_back(std::move(jb));
  }
  j["blocks"] = std::move(blocks);
  if (doc.start) {
    json s = json::array();
    for (const auto& seg : doc.start->segments) s.push_back(vector_to_json(seg));
    j["start"] = std::move(s);
  }
  return j;
}

ProblemDocument problem_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("rhs") || !j.contains("blocks"))
    fail(ErrorCode::ParseError, "problem document needs \"rhs\" and \"blocks\"");
  Eigen::VectorXd rhs = vector_from_json(j.at("rhs"), "rhs");
  std::vector<BlockSpec> blocks;
  const json& jb = j.at("blocks");
  if (!jb.is_array()) fail(ErrorCode::ParseError, "\"blocks\" must be an array");
  for (std::size_t i = 0; i < jb.size(); ++i) {
    const json& one = jb[i];
    const std::string where = block_label(i);
    BlockSpec spec;
    if (!one.contains("dim") || !one.at("dim").is_number_integer())
      fail(ErrorCode::ParseError, where + ": integer \"dim\" required");
    spec.dim = one.at("dim").get<Eigen::Index>();
    spec.objective = objective_from_json(one.at("objective"), where + " objective");
    spec.set = set_from_json(one.at("set"), where + " set");
    spec.coupling = matrix_from_json(one.at("coupling"), where + " coupling");
    if (spec.coupling.size() == 0) spec.coupling.resize(rhs.size(), spec.dim);
    blocks.push_back(std::move(spec));
  }
  ProblemDocument doc;
  doc.problem = assemble_problem(std::move(blocks), std::move(rhs));
  if (j.contains("start")) {
    const json& js = j.at("start");
    if (!js.is_array() || js.size() != doc.problem.blocks.size())
      fail(ErrorCode::ParseError, "\"start\" must list one segment per block");
    BlockVector start;
    for (std::size_t i = 0; i < js.size(); ++i) {
      Eigen::VectorXd seg = vector_from_json(js[i], "start");
      if (seg.size() != doc.problem.blocks[i].dim)
        fail(ErrorCode::ParseError, "\"start\" segment " + std::to_string(i) + " length");
      start.segments.push_back(std::move(seg));
    }
    doc.start = std::move(start);
  }
  return doc;
}

ProblemDocument load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ParseError, path + ": " + e.what());
  }
  return problem_from_json(j);
}

void save_problem(const ProblemDocument& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  out << problem_to_json(doc).dump(2) << "\n";
}

}  // namespace admmkit
