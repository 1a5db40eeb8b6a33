// Copyright (c) 2026 admmkit contributors
// Licensed under the Apache License, Version 2.0.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <random>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "admmkit/errors.hpp"
#include "admmkit/fixtures.hpp"
#include "admmkit/problem.hpp"

using namespace admmkit;

namespace {

BlockSpec scalar_block(double a, ObjectiveTerm obj = ZeroTerm{}, FeasibleSet set = FreeSet{}) {
  BlockSpec b;
  b.dim = 1;
  b.objective = std::move(obj);
  b.set = std::move(set);
  b.coupling = Eigen::MatrixXd::Constant(1, 1, a);
  return b;
}

BlockVector make_x(std::initializer_list<Eigen::VectorXd> segs) {
  BlockVector x;
  for (const auto& s : segs) x.segments.push_back(s);
  return x;
}

Eigen::VectorXd vec1(double a) { return Eigen::VectorXd::Constant(1, a); }

Eigen::VectorXd vec(std::initializer_list<double> vals) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double d : vals) v(i++) = d;
  return v;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an admmkit::Error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("primal residual matches hand-computed values") {
  auto p = assemble_problem({scalar_block(2.0)}, vec1(3.0));
  Eigen::VectorXd r = primal_residual(p, make_x({vec1(1.0)}));
  CHECK(r.size() == 1);
  CHECK(r(0) == -1.0);

  auto fx = divergence_fixture();
  Eigen::VectorXd r3 =
      primal_residual(fx.problem, make_x({vec1(1.0), vec1(1.0), vec1(1.0)}));
  CHECK(r3.isApprox(vec({3.0, 4.0, 5.0}), 0.0));
}

TEST_CASE("primal residual is zero at feasible points") {
  std::vector<BlockSpec> blocks;
  BlockSpec b1;
  b1.dim = 2;
  b1.coupling = Eigen::MatrixXd::Identity(2, 2);
  BlockSpec b2 = b1;
  blocks.push_back(b1);
  blocks.push_back(b2);
  auto p = assemble_problem(std::move(blocks), vec({1.0, 1.0}));
  Eigen::VectorXd r = primal_residual(p, make_x({vec({1.0, 0.0}), vec({0.0, 1.0})}));
  CHECK(r.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("primal residual rejects mismatched iterates") {
  auto p = assemble_problem({scalar_block(2.0)}, vec1(3.0));
  CHECK(code_of([&] { primal_residual(p, make_x({vec1(0.0), vec1(0.0)})); }) ==
        ErrorCode::DimensionMismatch);
  CHECK(code_of([&] { primal_residual(p, make_x({vec({1.0, 2.0})})); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("objective value sums per-block terms") {
  SUBCASE("all zero terms") {
    auto p = assemble_problem({scalar_block(1.0), scalar_block(1.0)}, vec1(0.0));
    CHECK(objective_value(p, make_x({vec1(4.0), vec1(-4.0)})) == 0.0);
  }
  SUBCASE("negative log of an affine form at the origin") {
    NegLogAffineTerm t;
    t.weight = 1.0;
    t.a = vec({1.0, 1.0, 1.0});
    t.offset = 1.0;
    BlockSpec b;
    b.dim = 3;
    b.objective = t;
    b.coupling = Eigen::MatrixXd::Ones(1, 3);
    auto p = assemble_problem({b}, vec1(0.0));
    CHECK(objective_value(p, make_x({vec({0.0, 0.0, 0.0})})) == 0.0);
  }
  SUBCASE("pure quadratic") {
    QuadraticTerm t;
    t.Q = 2.0 * Eigen::MatrixXd::Identity(2, 2);
    t.q = Eigen::VectorXd::Zero(2);
    BlockSpec b;
    b.dim = 2;
    b.objective = t;
    b.coupling = Eigen::MatrixXd::Ones(1, 2);
    auto p = assemble_problem({b}, vec1(0.0));
    CHECK(objective_value(p, make_x({vec({1.0, 1.0})})) == doctest::Approx(2.0));
  }
}

TEST_CASE("objective value is +infinity outside the feasible set") {
  BoxSet box;
  box.lower = vec1(0.0);
  box.upper = vec1(2.0);
  auto p = assemble_problem({scalar_block(1.0, ZeroTerm{}, box)}, vec1(0.0));

  CHECK(objective_value(p, make_x({vec1(2.0 + 1e-10)})) == 0.0);
  CHECK(std::isinf(objective_value(p, make_x({vec1(2.0 + 1e-6)}))));

  NegLogAffineTerm t;
  t.a = vec1(1.0);
  t.offset = 1.0;
  auto plog = assemble_problem({scalar_block(1.0, t)}, vec1(0.0));
  CHECK(std::isinf(objective_value(plog, make_x({vec1(-1.0)}))));
}

TEST_CASE("dual residual metric") {
  auto p = assemble_problem({scalar_block(1.0)}, vec1(0.0));
  auto x0 = make_x({vec1(0.0)});
  auto x3 = make_x({vec1(3.0)});
  CHECK(dual_residual_metric(p, x3, x3, 2.0) == 0.0);
  CHECK(dual_residual_metric(p, x0, x3, 2.0) == doctest::Approx(6.0));

  auto fx = divergence_fixture();
  auto a = make_x({vec1(1.0), vec1(-2.0), vec1(0.5)});
  auto b = make_x({vec1(0.0), vec1(1.0), vec1(2.0)});
  double expect = 0.0;
  for (int i = 0; i < 3; ++i) {
    Eigen::VectorXd d = fx.problem.blocks[static_cast<std::size_t>(i)].coupling *
                        (b.segments[static_cast<std::size_t>(i)] -
                         a.segments[static_cast<std::size_t>(i)]);
    expect = std::max(expect, d.norm());
  }
  CHECK(dual_residual_metric(fx.problem, a, b, 1.5) == doctest::Approx(1.5 * expect));
}

TEST_CASE("residual is affine in the iterate") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto doc = strongly_convex_instance(4, 11);
  const auto& p = doc.problem;
  for (int trial = 0; trial < 20; ++trial) {
    BlockVector x, y, sum;
    for (const auto& b : p.blocks) {
      Eigen::VectorXd xs(b.dim), ys(b.dim);
      for (Eigen::Index i = 0; i < b.dim; ++i) {
        xs(i) = gauss(rng);
        ys(i) = gauss(rng);
      }
      x.segments.push_back(xs);
      y.segments.push_back(ys);
      sum.segments.push_back(xs + ys);
    }
    Eigen::VectorXd lhs = primal_residual(p, sum);
    Eigen::VectorXd rhs = primal_residual(p, x) + primal_residual(p, y) + p.rhs;
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}

TEST_CASE("per-block contributions concatenate to the whole residual") {
  auto doc = strongly_convex_instance(6, 3);
  const auto& p = doc.problem;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  BlockVector x;
  for (const auto& b : p.blocks) {
    Eigen::VectorXd s(b.dim);
    for (Eigen::Index i = 0; i < b.dim; ++i) s(i) = gauss(rng);
    x.segments.push_back(s);
  }
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(p.row_dim());
  for (std::size_t i = 0; i < p.blocks.size(); ++i)
    acc += p.blocks[i].coupling * x.segments[i];
  CHECK((acc - p.rhs - primal_residual(p, x)).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("assembly validates shapes, sets, and objectives") {
  CHECK(code_of([] { assemble_problem({}, Eigen::VectorXd::Zero(1)); }) ==
        ErrorCode::DimensionMismatch);

  BlockSpec bad = scalar_block(1.0);
  bad.coupling = Eigen::MatrixXd::Ones(1, 2);
  CHECK(code_of([&] { assemble_problem({bad}, vec1(0.0)); }) == ErrorCode::DimensionMismatch);

  BlockSpec rows = scalar_block(1.0);
  rows.coupling = Eigen::MatrixXd::Ones(2, 1);
  CHECK(code_of([&] { assemble_problem({scalar_block(1.0), rows}, vec1(0.0)); }) ==
        ErrorCode::DimensionMismatch);

  QuadraticTerm asym;
  asym.Q = Eigen::MatrixXd(2, 2);
  asym.Q << 1.0, 2.0, 0.0, 1.0;
  asym.q = Eigen::VectorXd::Zero(2);
  BlockSpec bq;
  bq.dim = 2;
  bq.objective = asym;
  bq.coupling = Eigen::MatrixXd::Ones(1, 2);
  CHECK(code_of([&] { assemble_problem({bq}, vec1(0.0)); }) == ErrorCode::NonPsd);

  QuadraticTerm indef;
  indef.Q = -Eigen::MatrixXd::Identity(2, 2);
  indef.q = Eigen::VectorXd::Zero(2);
  bq.objective = indef;
  CHECK(code_of([&] { assemble_problem({bq}, vec1(0.0)); }) == ErrorCode::NonPsd);

  BoxSet crossed;
  crossed.lower = vec1(1.0);
  crossed.upper = vec1(0.0);
  CHECK(code_of([&] {
          assemble_problem({scalar_block(1.0, ZeroTerm{}, crossed)}, vec1(0.0));
        }) == ErrorCode::InvalidSet);

  NegLogAffineTerm badlog;
  badlog.weight = -1.0;
  badlog.a = vec1(1.0);
  CHECK(code_of([&] { assemble_problem({scalar_block(1.0, badlog)}, vec1(0.0)); }) ==
        ErrorCode::InvalidObjective);

  NonNegCappedSumSet cap;
  cap.cap = -2.0;
  CHECK(code_of([&] {
          assemble_problem({scalar_block(1.0, ZeroTerm{}, cap)}, vec1(0.0));
        }) == ErrorCode::InvalidSet);

  AffineEqualitySet eq;
  eq.E = Eigen::MatrixXd::Ones(2, 1);
  eq.d = vec({1.0, 1.0});
  CHECK(code_of([&] {
          assemble_problem({scalar_block(1.0, ZeroTerm{}, eq)}, vec1(0.0));
        }) == ErrorCode::InvalidSet);
}

TEST_CASE("assembly symmetrizes quadratic matrices within tolerance") {
  QuadraticTerm t;
  t.Q = Eigen::MatrixXd(2, 2);
  t.Q << 2.0, 1.0 + 1e-12, 1.0, 2.0;
  t.q = Eigen::VectorXd::Zero(2);
  BlockSpec b;
  b.dim = 2;
  b.objective = t;
  b.coupling = Eigen::MatrixXd::Ones(1, 2);
  auto p = assemble_problem({b}, vec1(0.0));
  const auto& stored = std::get<QuadraticTerm>(p.blocks[0].objective);
  CHECK((stored.Q - stored.Q.transpose()).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("term values and gradients") {
  LinearTerm lin;
  lin.q = vec({1.0, -2.0});
  Eigen::VectorXd x = vec({3.0, 4.0});
  CHECK(term_value(lin, x) == doctest::Approx(-5.0));
  CHECK(term_gradient(lin, x).isApprox(lin.q, 0.0));

  QuadraticTerm quad;
  quad.Q = Eigen::MatrixXd(2, 2);
  quad.Q << 2.0, 1.0, 1.0, 3.0;
  quad.q = vec({-1.0, 0.5});
  quad.r = 2.0;
  double expect = 0.5 * x.dot(quad.Q * x) + quad.q.dot(x) + quad.r;
  CHECK(term_value(quad, x) == doctest::Approx(expect));
  CHECK(term_gradient(quad, x).isApprox(quad.Q * x + quad.q, 1e-15));

  NegLogAffineTerm nl;
  nl.weight = 2.0;
  nl.a = vec({1.0, 1.0});
  nl.offset = 1.0;
  CHECK(term_value(nl, x) == doctest::Approx(-2.0 * std::log(8.0)));
  CHECK(term_gradient(nl, x).isApprox(-2.0 / 8.0 * nl.a, 1e-15));
  CHECK(std::isinf(term_value(nl, vec({-3.0, 0.0}))));
  CHECK(code_of([&] { term_gradient(nl, vec({-3.0, 0.0})); }) ==
        ErrorCode::NonFiniteEncountered);

  SmoothOracleTerm oracle;
  oracle.value = [](const Eigen::VectorXd& v) { return v.squaredNorm(); };
  oracle.gradient = [](const Eigen::VectorXd& v) { return Eigen::VectorXd(2.0 * v); };
  CHECK(term_value(oracle, x) == doctest::Approx(25.0));
  CHECK(term_gradient(oracle, x).isApprox(2.0 * x, 0.0));
}

TEST_CASE("set violation and projection of zero") {
  FreeSet free;
  CHECK(set_violation(free, vec({5.0, -7.0})) == 0.0);
  CHECK(set_projection_of_zero(free, 2).isZero(0.0));

  BoxSet box;
  box.lower = vec({1.0, -1.0});
  box.upper = vec({2.0, 1.0});
  CHECK(set_violation(box, vec({1.5, 0.0})) == 0.0);
  CHECK(set_violation(box, vec({3.0, 0.0})) == doctest::Approx(1.0));
  CHECK(set_projection_of_zero(box, 2).isApprox(vec({1.0, 0.0}), 0.0));

  NonNegCappedSumSet cap;
  cap.cap = 1.0;
  CHECK(set_violation(cap, vec({0.5, 0.4})) == 0.0);
  CHECK(set_violation(cap, vec({-0.3, 0.0})) == doctest::Approx(0.3));
  CHECK(set_violation(cap, vec({1.0, 1.0})) == doctest::Approx(1.0));
  CHECK(set_projection_of_zero(cap, 2).isZero(0.0));

  AffineEqualitySet eq;
  eq.E = Eigen::MatrixXd::Ones(1, 2);
  eq.d = vec1(2.0);
  CHECK(set_violation(eq, vec({1.0, 1.0})) == 0.0);
  CHECK(set_violation(eq, vec({0.0, 0.0})) == doctest::Approx(2.0));
  Eigen::VectorXd proj = set_projection_of_zero(eq, 2);
  CHECK(proj.isApprox(vec({1.0, 1.0}), 1e-12));
}

TEST_CASE("json round trip is value-exact for finite doubles") {
  QuadraticTerm quad;
  quad.Q = Eigen::MatrixXd(2, 2);
  double third = 1.0 / 3.0;
  quad.Q << 2.0, third, third, 1.0;
  quad.q = vec({std::sqrt(2.0), -0.1});
  quad.r = 0.7;
  BoxSet box;
  box.lower = vec({-std::numeric_limits<double>::infinity(), 0.1});
  box.upper = vec({3.3, std::numeric_limits<double>::infinity()});
  BlockSpec b1;
  b1.dim = 2;
  b1.objective = quad;
  b1.set = box;
  b1.coupling = Eigen::MatrixXd(2, 2);
  b1.coupling << 0.25, third, -1.0, std::sqrt(3.0);

  NegLogAffineTerm nl;
  nl.weight = 0.3;
  nl.a = vec({1.0, 2.0, 3.0});
  nl.offset = 1.5;
  NonNegCappedSumSet cap;
  cap.cap = 2.5;
  BlockSpec b2;
  b2.dim = 3;
  b2.objective = nl;
  b2.set = cap;
  b2.coupling = Eigen::MatrixXd::Random(2, 3);

  LinearTerm lin;
  lin.q = vec1(0.125);
  AffineEqualitySet eqset;
  eqset.E = Eigen::MatrixXd::Constant(1, 1, 2.0);
  eqset.d = vec1(1.0);
  BlockSpec b3;
  b3.dim = 1;
  b3.objective = lin;
  b3.set = eqset;
  b3.coupling = Eigen::MatrixXd::Constant(2, 1, third);

  ProblemDocument doc;
  doc.problem = assemble_problem({b1, b2, b3}, vec({0.1, -0.2}));
  doc.start = make_x({vec({0.5, 0.2}), vec({0.1, 0.1, 0.1}), vec1(0.5)});

  nlohmann::json j = problem_to_json(doc);
  ProblemDocument back = problem_from_json(j);

  REQUIRE(back.problem.block_count() == 3);
  CHECK(back.problem.rhs == doc.problem.rhs);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.problem.blocks[i].dim == doc.problem.blocks[i].dim);
    CHECK(back.problem.blocks[i].coupling == doc.problem.blocks[i].coupling);
  }
  const auto& q2 = std::get<QuadraticTerm>(back.problem.blocks[0].objective);
  CHECK(q2.Q == std::get<QuadraticTerm>(doc.problem.blocks[0].objective).Q);
  CHECK(q2.q == quad.q);
  CHECK(q2.r == quad.r);
  const auto& box2 = std::get<BoxSet>(back.problem.blocks[0].set);
  CHECK(box2.lower == box.lower);
  CHECK(box2.upper == box.upper);
  const auto& nl2 = std::get<NegLogAffineTerm>(back.problem.blocks[1].objective);
  CHECK(nl2.weight == nl.weight);
  CHECK(nl2.a == nl.a);
  CHECK(nl2.offset == nl.offset);
  CHECK(std::get<NonNegCappedSumSet>(back.problem.blocks[1].set).cap == cap.cap);
  const auto& eq2 = std::get<AffineEqualitySet>(back.problem.blocks[2].set);
  CHECK(eq2.E == eqset.E);
  CHECK(eq2.d == eqset.d);
  REQUIRE(back.start.has_value());
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(back.start->segments[i] == doc.start->segments[i]);

  CHECK(j["blocks"][0]["set"]["lower"][0] == "-inf");
  CHECK(j["blocks"][0]["set"]["upper"][1] == "inf");
}

TEST_CASE("json serialization rejects oracle objectives and malformed input") {
  SmoothOracleTerm oracle;
  oracle.value = [](const Eigen::VectorXd&) { return 0.0; };
  oracle.gradient = [](const Eigen::VectorXd& v) { return Eigen::VectorXd(0.0 * v); };
  ProblemDocument doc;
  doc.problem = assemble_problem({scalar_block(1.0, oracle)}, vec1(0.0));
  CHECK(code_of([&] { problem_to_json(doc); }) == ErrorCode::InvalidObjective);

  CHECK(code_of([] { problem_from_json(nlohmann::json{{"rhs", {0.0}}}); }) ==
        ErrorCode::ParseError);
  nlohmann::json badkind = {
      {"rhs", {0.0}},
      {"blocks",
       {{{"dim", 1},
         {"objective", {{"kind", "mystery"}}},
         {"set", {{"kind", "free"}}},
         {"coupling", {{1.0}}}}}}};
  CHECK(code_of([&] { problem_from_json(badkind); }) == ErrorCode::ParseError);
}

TEST_CASE("problem files load and save") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "admmkit_problem_io";
  fs::create_directories(dir);
  fs::path path = dir / "fixture.json";

  auto doc = divergence_fixture();
  save_problem(doc, path.string());
  auto back = load_problem(path.string());
  REQUIRE(back.problem.block_count() == 3);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(back.problem.blocks[i].coupling == doc.problem.blocks[i].coupling);
  CHECK(back.problem.rhs == doc.problem.rhs);
  REQUIRE(back.start.has_value());
  CHECK(back.start->flatten() == doc.start->flatten());

  CHECK(code_of([&] { load_problem((dir / "missing.json").string()); }) ==
        ErrorCode::IoError);

  fs::path mangled = dir / "mangled.json";
  std::FILE* f = std::fopen(mangled.string().c_str(), "w");
  REQUIRE(f != nullptr);
  std::fputs("{ not json", f);
  std::fclose(f);
  CHECK(code_of([&] { load_problem(mangled.string()); }) == ErrorCode::ParseError);
  fs::remove_all(dir);
}

TEST_CASE("block vectors flatten in block order") {
  auto doc = strongly_convex_instance(3, 21);
  BlockVector z = BlockVector::zeros_like(doc.problem);
  CHECK(z.block_count() == 3);
  CHECK(z.flatten().size() == doc.problem.total_dim());
  CHECK(z.flatten().isZero(0.0));

  BlockVector x = make_x({vec({1.0, 2.0}), vec1(3.0)});
  CHECK(x.flatten() == vec({1.0, 2.0, 3.0}));
}
