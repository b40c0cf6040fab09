#include <cmath>
#include <random>

#include "doctest.h"

#include "stencilgrad/examples.hpp"
#include "stencilgrad/interp.hpp"
#include "stencilgrad/symdiff.hpp"
#include "support/problems.hpp"

using namespace stencilgrad;
using testsupport::P;

namespace {

std::vector<ActiveRead> reads_of(const Problem& p) {
  return active_reads(p.nest.body.front().rhs, p.nest.counters, activity_of(p));
}

ExprPtr partial_of(const Problem& p, const std::string& array, std::vector<long long> off) {
  return differentiate(p.nest.body.front().rhs, ActiveRead{array, std::move(off)},
                       p.nest.counters);
}

}  // namespace

TEST_CASE("active reads of the bundled stencils") {
  Problem wave = example_problem("wave3d");
  auto reads = reads_of(wave);
  REQUIRE(reads.size() == 8);
  using V = std::vector<long long>;
  CHECK(reads[0] == ActiveRead{"u_1", V{-1, 0, 0}});
  CHECK(reads[1] == ActiveRead{"u_1", V{0, -1, 0}});
  CHECK(reads[2] == ActiveRead{"u_1", V{0, 0, -1}});
  CHECK(reads[3] == ActiveRead{"u_1", V{0, 0, 0}});
  CHECK(reads[4] == ActiveRead{"u_1", V{0, 0, 1}});
  CHECK(reads[5] == ActiveRead{"u_1", V{0, 1, 0}});
  CHECK(reads[6] == ActiveRead{"u_1", V{1, 0, 0}});
  CHECK(reads[7] == ActiveRead{"u_2", V{0, 0, 0}});

  Problem lap = example_problem("lap1d");
  auto lr = reads_of(lap);
  REQUIRE(lr.size() == 3);
  CHECK(lr[0].offset == V{-1});
  CHECK(lr[1].offset == V{0});
  CHECK(lr[2].offset == V{1});

  // A body with no active reads has none.
  Problem inert = lap;
  inert.nest.body.front().rhs = P("2.0*c[i]");
  CHECK(reads_of(inert).empty());
}

TEST_CASE("wave3d partials match the published adjoint coefficients") {
  Problem p = example_problem("wave3d");
  auto center = partial_of(p, "u_1", {0, 0, 0});
  CHECK(exprs_equal(center, simplify(P("-6*D*c[i][j][k] + 2.0"))));
  CHECK(to_input_string(center) == "-6*D*c[i][j][k] + 2.0");

  auto u2 = partial_of(p, "u_2", {0, 0, 0});
  CHECK(is_const_value(u2, -1.0));

  auto west = partial_of(p, "u_1", {-1, 0, 0});
  CHECK(exprs_equal(west, simplify(P("D*c[i][j][k]"))));
}

TEST_CASE("lap1d partials") {
  Problem p = example_problem("lap1d");
  CHECK(exprs_equal(partial_of(p, "u", {-1}), simplify(P("2.0*c[i]"))));
  CHECK(exprs_equal(partial_of(p, "u", {0}), simplify(P("-3.0*c[i]"))));
  CHECK(exprs_equal(partial_of(p, "u", {1}), simplify(P("4.0*c[i]"))));
}

TEST_CASE("burgers partials carry the upwind selectors") {
  Problem p = example_problem("burgers1d");
  auto west = partial_of(p, "u_1", {-1});
  CHECK(exprs_equal(west, simplify(P("C*max(u_1[i], 0) + D"))));

  auto east = partial_of(p, "u_1", {1});
  CHECK(exprs_equal(east, simplify(P("-C*min(u_1[i], 0) + D"))));

  auto center = partial_of(p, "u_1", {0});
  // Exactly one selector credits max at ties (u_1[i] >= 0) and one credits
  // min on the mirrored condition (-u_1[i] >= 0).
  int ge_selectors = 0;
  std::vector<std::string> conds;
  for_each_node(center, [&](const Expr& n) {
    if (n.kind == ExprKind::Select) {
      ge_selectors++;
      conds.push_back(to_input_string(n.operands[0]));
    }
  });
  CHECK(ge_selectors == 2);
  REQUIRE(conds.size() == 2);
  CHECK(((conds[0] == "u_1[i] >= 0" && conds[1] == "-u_1[i] >= 0") ||
         (conds[0] == "-u_1[i] >= 0" && conds[1] == "u_1[i] >= 0")));
}

TEST_CASE("partials of linear bodies read no active arrays") {
  for (const char* name : {"lap1d", "wave3d"}) {
    Problem p = example_problem(name);
    const ActivitySpec activity = activity_of(p);
    CHECK(linear_in_active(p.nest.body.front().rhs, activity));
    for (const auto& ar : reads_of(p)) {
      auto s = differentiate(p.nest.body.front().rhs, ar, p.nest.counters);
      bool reads_active = false;
      for_each_node(s, [&](const Expr& n) {
        if (n.kind == ExprKind::ArrayRead && activity.is_active(n.name)) reads_active = true;
      });
      CHECK_FALSE(reads_active);
    }
  }
  Problem b = example_problem("burgers1d");
  CHECK_FALSE(linear_in_active(b.nest.body.front().rhs, activity_of(b)));
}

TEST_CASE("linear zero-constant bodies satisfy sum(S_l * input_l) = body") {
  for (const char* name : {"lap1d", "wave3d"}) {
    Problem p = example_problem(name);
    Env env = make_env(p, {{"n", 9}}, 99);
    const auto& rhs = p.nest.body.front().rhs;
    std::vector<long long> point(p.nest.counters.size(), 3);
    double body = eval_expr(rhs, env, p.nest.counters, point);
    double total = 0.0;
    for (const auto& ar : reads_of(p)) {
      auto s = differentiate(rhs, ar, p.nest.counters);
      std::vector<long long> cell(point);
      for (std::size_t i = 0; i < cell.size(); i++) cell[i] += ar.offset[i];
      total += eval_expr(s, env, p.nest.counters, point) * env.grids.at(ar.array).at(cell);
    }
    CHECK(std::fabs(total - body) <= 1e-12 * (1.0 + std::fabs(body)));
  }
}

TEST_CASE("derivatives agree with central finite differences") {
  std::mt19937_64 rng(31);
  auto check_problem = [&](const Problem& p, std::uint64_t seed) {
    Env env = make_env(p, {{"n", 10}}, seed);
    const auto& rhs = p.nest.body.front().rhs;
    const auto reads = active_reads(rhs, p.nest.counters, activity_of(p));
    for (int attempt = 0; attempt < 50; attempt++) {
      std::vector<long long> point;
      for (std::size_t i = 0; i < p.nest.counters.size(); i++)
        point.push_back(2 + static_cast<long long>(rng() % 5));
      double gap = std::numeric_limits<double>::infinity();
      (void)eval_expr(rhs, env, p.nest.counters, point, &gap);
      if (gap < 1e-3) {
        env = make_env(p, {{"n", 10}}, seed + 1000 + attempt);
        continue;
      }
      for (const auto& ar : reads) {
        auto s = differentiate(rhs, ar, p.nest.counters);
        double analytic = eval_expr(s, env, p.nest.counters, point);
        std::vector<long long> cell(point);
        for (std::size_t i = 0; i < cell.size(); i++) cell[i] += ar.offset[i];
        double saved = env.grids.at(ar.array).at(cell);
        double h = 1e-4 * (1.0 + std::fabs(saved));
        Env ep = env, em = env;
        ep.grids.at(ar.array).at(cell) = saved + h;
        em.grids.at(ar.array).at(cell) = saved - h;
        double fd = (eval_expr(rhs, ep, p.nest.counters, point) -
                     eval_expr(rhs, em, p.nest.counters, point)) /
                    (2.0 * h);
        CHECK(std::fabs(analytic - fd) <= 1e-6 * (1.0 + std::fabs(fd)));
      }
      return;
    }
    FAIL("no tie-free point found");
  };

  for (const auto& name : example_names()) check_problem(example_problem(name), 7);
  for (int t = 0; t < 20; t++)
    check_problem(testsupport::random_problem(rng, /*linear_only=*/true), 50 + t);
}

TEST_CASE("differentiation rejects nodes outside the rule set") {
  auto dcall = opaque_deriv("f", "a", {{"a", P("u[i]")}});
  CHECK_THROWS_AS(
      differentiate(dcall, ActiveRead{"u", {0}}, std::vector<Counter>{"i"}), Error);
}

TEST_CASE("opaque calls differentiate into named derivative calls") {
  auto call = opaque_call("f", {{"a", P("u[i-1]")}, {"b", P("u[i]")}});
  auto s = differentiate(call, ActiveRead{"u", {-1}}, std::vector<Counter>{"i"});
  REQUIRE(s->kind == ExprKind::OpaqueDeriv);
  CHECK(s->name == "f");
  CHECK(s->wrt == "a");
  REQUIRE(s->args.size() == 2);
  CHECK(exprs_equal(s->args[0].second, P("u[i-1]")));
}
