#include "doctest.h"

#include "stencilgrad/parser.hpp"
#include "stencilgrad/symdiff.hpp"
#include "support/problems.hpp"

using namespace stencilgrad;
using testsupport::P;

TEST_CASE("operator precedence and associativity") {
  // a - b - c groups left: (a - b) - c.
  auto e = P("a - b - c");
  REQUIRE(e->kind == ExprKind::Add);
  CHECK(e->operands[0]->kind == ExprKind::Add);

  auto f = P("a + b*c");
  REQUIRE(f->kind == ExprKind::Add);
  CHECK(f->operands[1]->kind == ExprKind::Mul);

  auto g = P("-u[i]");
  REQUIRE(g->kind == ExprKind::Mul);
  CHECK(is_const_value(g->operands[0], -1.0));
}

TEST_CASE("division becomes a negative power") {
  auto e = P("u[i]/(2*a)");
  REQUIRE(e->kind == ExprKind::Mul);
  REQUIRE(e->operands[1]->kind == ExprKind::Pow);
  CHECK(e->operands[1]->exponent == -1);
  // After normalization the constant folds out of the denominator.
  auto s = simplify(e);
  CHECK(exprs_equal(s, simplify(P("0.5*u[i]*pow(a, -1)"))));
}

TEST_CASE("literals keep their integer or real spelling") {
  CHECK(P("2")->int_hint);
  CHECK_FALSE(P("2.0")->int_hint);
  CHECK_FALSE(P("1e3")->int_hint);
  CHECK(P("1e3")->value == 1000.0);
  CHECK(P(".5")->value == 0.5);
}

TEST_CASE("functions parse") {
  CHECK(P("min(u[i], 0)")->kind == ExprKind::Min);
  CHECK(P("max(u[i], 0)")->kind == ExprKind::Max);
  auto p = P("pow(u[i], -2)");
  REQUIRE(p->kind == ExprKind::Pow);
  CHECK(p->exponent == -2);
}

TEST_CASE("array indices must be counter plus constant") {
  std::string err;
  CHECK(parse_expr("u[i*2]", &err) == nullptr);
  CHECK(err.find("array index") != std::string::npos);
  CHECK(parse_expr("u[2]", &err) == nullptr);
  CHECK(parse_expr("u[i+j]", &err) == nullptr);
  CHECK(parse_expr("u[i - 2]", &err) != nullptr);
}

TEST_CASE("parse errors carry positions") {
  std::string err;
  CHECK(parse_expr("u[i] + ", &err) == nullptr);
  CHECK(err.find("position") != std::string::npos);
  CHECK(parse_expr("foo(u[i])", &err) == nullptr);
  CHECK(err.find("unknown function") != std::string::npos);
  CHECK(parse_expr("u[i] 3", &err) == nullptr);
}

TEST_CASE("lhs references are bare counters") {
  std::string array, err;
  std::vector<std::string> counters;
  CHECK(parse_lhs_ref("r[i][j]", &array, &counters, &err));
  CHECK(array == "r");
  CHECK(counters == std::vector<std::string>{"i", "j"});
  CHECK_FALSE(parse_lhs_ref("r[i+1]", &array, &counters, &err));
  CHECK_FALSE(parse_lhs_ref("r[i] junk", &array, &counters, &err));
}
