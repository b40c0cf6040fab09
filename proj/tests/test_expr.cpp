#include <random>

#include "doctest.h"

#include "stencilgrad/interp.hpp"
#include "stencilgrad/symdiff.hpp"
#include "support/problems.hpp"

using namespace stencilgrad;
using testsupport::P;

TEST_CASE("simplify cancels and elides identities") {
  auto x = P("u[i]");
  CHECK(is_const_value(simplify(add({x, negate(x)})), 0.0));
  CHECK(exprs_equal(simplify(mul({number(1.0), x})), x));
  CHECK(is_const_value(simplify(mul({number(0.0), P("c[i]*u[i-2]")})), 0.0));
}

TEST_CASE("simplify combines like terms into one coefficient") {
  // Three copies of -2*D*c*u plus 2*u collapse to (-6*D*c + 2)*u.
  auto u = P("u_1[i]");
  auto term = [&]() { return mul({integer(-2), scalar_ref("D"), P("c[i]"), u}); };
  auto e = simplify(add({term(), term(), term(), mul({number(2.0), u})}));
  auto expected = simplify(P("(-6*D*c[i] + 2.0)*u_1[i]"));
  CHECK(exprs_equal(e, expected));
}

TEST_CASE("simplify is idempotent and deterministic") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; t++) {
    Problem p = testsupport::random_problem(rng);
    auto s1 = simplify(p.nest.body.front().rhs);
    auto s2 = simplify(s1);
    CHECK(exprs_equal(s1, s2));
    CHECK(to_input_string(s1) == to_input_string(s2));
  }
}

TEST_CASE("simplify preserves value") {
  std::mt19937_64 rng(13);
  int bindings_checked = 0;
  for (int t = 0; t < 20 && bindings_checked < 100; t++) {
    Problem p = testsupport::random_problem(rng);
    Env env = make_env(p, {{"n", 8}}, 1000 + t);
    auto raw = p.nest.body.front().rhs;
    auto s = simplify(raw);
    std::vector<long long> point(p.nest.counters.size(), 3);
    for (int probe = 0; probe < 8; probe++) {
      for (auto& v : point) v = 2 + static_cast<long long>(rng() % 5);
      double a = eval_expr(raw, env, p.nest.counters, point);
      double b = eval_expr(s, env, p.nest.counters, point);
      CHECK(std::fabs(a - b) <= 1e-12 * (1.0 + std::fabs(a)));
      bindings_checked++;
    }
  }
  CHECK(bindings_checked >= 100);
}

TEST_CASE("substitution shifts every index") {
  auto e = P("2.0*c[i]*rb[i]");
  auto shifted = substitute_counters(e, {{"i", 1}});
  CHECK(exprs_equal(simplify(shifted), simplify(P("2.0*c[i+1]*rb[i+1]"))));

  auto same = substitute_counters(e, {{"i", 0}});
  CHECK(exprs_equal(same, e));
}

TEST_CASE("substitution shifts opaque-call arguments") {
  auto call = opaque_deriv("f", "a",
                           {{"a", P("u[i-1][j]")}, {"b", P("u[i][j-1]")}});
  auto shifted = substitute_counters(call, {{"i", 1}, {"j", 0}});
  REQUIRE(shifted->args.size() == 2);
  CHECK(exprs_equal(shifted->args[0].second, P("u[i][j]")));
  CHECK(exprs_equal(shifted->args[1].second, P("u[i+1][j-1]")));
}

TEST_CASE("substitution rejects uncovered counters") {
  CHECK_THROWS_AS(substitute_counters(P("u[i][j]"), {{"i", 1}}), Error);
}

TEST_CASE("substitution by v then -v is the identity") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 40; t++) {
    Problem p = testsupport::random_problem(rng);
    std::map<std::string, long long> shift, back;
    for (const auto& c : p.nest.counters) {
      long long v = static_cast<long long>(rng() % 7) - 3;
      shift[c] = v;
      back[c] = -v;
    }
    auto e = p.nest.body.front().rhs;
    CHECK(exprs_equal(substitute_counters(substitute_counters(e, shift), back), e));
  }
}

TEST_CASE("printing normal forms reparses to the same tree") {
  for (const char* text :
       {"c[i]*(2.0*u[i-1] - 3.0*u[i] + 4.0*u[i+1])", "max(u[i], 0)", "min(u[i], u[i+1])",
        "pow(u[i], 2)", "a - b - c", "-u[i]", "u[i]/(2*a)", "1e3*u[i]", "2*u[i - 2][j + 1]"}) {
    auto e = P(text);
    auto reparsed = P(to_input_string(e));
    CHECK(exprs_equal(e, reparsed));
  }
  std::mt19937_64 rng(23);
  for (int t = 0; t < 40; t++) {
    Problem p = testsupport::random_problem(rng);
    auto normal = simplify(p.nest.body.front().rhs);
    auto reparsed = simplify(P(to_input_string(normal)));
    CHECK(exprs_equal(normal, reparsed));
  }
}

TEST_CASE("expression order is a strict total order") {
  std::vector<ExprPtr> exprs = {integer(0),      number(2.0),       scalar_ref("D"),
                                P("u[i]"),       P("u[i+1]"),       P("c[i]*u[i]"),
                                P("max(u[i],0)") , P("u[i]+u[i+1]"), P("pow(u[i],2)")};
  for (const auto& a : exprs)
    for (const auto& b : exprs) {
      int ab = compare_exprs(a, b);
      int ba = compare_exprs(b, a);
      CHECK(ab == -ba);
      for (const auto& c : exprs)
        if (ab < 0 && compare_exprs(b, c) < 0) CHECK(compare_exprs(a, c) < 0);
    }
}

TEST_CASE("number formatting keeps provenance and round-trips") {
  CHECK(format_number(2.0, true) == "2");
  CHECK(format_number(-6.0, true) == "-6");
  CHECK(format_number(2.0, false) == "2.0");
  CHECK(format_number(0.5, false) == "0.5");
  double tricky = 0.1 + 0.2;
  CHECK(std::strtod(format_number(tricky, false).c_str(), nullptr) == tricky);
}
