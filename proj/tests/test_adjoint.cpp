#include "doctest.h"

#include "stencilgrad/adjoint.hpp"
#include "stencilgrad/examples.hpp"
#include "support/problems.hpp"
#include "support/region.hpp"

using namespace stencilgrad;
using testsupport::P;

namespace {

Range range_of(const char* lo, const char* hi) {
  return {*parse_affine(lo), *parse_affine(hi)};
}

bool programs_equal(const AdjointProgram& a, const AdjointProgram& b) {
  if (a.nests.size() != b.nests.size() || a.core_index != b.core_index) return false;
  for (std::size_t i = 0; i < a.nests.size(); i++) {
    if (a.nests[i].terms != b.nests[i].terms) return false;
    if (a.nests[i].nest.bounds != b.nests[i].nest.bounds) return false;
    if (a.nests[i].nest.body.size() != b.nests[i].nest.body.size()) return false;
    for (std::size_t s = 0; s < a.nests[i].nest.body.size(); s++) {
      const auto& sa = a.nests[i].nest.body[s];
      const auto& sb = b.nests[i].nest.body[s];
      if (sa.array != sb.array || sa.lhs != sb.lhs || !exprs_equal(sa.rhs, sb.rhs)) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("adjoint terms of the bundled stencils") {
  Problem lap = example_problem("lap1d");
  auto terms = derive_adjoint_terms(lap);
  REQUIRE(terms.size() == 3);
  CHECK(exprs_equal(terms[0].partial, simplify(P("2.0*c[i]"))));
  CHECK(exprs_equal(terms[1].partial, simplify(P("-3.0*c[i]"))));
  CHECK(exprs_equal(terms[2].partial, simplify(P("4.0*c[i]"))));
  CHECK(terms[0].input.offset == std::vector<long long>{-1});
  CHECK(terms[2].input.offset == std::vector<long long>{1});
  CHECK(terms[0].adjoint_array == "ub");
  CHECK(terms[0].seed_array == "rb");

  CHECK(derive_adjoint_terms(example_problem("wave3d")).size() == 8);

  Problem inert = lap;
  inert.nest.body.front().rhs = P("2.0*c[i]");
  CHECK(derive_adjoint_terms(inert).empty());
}

TEST_CASE("shifting turns a term into gather form") {
  Problem lap = example_problem("lap1d");
  auto terms = derive_adjoint_terms(lap);

  auto s0 = shift_term(terms[0], lap.nest);  // offset -1
  CHECK(s0.statement.array == "ub");
  CHECK(s0.statement.lhs == std::vector<Counter>{"i"});
  CHECK(s0.statement.mode == WriteMode::Increment);
  CHECK(exprs_equal(s0.statement.rhs, simplify(P("2.0*c[i+1]*rb[i+1]"))));
  CHECK(s0.valid == std::vector<Range>{range_of("0", "n - 2")});

  auto s1 = shift_term(terms[1], lap.nest);  // offset 0
  CHECK(exprs_equal(s1.statement.rhs, simplify(P("-3.0*c[i]*rb[i]"))));
  CHECK(s1.valid == std::vector<Range>{range_of("1", "n - 1")});

  Problem burgers = example_problem("burgers1d");
  auto bt = derive_adjoint_terms(burgers);
  auto b0 = shift_term(bt[0], burgers.nest);
  CHECK(exprs_equal(b0.statement.rhs, simplify(P("(C*max(u_1[i+1], 0) + D)*u_b[i+1]"))));
}

TEST_CASE("the seed is read exactly once at counters minus the offset") {
  for (const auto& name : example_names()) {
    Problem p = example_problem(name);
    for (const auto& t : derive_adjoint_terms(p)) {
      auto st = shift_term(t, p.nest);
      int seed_reads = 0;
      for_each_node(st.statement.rhs, [&](const Expr& n) {
        if (n.kind != ExprKind::ArrayRead || n.name != t.seed_array) return;
        seed_reads++;
        for (std::size_t i = 0; i < n.indices.size(); i++) {
          // The seed permutation follows the primal lhs.
          CHECK(n.indices[i].counter == t.seed_lhs[i]);
          std::size_t dim = 0;
          while (p.nest.counters[dim] != n.indices[i].counter) dim++;
          CHECK(n.indices[i].offset == -t.input.offset[dim]);
        }
      });
      CHECK(seed_reads == 1);
    }
  }
}

TEST_CASE("core bounds are the intersection of the shifted spaces") {
  Problem lap = example_problem("lap1d");
  auto lb = core_bounds(derive_adjoint_terms(lap), lap.nest);
  CHECK(lb == std::vector<Range>{range_of("2", "n - 2")});

  Problem wave = example_problem("wave3d");
  auto wb = core_bounds(derive_adjoint_terms(wave), wave.nest);
  REQUIRE(wb.size() == 3);
  for (const auto& r : wb) CHECK(r == range_of("2", "n - 3"));

  // A single zero-offset term keeps the primal bounds.
  Problem single = testsupport::offsets_problem({{0, 0}});
  auto sb = core_bounds(derive_adjoint_terms(single), single.nest);
  CHECK(sb == single.nest.bounds);
}

TEST_CASE("lap1d splits into the five expected regions") {
  Problem lap = example_problem("lap1d");
  auto prog = assemble_adjoint(lap);
  REQUIRE(prog.nests.size() == 5);
  CHECK(prog.core_index == 2);

  using TermSet = std::vector<std::size_t>;
  CHECK(prog.nests[0].nest.bounds == std::vector<Range>{range_of("0", "0")});
  CHECK(prog.nests[0].terms == TermSet{0});
  CHECK(prog.nests[1].nest.bounds == std::vector<Range>{range_of("1", "1")});
  CHECK(prog.nests[1].terms == TermSet{0, 1});
  CHECK(prog.nests[2].nest.bounds == std::vector<Range>{range_of("2", "n - 2")});
  CHECK(prog.nests[2].terms == TermSet{0, 1, 2});
  CHECK(prog.nests[2].core);
  CHECK(prog.nests[3].nest.bounds == std::vector<Range>{range_of("n - 1", "n - 1")});
  CHECK(prog.nests[3].terms == TermSet{1, 2});
  CHECK(prog.nests[4].nest.bounds == std::vector<Range>{range_of("n", "n")});
  CHECK(prog.nests[4].terms == TermSet{2});

  int degenerate = 0;
  for (const auto& n : prog.nests)
    if (nest_is_degenerate(n)) degenerate++;
  CHECK(degenerate == 4);
}

TEST_CASE("region counts match the enumeration oracle") {
  auto nest_count = [](const Problem& p) { return assemble_adjoint(p).nests.size(); };

  CHECK(nest_count(example_problem("lap1d")) == 5);
  CHECK(nest_count(example_problem("wave3d")) == 53);
  CHECK(nest_count(testsupport::offsets_problem(testsupport::dense_offsets(2))) == 25);
  CHECK(nest_count(testsupport::offsets_problem(testsupport::dense_offsets(3))) == 125);
  CHECK(nest_count(testsupport::offsets_problem(testsupport::star_offsets(2))) == 17);

  CHECK(testsupport::count_regions({{-1}, {0}, {1}}) == 5);
  CHECK(testsupport::count_regions(testsupport::star_offsets(3)) == 53);
  CHECK(testsupport::count_regions(testsupport::dense_offsets(2)) == 25);
  CHECK(testsupport::count_regions(testsupport::dense_offsets(3)) == 125);
  CHECK(testsupport::count_regions(testsupport::star_offsets(2)) == 17);
}

TEST_CASE("write regions are disjoint and exact") {
  std::vector<Problem> probes = {example_problem("lap1d"), example_problem("wave3d"),
                                 example_problem("burgers1d"),
                                 testsupport::offsets_problem(testsupport::star_offsets(2)),
                                 testsupport::offsets_problem(testsupport::dense_offsets(2))};
  for (const auto& p : probes) {
    auto prog = assemble_adjoint(p);
    for (long long n : {8, 9, 16}) {
      auto rc = testsupport::raster_check(prog, p.nest, {{"n", n}});
      CHECK_MESSAGE(rc.disjoint, p.name, " n=", n, ": ", rc.detail);
      CHECK_MESSAGE(rc.exact, p.name, " n=", n, ": ", rc.detail);
    }
  }
  // Large probe on the deepest stencil.
  Problem wave = example_problem("wave3d");
  auto rc = testsupport::raster_check(assemble_adjoint(wave), wave.nest, {{"n", 101}});
  CHECK(rc.disjoint);
  CHECK(rc.exact);
}

TEST_CASE("every generated statement writes at bare counters") {
  for (const auto& name : example_names()) {
    Problem p = example_problem(name);
    for (const auto& nest : assemble_adjoint(p).nests)
      for (const auto& st : nest.nest.body) {
        CHECK(st.lhs == p.nest.counters);
        CHECK(st.mode == WriteMode::Increment);
      }
  }
}

TEST_CASE("nest count stays within the region bound") {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 30; t++) {
    Problem p = testsupport::random_problem(rng);
    auto prog = assemble_adjoint(p);
    if (prog.nests.empty()) continue;
    std::size_t d = p.nest.counters.size();
    std::size_t k = 0;
    for (std::size_t dim = 0; dim < d; dim++) {
      std::set<long long> offs;
      for (const auto& s : prog.shifted) offs.insert(s.offset[dim]);
      k = std::max(k, offs.size());
    }
    std::size_t bound = 1;
    for (std::size_t dim = 0; dim < d; dim++) bound *= 2 * k - 1;
    CHECK(prog.nests.size() <= bound);
  }
}

TEST_CASE("assembly is deterministic") {
  Problem p = example_problem("wave3d");
  CHECK(programs_equal(assemble_adjoint(p), assemble_adjoint(p)));
}

TEST_CASE("statement merging combines shared left-hand sides") {
  Problem wave = example_problem("wave3d");
  auto merged = merge_statements(assemble_adjoint(wave));
  const auto& core = merged.nests[merged.core_index].nest;
  REQUIRE(core.body.size() == 2);  // u_1_b (seven terms) and u_2_b
  CHECK(core.body[0].array == "u_1_b");
  CHECK(core.body[1].array == "u_2_b");

  Problem lap = example_problem("lap1d");
  auto lm = merge_statements(assemble_adjoint(lap));
  const auto& lcore = lm.nests[lm.core_index].nest;
  REQUIRE(lcore.body.size() == 1);
  CHECK(exprs_equal(
      lcore.body[0].rhs,
      simplify(P("4.0*c[i-1]*rb[i-1] - 3.0*c[i]*rb[i] + 2.0*c[i+1]*rb[i+1]"))));
}

TEST_CASE("minimum extent guards cover every split dimension") {
  Problem wave = example_problem("wave3d");
  auto prog = assemble_adjoint(wave);
  REQUIRE(prog.extent_guards.size() == 3);
  for (const auto& [extent, needed] : prog.extent_guards) {
    CHECK(extent == *parse_affine("n - 3"));
    CHECK(needed == 2);
  }
}
