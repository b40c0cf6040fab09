#include "stencilgrad/adjoint.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace stencilgrad {

std::vector<AdjointTerm> derive_adjoint_terms(const Problem& p) {
  const ActivitySpec activity = activity_of(p);
  const Statement& st = p.nest.body.front();
  const auto reads = active_reads(st.rhs, p.nest.counters, activity);
  std::vector<AdjointTerm> terms;
  terms.reserve(reads.size());
  for (const auto& ar : reads) {
    AdjointTerm t;
    t.input = ar;
    t.partial = differentiate(st.rhs, ar, p.nest.counters);
    t.adjoint_array = activity.adjoints.at(ar.array);
    t.seed_array = activity.adjoints.at(st.array);
    t.seed_lhs = st.lhs;
    terms.push_back(std::move(t));
  }
  return terms;
}

ShiftedStatement shift_term(const AdjointTerm& term, const StencilLoopNest& primal) {
  const std::size_t d = primal.counters.size();
  std::map<Counter, long long> by_counter;
  std::vector<long long> neg(d);
  for (std::size_t i = 0; i < d; i++) {
    by_counter[primal.counters[i]] = term.input.offset[i];
    neg[i] = -term.input.offset[i];
  }

  std::vector<IndexExpr> seed_idx;
  seed_idx.reserve(term.seed_lhs.size());
  for (const auto& c : term.seed_lhs) seed_idx.push_back({c, -by_counter.at(c)});

  Statement s;
  s.array = term.adjoint_array;
  s.lhs = primal.counters;
  s.mode = WriteMode::Increment;
  s.rhs = simplify(mul({substitute_counters(term.partial, primal.counters, neg),
                        array_read(term.seed_array, std::move(seed_idx))}));

  ShiftedStatement out{std::move(s), term.input.offset, {}};
  out.valid.reserve(d);
  for (std::size_t i = 0; i < d; i++)
    out.valid.push_back({primal.bounds[i].lo + AffineExpr(term.input.offset[i]),
                         primal.bounds[i].hi + AffineExpr(term.input.offset[i])});
  return out;
}

std::vector<Range> core_bounds(const std::vector<AdjointTerm>& terms,
                               const StencilLoopNest& primal) {
  if (terms.empty()) throw Error("core bounds require at least one adjoint term");
  std::vector<Range> out;
  for (std::size_t i = 0; i < primal.counters.size(); i++) {
    long long max_o = terms.front().input.offset[i];
    long long min_o = max_o;
    for (const auto& t : terms) {
      max_o = std::max(max_o, t.input.offset[i]);
      min_o = std::min(min_o, t.input.offset[i]);
    }
    out.push_back({primal.bounds[i].lo + AffineExpr(max_o), primal.bounds[i].hi + AffineExpr(min_o)});
  }
  return out;
}

namespace {

struct Splitter {
  AdjointProgram* prog;
  const StencilLoopNest* primal;
  std::size_t depth;

  void recurse(std::size_t dim, std::vector<Range>& prefix, const std::vector<std::size_t>& alive,
               bool all_middle) {
    if (dim == depth) {
      AdjointNest n;
      n.nest.counters = prog->counters;
      n.nest.bounds = prefix;
      n.terms = alive;
      for (std::size_t idx : alive) n.nest.body.push_back(prog->shifted[idx].statement);
      n.core = all_middle;
      if (n.core) prog->core_index = prog->nests.size();
      prog->nests.push_back(std::move(n));
      return;
    }

    std::set<long long> distinct;
    for (std::size_t idx : alive) distinct.insert(prog->shifted[idx].offset[dim]);
    const std::vector<long long> offs(distinct.begin(), distinct.end());
    const std::size_t k = offs.size();
    const AffineExpr& s = primal->bounds[dim].lo;
    const AffineExpr& e = primal->bounds[dim].hi;

    auto subset = [&](auto keep) {
      std::vector<std::size_t> out;
      for (std::size_t idx : alive)
        if (keep(prog->shifted[idx].offset[dim])) out.push_back(idx);
      return out;
    };

    for (std::size_t j = 0; j + 1 < k; j++) {
      prefix.push_back({s + AffineExpr(offs[j]), s + AffineExpr(offs[j + 1] - 1)});
      recurse(dim + 1, prefix, subset([&](long long o) { return o <= offs[j]; }), false);
      prefix.pop_back();
    }
    prefix.push_back({s + AffineExpr(offs[k - 1]), e + AffineExpr(offs[0])});
    recurse(dim + 1, prefix, alive, all_middle);
    prefix.pop_back();
    for (std::size_t j = 0; j + 1 < k; j++) {
      prefix.push_back({e + AffineExpr(offs[j] + 1), e + AffineExpr(offs[j + 1])});
      recurse(dim + 1, prefix, subset([&](long long o) { return o > offs[j]; }), false);
      prefix.pop_back();
    }
  }
};

}  // namespace

AdjointProgram split_regions(std::vector<AdjointTerm> terms,
                             std::vector<ShiftedStatement> shifted,
                             const StencilLoopNest& primal) {
  if (shifted.empty()) throw Error("region splitting requires at least one statement");
  AdjointProgram prog;
  prog.counters = primal.counters;
  prog.terms = std::move(terms);
  prog.shifted = std::move(shifted);

  const std::size_t d = primal.counters.size();
  for (std::size_t i = 0; i < d; i++) {
    long long max_o = prog.shifted.front().offset[i];
    long long min_o = max_o;
    for (const auto& s : prog.shifted) {
      max_o = std::max(max_o, s.offset[i]);
      min_o = std::min(min_o, s.offset[i]);
    }
    if (max_o - min_o >= 1)
      prog.extent_guards.push_back({primal.bounds[i].hi - primal.bounds[i].lo, max_o - min_o});
  }

  std::vector<std::size_t> all(prog.shifted.size());
  for (std::size_t i = 0; i < all.size(); i++) all[i] = i;
  std::vector<Range> prefix;
  Splitter{&prog, &primal, d}.recurse(0, prefix, all, true);
  return prog;
}

AdjointProgram assemble_adjoint(const Problem& p) {
  auto terms = derive_adjoint_terms(p);
  if (terms.empty()) {
    AdjointProgram empty;
    empty.counters = p.nest.counters;
    return empty;
  }
  std::vector<ShiftedStatement> shifted;
  shifted.reserve(terms.size());
  for (const auto& t : terms) shifted.push_back(shift_term(t, p.nest));
  return split_regions(std::move(terms), std::move(shifted), p.nest);
}

AdjointProgram merge_statements(const AdjointProgram& program) {
  AdjointProgram out = program;
  for (auto& n : out.nests) {
    std::vector<Statement> merged;
    std::vector<std::vector<ExprPtr>> parts;
    for (const auto& st : n.nest.body) {
      auto it = std::find_if(merged.begin(), merged.end(), [&](const Statement& m) {
        return m.array == st.array && m.lhs == st.lhs;
      });
      if (it == merged.end()) {
        merged.push_back(st);
        parts.push_back({st.rhs});
      } else {
        parts[static_cast<std::size_t>(it - merged.begin())].push_back(st.rhs);
      }
    }
    for (std::size_t i = 0; i < merged.size(); i++)
      merged[i].rhs = parts[i].size() == 1 ? parts[i][0] : simplify(add(parts[i]));
    n.nest.body = std::move(merged);
  }
  return out;
}

bool nest_is_degenerate(const AdjointNest& n) {
  return std::all_of(n.nest.bounds.begin(), n.nest.bounds.end(),
                     [](const Range& r) { return r.lo == r.hi; });
}

}  // namespace stencilgrad
