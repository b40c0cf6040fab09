#pragma once

#include <cstddef>
#include <vector>

#include "stencilgrad/nest.hpp"
#include "stencilgrad/symdiff.hpp"

namespace stencilgrad {

/// Partial derivative of the loop body with respect to one active read,
/// still expressed in the primal counters.
struct AdjointTerm {
  ActiveRead input;
  ExprPtr partial;
  std::string adjoint_array;       // adjoint of input.array (the written array)
  std::string seed_array;          // adjoint of the primal lhs
  std::vector<Counter> seed_lhs;   // primal lhs counter permutation
};

/// Gather form of one term: writes the input's adjoint at bare counters,
/// reads the seed at counters - offset, valid on [s+o, e+o] per dimension.
struct ShiftedStatement {
  Statement statement;
  std::vector<long long> offset;
  std::vector<Range> valid;
};

struct AdjointNest {
  StencilLoopNest nest;
  std::vector<std::size_t> terms;  // indices into AdjointProgram::terms
  bool core = false;
};

/// Ordered gather-only loop nests with pairwise-disjoint write iteration
/// spaces: boundary nests plus one core nest.
struct AdjointProgram {
  std::vector<Counter> counters;
  std::vector<AdjointTerm> terms;
  std::vector<ShiftedStatement> shifted;
  std::vector<AdjointNest> nests;
  std::size_t core_index = 0;  // meaningful iff !nests.empty()
  // Per dimension: (hi - lo of the primal bounds, required minimum extent).
  std::vector<std::pair<AffineExpr, long long>> extent_guards;
};

/// One term per active read, in active_reads order. Requires a validated problem.
std::vector<AdjointTerm> derive_adjoint_terms(const Problem& p);

ShiftedStatement shift_term(const AdjointTerm& term, const StencilLoopNest& primal);

/// Intersection of all shifted valid spaces: [s + max o, e + min o] per dimension.
std::vector<Range> core_bounds(const std::vector<AdjointTerm>& terms,
                               const StencilLoopNest& primal);

/// Hierarchical per-dimension splitting of the shifted statements into
/// disjoint loop nests, emitted lower -> middle -> upper in each dimension.
AdjointProgram split_regions(std::vector<AdjointTerm> terms,
                             std::vector<ShiftedStatement> shifted,
                             const StencilLoopNest& primal);

AdjointProgram assemble_adjoint(const Problem& p);

/// Combines statements that share an lhs within each nest into one sum.
AdjointProgram merge_statements(const AdjointProgram& program);

bool nest_is_degenerate(const AdjointNest& n);

}  // namespace stencilgrad
