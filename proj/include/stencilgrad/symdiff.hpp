#pragma once

#include <vector>

#include "stencilgrad/expr.hpp"
#include "stencilgrad/nest.hpp"

namespace stencilgrad {

/// One distinct read of an active array: the array plus its integer offset
/// per loop counter, outer dimension first.
struct ActiveRead {
  std::string array;
  std::vector<long long> offset;
  friend bool operator==(const ActiveRead&, const ActiveRead&) = default;
};

/// Distinct active reads of rhs in deterministic order: lexicographic by
/// array name, then by offset vector (outer dimension first).
std::vector<ActiveRead> active_reads(const ExprPtr& rhs, const std::vector<Counter>& counters,
                                     const ActivitySpec& activity);

/// Local normal form: constants folded, sums/products flattened, like terms
/// combined, comparisons rewritten against zero, operands of commutative
/// nodes sorted. Idempotent and value-preserving; no distribution of
/// products over sums and no common-subexpression work.
ExprPtr simplify(const ExprPtr& e);

/// Partial derivative of rhs with respect to the target read, summed over
/// all occurrences and simplified. min/max credit exactly one branch at
/// ties (the first argument for ties of max, mirrored for min); select
/// conditions are treated as locally constant.
ExprPtr differentiate(const ExprPtr& rhs, const ActiveRead& target,
                      const std::vector<Counter>& counters);

/// True when every active read enters the value affinely (no product of two
/// active subexpressions, no active operand under min/max/select/pow/calls).
bool linear_in_active(const ExprPtr& rhs, const ActivitySpec& activity);

}  // namespace stencilgrad
