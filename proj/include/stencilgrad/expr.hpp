#pragma once

#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stencilgrad/affine.hpp"

namespace stencilgrad {

enum class ExprKind {
  Const,
  ScalarRef,
  ArrayRead,
  Add,
  Mul,
  Min,
  Max,
  Select,
  Compare,
  Pow,
  OpaqueCall,
  OpaqueDeriv,
};

enum class Relation { Ge, Gt, Le, Lt };

struct IndexExpr {
  std::string counter;
  long long offset = 0;
  friend bool operator==(const IndexExpr&, const IndexExpr&) = default;
};

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// One immutable expression node. Which fields are meaningful depends on the
/// kind; nodes are shared freely and never mutated after construction.
class Expr {
 public:
  ExprKind kind = ExprKind::Const;
  double value = 0.0;    // Const
  bool int_hint = false; // Const: render without a decimal point
  std::string name;      // ScalarRef / ArrayRead / OpaqueCall / OpaqueDeriv
  std::string wrt;       // OpaqueDeriv: argument differentiated with respect to
  std::vector<IndexExpr> indices;  // ArrayRead
  std::vector<ExprPtr> operands;   // Add/Mul (n-ary), Min/Max (2), Pow (1),
                                   // Select (cond, then, else), Compare (lhs, rhs)
  Relation rel = Relation::Ge;     // Compare
  long long exponent = 0;          // Pow
  std::vector<std::pair<std::string, ExprPtr>> args;  // Opaque*, sorted by name
};

ExprPtr integer(long long v);
ExprPtr number(double v);
ExprPtr scalar_ref(std::string name);
ExprPtr array_read(std::string array, std::vector<IndexExpr> indices);
ExprPtr add(std::vector<ExprPtr> ops);  // empty -> 0, singleton -> that element
ExprPtr mul(std::vector<ExprPtr> ops);  // empty -> 1, singleton -> that element
ExprPtr min_of(ExprPtr a, ExprPtr b);
ExprPtr max_of(ExprPtr a, ExprPtr b);
ExprPtr select(ExprPtr cond, ExprPtr then_e, ExprPtr else_e);
ExprPtr compare(ExprPtr lhs, Relation rel, ExprPtr rhs);
ExprPtr pow_of(ExprPtr base, long long exponent);
ExprPtr opaque_call(std::string fn, std::vector<std::pair<std::string, ExprPtr>> args);
ExprPtr opaque_deriv(std::string fn, std::string wrt,
                     std::vector<std::pair<std::string, ExprPtr>> args);
ExprPtr negate(const ExprPtr& e);

/// Deterministic total order on expression structure; 0 iff structurally equal.
int compare_exprs(const ExprPtr& a, const ExprPtr& b);
bool exprs_equal(const ExprPtr& a, const ExprPtr& b);
bool is_const_value(const ExprPtr& e, double v);

/// Replaces every index (c, p) with (c, p + shift[c]). Every counter that
/// occurs in e must be covered by the shift map; the input is not mutated.
ExprPtr substitute_counters(const ExprPtr& e, const std::map<std::string, long long>& shift);
ExprPtr substitute_counters(const ExprPtr& e, const std::vector<std::string>& counters,
                            const std::vector<long long>& shift);

void for_each_node(const ExprPtr& e, const std::function<void(const Expr&)>& fn);
std::set<std::string> counters_in(const ExprPtr& e);

std::string format_number(double v, bool int_hint);

/// Renders e in the accepted input grammar (min/max/pow calls, infix +-*/).
/// Reparsing the result reconstructs the same tree for parser-produced nodes.
std::string to_input_string(const ExprPtr& e);

}  // namespace stencilgrad
