#pragma once

#include <map>
#include <string>
#include <vector>

#include "stencilgrad/affine.hpp"
#include "stencilgrad/expr.hpp"

namespace stencilgrad {

using Counter = std::string;

/// Inclusive interval on both ends.
struct Range {
  AffineExpr lo;
  AffineExpr hi;
  friend bool operator==(const Range&, const Range&) = default;
};

enum class WriteMode { Assign, Increment };

struct Statement {
  std::string array;
  std::vector<Counter> lhs;  // bare counters, a permutation of the nest's counters
  WriteMode mode = WriteMode::Assign;
  ExprPtr rhs;
};

/// Perfect loop nest: counters ordered outer to inner, one inclusive bound
/// pair per counter, all statements at the innermost level.
struct StencilLoopNest {
  std::vector<Counter> counters;
  std::vector<Range> bounds;
  std::vector<Statement> body;
};

enum class ArrayRole { Input, Output, Coefficient };

struct ArrayDecl {
  std::string name;
  int rank = 0;
  std::vector<AffineExpr> shape;  // extent per dimension
  bool active = false;
  std::string adjoint;  // nonempty iff active
  ArrayRole role = ArrayRole::Input;
};

struct ActivitySpec {
  std::map<std::string, std::string> adjoints;  // active array name -> adjoint name
  bool is_active(const std::string& array) const { return adjoints.count(array) != 0; }
};

/// A complete stencil problem: declarations plus the primal nest.
struct Problem {
  std::string name;
  std::vector<std::string> sizes;    // integer symbols for bounds/shapes
  std::vector<std::string> scalars;  // real coefficient symbols
  std::vector<ArrayDecl> arrays;     // declaration order is significant
  StencilLoopNest nest;
};

const ArrayDecl* find_array(const Problem& p, const std::string& name);
const ArrayDecl* find_array_by_adjoint(const Problem& p, const std::string& adjoint);
const ArrayDecl& output_array(const Problem& p);
ActivitySpec activity_of(const Problem& p);
bool is_identifier(std::string_view s);

struct Diagnostic {
  std::string code;
  std::string message;
  std::string context;
};

struct ValidationReport {
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return diagnostics.empty(); }
  void add(std::string code, std::string message, std::string context = {}) {
    diagnostics.push_back({std::move(code), std::move(message), std::move(context)});
  }
  bool has(const std::string& code) const;
  std::string str() const;
};

/// Checks every accepted-input restriction and returns one diagnostic per
/// violation; the problem is accepted iff the report is empty.
ValidationReport validate(const Problem& p);

}  // namespace stencilgrad
