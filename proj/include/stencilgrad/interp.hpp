#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stencilgrad/adjoint.hpp"
#include "stencilgrad/nest.hpp"

namespace stencilgrad {

/// Row-major multidimensional array of doubles.
class DenseGrid {
 public:
  DenseGrid() = default;
  explicit DenseGrid(std::vector<long long> shape);

  const std::vector<long long>& shape() const { return shape_; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool in_bounds(const std::vector<long long>& idx) const;
  std::size_t flat(const std::vector<long long>& idx) const;
  double at(const std::vector<long long>& idx) const { return data_[flat(idx)]; }
  double& at(const std::vector<long long>& idx) { return data_[flat(idx)]; }

  friend bool operator==(const DenseGrid&, const DenseGrid&) = default;

 private:
  std::vector<long long> shape_;
  std::vector<double> data_;
};

struct Env {
  std::map<std::string, long long> sizes;
  std::map<std::string, double> scalars;
  std::map<std::string, DenseGrid> grids;
  std::uint64_t seed = 0;
};

/// Builds a reproducible environment: scalars then primal grids (declaration
/// order) then the output's adjoint seed are drawn from a normal(0,1) stream
/// of one mt19937_64 seeded with `seed`; input adjoints start at zero.
Env make_env(const Problem& p, const std::map<std::string, long long>& sizes, std::uint64_t seed);

/// Evaluates one expression at a concrete iteration point. When tie_gap is
/// given it is lowered to the smallest |a - b| seen at any min/max node.
double eval_expr(const ExprPtr& e, const Env& env, const std::vector<Counter>& counters,
                 const std::vector<long long>& values, double* tie_gap = nullptr);

/// Runs one nest sequentially (counters iterate lexicographically, outer
/// slowest, inclusive bounds) and returns the updated environment. The input
/// environment is left untouched. Out-of-bounds accesses and opaque calls
/// raise Error.
Env run_nest(const StencilLoopNest& nest, const Env& env);

/// Checks the minimum-extent guards, then runs the nests in program order.
Env run_program(const AdjointProgram& program, const Env& env);

/// Scatter-form adjoint oracle: walks the primal iteration space in
/// ascending order and applies  adjoint(u)[counters + o] += S_l * seed.
Env run_scatter_adjoint(const Problem& p, const Env& env);

struct GridCompare {
  double max_rel_err = 0.0;
  bool pass = false;
};

/// max over elements of |a - b| / (1 + |b|), pass iff <= rel_tol.
GridCompare compare_grids(const DenseGrid& a, const DenseGrid& b, double rel_tol);

struct DotReport {
  double max_rel_err = 0.0;
  double threshold = 0.0;
  int trials = 0;
  bool pass = false;
};

/// Adjoint consistency check <Jv, w> = <v, J^T w> with Gaussian probes and a
/// central finite difference on the left; redraws the base point when a
/// min/max evaluation is within 1e-3 of a tie.
DotReport dot_product_test(const Problem& p, const AdjointProgram& program, const Env& env,
                           int trials);

struct CheckLine {
  std::string name;
  double metric = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct VerifyReport {
  std::vector<CheckLine> checks;
  bool pass() const;
  std::string text() const;
  std::string json_text() const;
};

/// Oracle-equivalence check (gather program vs scatter oracle) plus, when
/// fd is set, the dot-product test.
VerifyReport verify_problem(const Problem& p, const std::map<std::string, long long>& sizes,
                            std::uint64_t seed, int trials, bool fd);

}  // namespace stencilgrad
