#include "stencilgrad/interp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

#include "json.hpp"

namespace stencilgrad {

DenseGrid::DenseGrid(std::vector<long long> shape) : shape_(std::move(shape)) {
  std::size_t n = 1;
  for (long long s : shape_) {
    if (s <= 0) throw Error("grid extents must be positive");
    n *= static_cast<std::size_t>(s);
  }
  data_.assign(n, 0.0);
}

bool DenseGrid::in_bounds(const std::vector<long long>& idx) const {
  if (idx.size() != shape_.size()) return false;
  for (std::size_t i = 0; i < idx.size(); i++)
    if (idx[i] < 0 || idx[i] >= shape_[i]) return false;
  return true;
}

std::size_t DenseGrid::flat(const std::vector<long long>& idx) const {
  std::size_t off = 0;
  for (std::size_t i = 0; i < shape_.size(); i++)
    off = off * static_cast<std::size_t>(shape_[i]) + static_cast<std::size_t>(idx[i]);
  return off;
}

namespace {

struct EvalCtx {
  const Env* env;
  const std::vector<Counter>* counters;
  std::vector<long long> values;
  double* tie_gap = nullptr;

  long long counter_value(const std::string& c) const {
    for (std::size_t i = 0; i < counters->size(); i++)
      if ((*counters)[i] == c) return values[i];
    throw Error("counter '" + c + "' has no value in this iteration");
  }

  std::string iteration_str() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < counters->size(); i++) {
      if (i) os << ", ";
      os << (*counters)[i] << "=" << values[i];
    }
    return os.str();
  }
};

std::string index_list(const std::vector<long long>& idx) {
  std::ostringstream os;
  for (long long v : idx) os << "[" << v << "]";
  return os.str();
}

const DenseGrid& grid_for(const Env& env, const std::string& name) {
  auto it = env.grids.find(name);
  if (it == env.grids.end()) throw Error("no grid bound for array '" + name + "'");
  return it->second;
}

double eval(const ExprPtr& e, const EvalCtx& ctx) {
  switch (e->kind) {
    case ExprKind::Const:
      return e->value;
    case ExprKind::ScalarRef: {
      auto it = ctx.env->scalars.find(e->name);
      if (it == ctx.env->scalars.end()) throw Error("unbound scalar '" + e->name + "'");
      return it->second;
    }
    case ExprKind::ArrayRead: {
      std::vector<long long> idx;
      idx.reserve(e->indices.size());
      for (const auto& ix : e->indices) idx.push_back(ctx.counter_value(ix.counter) + ix.offset);
      const DenseGrid& g = grid_for(*ctx.env, e->name);
      if (!g.in_bounds(idx))
        throw Error("out-of-bounds read of '" + e->name + "' at " + index_list(idx) + " (" +
                    ctx.iteration_str() + ")");
      return g.at(idx);
    }
    case ExprKind::Add: {
      double s = 0.0;
      for (const auto& op : e->operands) s += eval(op, ctx);
      return s;
    }
    case ExprKind::Mul: {
      double s = 1.0;
      for (const auto& op : e->operands) s *= eval(op, ctx);
      return s;
    }
    case ExprKind::Min:
    case ExprKind::Max: {
      double a = eval(e->operands[0], ctx);
      double b = eval(e->operands[1], ctx);
      if (ctx.tie_gap) *ctx.tie_gap = std::min(*ctx.tie_gap, std::fabs(a - b));
      return e->kind == ExprKind::Min ? std::fmin(a, b) : std::fmax(a, b);
    }
    case ExprKind::Pow:
      return std::pow(eval(e->operands[0], ctx), static_cast<double>(e->exponent));
    case ExprKind::Select: {
      const auto& cond = e->operands[0];
      double l = eval(cond->operands[0], ctx);
      double r = eval(cond->operands[1], ctx);
      bool taken = cond->rel == Relation::Ge   ? l >= r
                   : cond->rel == Relation::Gt ? l > r
                   : cond->rel == Relation::Le ? l <= r
                                               : l < r;
      return eval(taken ? e->operands[1] : e->operands[2], ctx);
    }
    case ExprKind::Compare:
      throw Error("comparison evaluated outside a select");
    case ExprKind::OpaqueCall:
    case ExprKind::OpaqueDeriv:
      throw Error("opaque call '" + e->name + "' cannot be interpreted");
  }
  return 0.0;
}

/// Calls fn once per iteration, outer counter slowest; empty ranges run nothing.
template <typename Fn>
void iterate_space(const std::vector<Range>& bounds, const Env& env, EvalCtx& ctx, Fn&& fn) {
  const std::size_t d = bounds.size();
  std::vector<long long> lo(d), hi(d);
  for (std::size_t i = 0; i < d; i++) {
    lo[i] = bounds[i].lo.eval(env.sizes);
    hi[i] = bounds[i].hi.eval(env.sizes);
    if (lo[i] > hi[i]) return;
  }
  ctx.values = lo;
  while (true) {
    fn();
    std::size_t i = d;
    while (i > 0) {
      i--;
      if (++ctx.values[i] <= hi[i]) break;
      ctx.values[i] = lo[i];
      if (i == 0) return;
    }
  }
}

void run_nest_inplace(const StencilLoopNest& nest, Env& env) {
  EvalCtx ctx{&env, &nest.counters, {}, nullptr};
  iterate_space(nest.bounds, env, ctx, [&] {
    for (const auto& st : nest.body) {
      double v = eval(st.rhs, ctx);
      std::vector<long long> idx;
      idx.reserve(st.lhs.size());
      for (const auto& c : st.lhs) idx.push_back(ctx.counter_value(c));
      auto it = env.grids.find(st.array);
      if (it == env.grids.end()) throw Error("no grid bound for array '" + st.array + "'");
      if (!it->second.in_bounds(idx))
        throw Error("out-of-bounds write of '" + st.array + "' at " + index_list(idx) + " (" +
                    ctx.iteration_str() + ")");
      double& cell = it->second.at(idx);
      if (st.mode == WriteMode::Assign)
        cell = v;
      else
        cell += v;
    }
  });
}

}  // namespace

double eval_expr(const ExprPtr& e, const Env& env, const std::vector<Counter>& counters,
                 const std::vector<long long>& values, double* tie_gap) {
  EvalCtx ctx{&env, &counters, values, tie_gap};
  return eval(e, ctx);
}

Env run_nest(const StencilLoopNest& nest, const Env& env) {
  Env out = env;
  run_nest_inplace(nest, out);
  return out;
}

Env run_program(const AdjointProgram& program, const Env& env) {
  for (const auto& [extent, needed] : program.extent_guards) {
    if (extent.eval(env.sizes) < needed)
      throw Error("minimum extent violated: requires " + extent.str() +
                  " >= " + std::to_string(needed));
  }
  Env out = env;
  for (const auto& n : program.nests) run_nest_inplace(n.nest, out);
  return out;
}

Env run_scatter_adjoint(const Problem& p, const Env& env) {
  const auto terms = derive_adjoint_terms(p);
  Env out = env;
  if (terms.empty()) return out;
  const std::size_t d = p.nest.counters.size();
  EvalCtx ctx{&out, &p.nest.counters, {}, nullptr};
  iterate_space(p.nest.bounds, out, ctx, [&] {
    for (const auto& t : terms) {
      double s = eval(t.partial, ctx);
      std::vector<long long> seed_idx;
      seed_idx.reserve(t.seed_lhs.size());
      for (const auto& c : t.seed_lhs) seed_idx.push_back(ctx.counter_value(c));
      const DenseGrid& seed = grid_for(out, t.seed_array);
      if (!seed.in_bounds(seed_idx))
        throw Error("out-of-bounds read of '" + t.seed_array + "' at " + index_list(seed_idx) +
                    " (" + ctx.iteration_str() + ")");
      std::vector<long long> uidx(d);
      for (std::size_t i = 0; i < d; i++) uidx[i] = ctx.values[i] + t.input.offset[i];
      auto it = out.grids.find(t.adjoint_array);
      if (it == out.grids.end())
        throw Error("no grid bound for array '" + t.adjoint_array + "'");
      if (!it->second.in_bounds(uidx))
        throw Error("out-of-bounds write of '" + t.adjoint_array + "' at " + index_list(uidx) +
                    " (" + ctx.iteration_str() + ")");
      it->second.at(uidx) += s * seed.at(seed_idx);
    }
  });
  return out;
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ull * (a + 1) + 0xBF58476D1CE4E5B9ull * (b + 1);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

void fill_normal(DenseGrid& g, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  for (double& x : g.data()) x = nd(rng);
}

std::vector<long long> eval_shape(const ArrayDecl& a,
                                  const std::map<std::string, long long>& sizes) {
  std::vector<long long> shape;
  shape.reserve(a.shape.size());
  for (const auto& s : a.shape) shape.push_back(s.eval(sizes));
  return shape;
}

/// Minimum tie gap of the primal body over its iteration space.
double tie_gap_of(const Problem& p, const Env& env) {
  double gap = std::numeric_limits<double>::infinity();
  EvalCtx ctx{&env, &p.nest.counters, {}, &gap};
  iterate_space(p.nest.bounds, env, ctx, [&] {
    for (const auto& st : p.nest.body) (void)eval(st.rhs, ctx);
  });
  return gap;
}

}  // namespace

Env make_env(const Problem& p, const std::map<std::string, long long>& sizes,
             std::uint64_t seed) {
  Env env;
  env.sizes = sizes;
  env.seed = seed;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (const auto& s : p.scalars) env.scalars[s] = nd(rng);
  for (const auto& a : p.arrays) {
    DenseGrid g(eval_shape(a, sizes));
    fill_normal(g, rng);
    env.grids[a.name] = std::move(g);
  }
  const ArrayDecl& out = output_array(p);
  for (const auto& a : p.arrays) {
    if (!a.active) continue;
    DenseGrid g(eval_shape(a, sizes));
    if (a.name == out.name) fill_normal(g, rng);
    env.grids[a.adjoint] = std::move(g);
  }
  return env;
}

GridCompare compare_grids(const DenseGrid& a, const DenseGrid& b, double rel_tol) {
  if (a.shape() != b.shape()) throw Error("grid shape mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data().size(); i++) {
    double err = std::fabs(a.data()[i] - b.data()[i]) / (1.0 + std::fabs(b.data()[i]));
    worst = std::max(worst, err);
  }
  return {worst, worst <= rel_tol};
}

DotReport dot_product_test(const Problem& p, const AdjointProgram& program, const Env& env,
                           int trials) {
  if (trials < 1) throw Error("dot-product test needs at least one trial");
  const ActivitySpec activity = activity_of(p);
  const Statement& st = p.nest.body.front();
  const bool linear = linear_in_active(st.rhs, activity);
  const double threshold = linear ? 1e-9 : 1e-4;
  const ArrayDecl& out = output_array(p);

  std::vector<const ArrayDecl*> inputs;
  for (const auto& a : p.arrays)
    if (a.active && a.name != out.name) inputs.push_back(&a);

  bool piecewise = false;
  for_each_node(st.rhs, [&](const Expr& n) {
    if (n.kind == ExprKind::Min || n.kind == ExprKind::Max) piecewise = true;
  });

  double max_err = 0.0;
  for (int t = 0; t < trials; t++) {
    for (std::uint64_t attempt = 0;; attempt++) {
      if (attempt > 200) throw Error("no tie-free base point found after 200 redraws");
      std::mt19937_64 rng(mix_seed(env.seed, static_cast<std::uint64_t>(t), attempt));
      Env base = env;
      if (attempt > 0)
        for (const ArrayDecl* a : inputs) fill_normal(base.grids.at(a->name), rng);
      if (piecewise && tie_gap_of(p, base) < 1e-3) continue;

      std::map<std::string, DenseGrid> v;
      for (const ArrayDecl* a : inputs) {
        DenseGrid g(base.grids.at(a->name).shape());
        fill_normal(g, rng);
        v[a->name] = std::move(g);
      }
      DenseGrid w(base.grids.at(out.name).shape());
      fill_normal(w, rng);

      double umax = 0.0;
      for (const ArrayDecl* a : inputs)
        for (double x : base.grids.at(a->name).data()) umax = std::max(umax, std::fabs(x));
      const double h = 1e-5 * (1.0 + umax);

      Env plus = base, minus = base;
      for (const ArrayDecl* a : inputs) {
        auto& gp = plus.grids.at(a->name).data();
        auto& gm = minus.grids.at(a->name).data();
        const auto& gv = v.at(a->name).data();
        for (std::size_t i = 0; i < gv.size(); i++) {
          gp[i] += h * gv[i];
          gm[i] -= h * gv[i];
        }
      }
      Env rp = run_nest(p.nest, plus);
      Env rm = run_nest(p.nest, minus);
      double lhs = 0.0;
      {
        const auto& dp = rp.grids.at(out.name).data();
        const auto& dm = rm.grids.at(out.name).data();
        for (std::size_t i = 0; i < dp.size(); i++)
          lhs += w.data()[i] * (dp[i] - dm[i]) / (2.0 * h);
      }

      Env aenv = base;
      aenv.grids.at(out.adjoint) = w;
      for (const ArrayDecl* a : inputs) {
        auto& g = aenv.grids.at(a->adjoint);
        std::fill(g.data().begin(), g.data().end(), 0.0);
      }
      Env res = run_program(program, aenv);
      double rhs = 0.0;
      for (const ArrayDecl* a : inputs) {
        const auto& gu = res.grids.at(a->adjoint).data();
        const auto& gv = v.at(a->name).data();
        for (std::size_t i = 0; i < gu.size(); i++) rhs += gv[i] * gu[i];
      }

      max_err = std::max(max_err, std::fabs(lhs - rhs) / (1.0 + std::fabs(rhs)));
      break;
    }
  }
  return {max_err, threshold, trials, max_err <= threshold};
}

bool VerifyReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckLine& c) { return c.pass; });
}

std::string VerifyReport::text() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-20s max_rel_err=%.6e threshold=%.1e %s", c.name.c_str(),
                  c.metric, c.threshold, c.pass ? "PASS" : "FAIL");
    os << buf << "\n";
  }
  return os.str();
}

std::string VerifyReport::json_text() const {
  nlohmann::ordered_json j;
  j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : checks) {
    nlohmann::ordered_json line;
    line["name"] = c.name;
    line["metric"] = c.metric;
    line["threshold"] = c.threshold;
    line["pass"] = c.pass;
    j["checks"].push_back(line);
  }
  j["pass"] = pass();
  return j.dump(2) + "\n";
}

VerifyReport verify_problem(const Problem& p, const std::map<std::string, long long>& sizes,
                            std::uint64_t seed, int trials, bool fd) {
  VerifyReport report;
  const AdjointProgram program = assemble_adjoint(p);
  const Env env = make_env(p, sizes, seed);

  Env gather = run_program(program, env);
  Env scatter = run_scatter_adjoint(p, env);
  const ArrayDecl& out = output_array(p);
  double metric = 0.0;
  for (const auto& a : p.arrays) {
    if (!a.active || a.name == out.name) continue;
    auto c = compare_grids(gather.grids.at(a.adjoint), scatter.grids.at(a.adjoint), 1e-12);
    metric = std::max(metric, c.max_rel_err);
  }
  report.checks.push_back({"oracle-equivalence", metric, 1e-12, metric <= 1e-12});

  if (fd) {
    DotReport d = dot_product_test(p, program, env, trials);
    report.checks.push_back({"dot-product", d.max_rel_err, d.threshold, d.pass});
  }
  return report;
}

}  // namespace stencilgrad
