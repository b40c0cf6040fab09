#include "stencilgrad/symdiff.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace stencilgrad {

namespace {

struct ExprLess {
  bool operator()(const ExprPtr& a, const ExprPtr& b) const { return compare_exprs(a, b) < 0; }
};

struct Coeff {
  double v = 0.0;
  bool int_hint = true;
};

ExprPtr const_node(double v, bool int_hint) {
  bool integral = std::isfinite(v) && v == std::floor(v);
  if (int_hint && integral) return integer(static_cast<long long>(v));
  return number(v);
}

std::vector<ExprPtr> factors_of(const ExprPtr& core) {
  if (core->kind == ExprKind::Mul) return core->operands;
  return {core};
}

std::size_t factor_count(const ExprPtr& core) {
  return core->kind == ExprKind::Mul ? core->operands.size() : 1;
}

ExprPtr rebuild_term(const ExprPtr& core, const Coeff& c) {
  if (c.v == 1.0) return core;
  std::vector<ExprPtr> ops{const_node(c.v, c.int_hint)};
  auto fs = factors_of(core);
  ops.insert(ops.end(), fs.begin(), fs.end());
  return mul(std::move(ops));
}

ExprPtr simplify_add(std::vector<ExprPtr> parts) {
  double const_v = 0.0;
  bool const_int = true;
  std::map<ExprPtr, Coeff, ExprLess> terms;
  for (const auto& part : parts) {
    if (part->kind == ExprKind::Const) {
      const_v += part->value;
      const_int = const_int && part->int_hint;
      continue;
    }
    Coeff c{1.0, true};
    ExprPtr core = part;
    if (part->kind == ExprKind::Mul && part->operands[0]->kind == ExprKind::Const) {
      c.v = part->operands[0]->value;
      c.int_hint = part->operands[0]->int_hint;
      std::vector<ExprPtr> rest(part->operands.begin() + 1, part->operands.end());
      core = mul(std::move(rest));
    }
    auto [it, fresh] = terms.try_emplace(core, Coeff{0.0, true});
    it->second.v += c.v;
    it->second.int_hint = it->second.int_hint && c.int_hint;
    (void)fresh;
  }

  std::vector<std::pair<ExprPtr, Coeff>> kept;
  for (const auto& [core, c] : terms)
    if (c.v != 0.0) kept.push_back({core, c});
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    std::size_t fa = factor_count(a.first), fb = factor_count(b.first);
    if (fa != fb) return fa > fb;
    return compare_exprs(a.first, b.first) < 0;
  });

  std::vector<ExprPtr> out;
  out.reserve(kept.size() + 1);
  for (const auto& [core, c] : kept) out.push_back(rebuild_term(core, c));
  if (const_v != 0.0) out.push_back(const_node(const_v, const_int));
  if (out.empty()) return integer(0);
  return add(std::move(out));
}

ExprPtr simplify_mul(std::vector<ExprPtr> parts) {
  double const_v = 1.0;
  bool const_int = true;
  std::vector<ExprPtr> factors;
  for (const auto& part : parts) {
    if (part->kind == ExprKind::Const) {
      const_v *= part->value;
      const_int = const_int && part->int_hint;
    } else {
      factors.push_back(part);
    }
  }
  if (const_v == 0.0) return const_node(0.0, const_int);
  std::stable_sort(factors.begin(), factors.end(), ExprLess{});
  if (factors.empty()) return const_node(const_v, const_int);
  if (const_v == 1.0) return mul(std::move(factors));
  factors.insert(factors.begin(), const_node(const_v, const_int));
  return mul(std::move(factors));
}

}  // namespace

ExprPtr simplify(const ExprPtr& e) {
  switch (e->kind) {
    case ExprKind::Const:
      return e->value == 0.0 && std::signbit(e->value) ? const_node(0.0, e->int_hint) : e;
    case ExprKind::ScalarRef:
    case ExprKind::ArrayRead:
      return e;
    case ExprKind::Add: {
      std::vector<ExprPtr> parts;
      for (const auto& op : e->operands) {
        auto s = simplify(op);
        if (s->kind == ExprKind::Add)
          parts.insert(parts.end(), s->operands.begin(), s->operands.end());
        else
          parts.push_back(s);
      }
      return simplify_add(std::move(parts));
    }
    case ExprKind::Mul: {
      std::vector<ExprPtr> parts;
      for (const auto& op : e->operands) {
        auto s = simplify(op);
        if (s->kind == ExprKind::Mul)
          parts.insert(parts.end(), s->operands.begin(), s->operands.end());
        else
          parts.push_back(s);
      }
      return simplify_mul(std::move(parts));
    }
    case ExprKind::Min:
    case ExprKind::Max: {
      auto a = simplify(e->operands[0]);
      auto b = simplify(e->operands[1]);
      if (a->kind == ExprKind::Const && b->kind == ExprKind::Const) {
        double v = e->kind == ExprKind::Min ? std::fmin(a->value, b->value)
                                            : std::fmax(a->value, b->value);
        return const_node(v, a->int_hint && b->int_hint);
      }
      if (exprs_equal(a, b)) return a;
      if (compare_exprs(b, a) < 0) std::swap(a, b);
      return e->kind == ExprKind::Min ? min_of(a, b) : max_of(a, b);
    }
    case ExprKind::Pow: {
      auto base = simplify(e->operands[0]);
      long long k = e->exponent;
      if (k == 0) return integer(1);
      if (k == 1) return base;
      if (base->kind == ExprKind::Const) {
        double v = std::pow(base->value, static_cast<double>(k));
        return const_node(v, base->int_hint && k > 0);
      }
      if (base->kind == ExprKind::Pow)
        return simplify(pow_of(base->operands[0], base->exponent * k));
      if (base->kind == ExprKind::Mul) {
        std::vector<ExprPtr> ops;
        for (const auto& f : base->operands) ops.push_back(pow_of(f, k));
        return simplify(mul(std::move(ops)));
      }
      return pow_of(base, k);
    }
    case ExprKind::Select: {
      auto cond = simplify(e->operands[0]);
      auto t = simplify(e->operands[1]);
      auto f = simplify(e->operands[2]);
      const auto& lhs = cond->operands[0];
      if (lhs->kind == ExprKind::Const && cond->operands[1]->kind == ExprKind::Const) {
        double l = lhs->value, r = cond->operands[1]->value;
        bool taken = cond->rel == Relation::Ge   ? l >= r
                     : cond->rel == Relation::Gt ? l > r
                     : cond->rel == Relation::Le ? l <= r
                                                 : l < r;
        return taken ? t : f;
      }
      if (exprs_equal(t, f)) return t;
      return select(cond, t, f);
    }
    case ExprKind::Compare: {
      auto l = simplify(e->operands[0]);
      auto r = simplify(e->operands[1]);
      Relation rel = e->rel;
      if (rel == Relation::Le || rel == Relation::Lt) {
        std::swap(l, r);
        rel = rel == Relation::Le ? Relation::Ge : Relation::Gt;
      }
      auto diff = simplify(add({l, negate(r)}));
      return compare(diff, rel, integer(0));
    }
    case ExprKind::OpaqueCall:
    case ExprKind::OpaqueDeriv: {
      auto n = std::make_shared<Expr>(*e);
      for (auto& [name, arg] : n->args) arg = simplify(arg);
      return n;
    }
  }
  return e;
}

std::vector<ActiveRead> active_reads(const ExprPtr& rhs, const std::vector<Counter>& counters,
                                     const ActivitySpec& activity) {
  std::set<std::pair<std::string, std::vector<long long>>> found;
  for_each_node(rhs, [&](const Expr& n) {
    if (n.kind != ExprKind::ArrayRead || !activity.is_active(n.name)) return;
    if (n.indices.size() != counters.size())
      throw Error("active read of '" + n.name + "' does not index every counter");
    std::vector<long long> off(counters.size());
    for (std::size_t i = 0; i < counters.size(); i++) {
      if (n.indices[i].counter != counters[i])
        throw Error("active read of '" + n.name + "' is not in nest counter order");
      off[i] = n.indices[i].offset;
    }
    found.insert({n.name, std::move(off)});
  });
  std::vector<ActiveRead> out;
  out.reserve(found.size());
  for (const auto& [array, off] : found) out.push_back({array, off});
  return out;
}

namespace {

// Selector branches render as 1.0/0.0 rather than bare integers.
ExprPtr as_indicator(const ExprPtr& e) {
  if (e->kind == ExprKind::Const && e->int_hint) return number(e->value);
  return e;
}

struct DiffCtx {
  const ActiveRead* target;
  std::vector<IndexExpr> target_indices;
};

ExprPtr d(const ExprPtr& e, const DiffCtx& ctx) {
  switch (e->kind) {
    case ExprKind::Const:
    case ExprKind::ScalarRef:
      return integer(0);
    case ExprKind::ArrayRead:
      if (e->name == ctx.target->array && e->indices == ctx.target_indices) return integer(1);
      return integer(0);
    case ExprKind::Add: {
      std::vector<ExprPtr> parts;
      for (const auto& op : e->operands) parts.push_back(d(op, ctx));
      return add(std::move(parts));
    }
    case ExprKind::Mul: {
      std::vector<ExprPtr> terms;
      for (std::size_t i = 0; i < e->operands.size(); i++) {
        auto di = d(e->operands[i], ctx);
        if (is_const_value(di, 0.0)) continue;
        std::vector<ExprPtr> ops;
        for (std::size_t j = 0; j < e->operands.size(); j++)
          if (j != i) ops.push_back(e->operands[j]);
        ops.push_back(di);
        terms.push_back(mul(std::move(ops)));
      }
      return add(std::move(terms));
    }
    case ExprKind::Pow: {
      auto db = d(e->operands[0], ctx);
      if (is_const_value(db, 0.0)) return integer(0);
      return mul({integer(e->exponent), pow_of(e->operands[0], e->exponent - 1), db});
    }
    case ExprKind::Max:
      return select(compare(e->operands[0], Relation::Ge, e->operands[1]),
                    as_indicator(d(e->operands[0], ctx)), as_indicator(d(e->operands[1], ctx)));
    case ExprKind::Min:
      return select(compare(e->operands[1], Relation::Ge, e->operands[0]),
                    as_indicator(d(e->operands[0], ctx)), as_indicator(d(e->operands[1], ctx)));
    case ExprKind::Select:
      return select(e->operands[0], d(e->operands[1], ctx), d(e->operands[2], ctx));
    case ExprKind::OpaqueCall: {
      std::vector<ExprPtr> terms;
      for (const auto& [arg_name, arg] : e->args) {
        auto dg = d(arg, ctx);
        if (is_const_value(dg, 0.0)) continue;
        terms.push_back(mul({opaque_deriv(e->name, arg_name, e->args), dg}));
      }
      return add(std::move(terms));
    }
    case ExprKind::Compare:
      throw Error("cannot differentiate a bare comparison");
    case ExprKind::OpaqueDeriv:
      throw Error("cannot differentiate a derivative call");
  }
  return integer(0);
}

}  // namespace

ExprPtr differentiate(const ExprPtr& rhs, const ActiveRead& target,
                      const std::vector<Counter>& counters) {
  if (target.offset.size() != counters.size())
    throw Error("target offset arity does not match the nest depth");
  DiffCtx ctx{&target, {}};
  ctx.target_indices.reserve(counters.size());
  for (std::size_t i = 0; i < counters.size(); i++)
    ctx.target_indices.push_back({counters[i], target.offset[i]});
  return simplify(d(rhs, ctx));
}

namespace {

enum class Deg { None, Lin, NonLin };

Deg degree(const ExprPtr& e, const ActivitySpec& activity) {
  switch (e->kind) {
    case ExprKind::Const:
    case ExprKind::ScalarRef:
      return Deg::None;
    case ExprKind::ArrayRead:
      return activity.is_active(e->name) ? Deg::Lin : Deg::None;
    case ExprKind::Add: {
      Deg m = Deg::None;
      for (const auto& op : e->operands) m = std::max(m, degree(op, activity));
      return m;
    }
    case ExprKind::Mul: {
      int active_factors = 0;
      Deg worst = Deg::None;
      for (const auto& op : e->operands) {
        Deg g = degree(op, activity);
        if (g != Deg::None) active_factors++;
        worst = std::max(worst, g);
      }
      if (worst == Deg::NonLin || active_factors >= 2) return Deg::NonLin;
      return active_factors == 1 ? Deg::Lin : Deg::None;
    }
    case ExprKind::Pow: {
      Deg g = degree(e->operands[0], activity);
      if (g == Deg::None) return Deg::None;
      return e->exponent == 1 ? g : Deg::NonLin;
    }
    default: {
      for (const auto& op : e->operands)
        if (degree(op, activity) != Deg::None) return Deg::NonLin;
      for (const auto& [name, arg] : e->args)
        if (degree(arg, activity) != Deg::None) return Deg::NonLin;
      return Deg::None;
    }
  }
}

}  // namespace

bool linear_in_active(const ExprPtr& rhs, const ActivitySpec& activity) {
  return degree(rhs, activity) != Deg::NonLin;
}

}  // namespace stencilgrad
