#include "stencilgrad/expr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace stencilgrad {

namespace {

std::shared_ptr<Expr> make(ExprKind k) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  return e;
}

}  // namespace

ExprPtr integer(long long v) {
  auto e = make(ExprKind::Const);
  e->value = static_cast<double>(v);
  if (e->value == 0.0) e->value = 0.0;  // normalize -0
  e->int_hint = true;
  return e;
}

ExprPtr number(double v) {
  auto e = make(ExprKind::Const);
  e->value = v == 0.0 ? 0.0 : v;
  e->int_hint = false;
  return e;
}

ExprPtr scalar_ref(std::string name) {
  auto e = make(ExprKind::ScalarRef);
  e->name = std::move(name);
  return e;
}

ExprPtr array_read(std::string array, std::vector<IndexExpr> indices) {
  auto e = make(ExprKind::ArrayRead);
  e->name = std::move(array);
  e->indices = std::move(indices);
  return e;
}

ExprPtr add(std::vector<ExprPtr> ops) {
  if (ops.empty()) return integer(0);
  if (ops.size() == 1) return ops[0];
  auto e = make(ExprKind::Add);
  e->operands = std::move(ops);
  return e;
}

ExprPtr mul(std::vector<ExprPtr> ops) {
  if (ops.empty()) return integer(1);
  if (ops.size() == 1) return ops[0];
  auto e = make(ExprKind::Mul);
  e->operands = std::move(ops);
  return e;
}

ExprPtr min_of(ExprPtr a, ExprPtr b) {
  auto e = make(ExprKind::Min);
  e->operands = {std::move(a), std::move(b)};
  return e;
}

ExprPtr max_of(ExprPtr a, ExprPtr b) {
  auto e = make(ExprKind::Max);
  e->operands = {std::move(a), std::move(b)};
  return e;
}

ExprPtr select(ExprPtr cond, ExprPtr then_e, ExprPtr else_e) {
  if (!cond || cond->kind != ExprKind::Compare) throw Error("select condition must be a comparison");
  auto e = make(ExprKind::Select);
  e->operands = {std::move(cond), std::move(then_e), std::move(else_e)};
  return e;
}

ExprPtr compare(ExprPtr lhs, Relation rel, ExprPtr rhs) {
  auto e = make(ExprKind::Compare);
  e->operands = {std::move(lhs), std::move(rhs)};
  e->rel = rel;
  return e;
}

ExprPtr pow_of(ExprPtr base, long long exponent) {
  auto e = make(ExprKind::Pow);
  e->operands = {std::move(base)};
  e->exponent = exponent;
  return e;
}

static std::vector<std::pair<std::string, ExprPtr>> sorted_args(
    std::vector<std::pair<std::string, ExprPtr>> args) {
  std::sort(args.begin(), args.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return args;
}

ExprPtr opaque_call(std::string fn, std::vector<std::pair<std::string, ExprPtr>> args) {
  auto e = make(ExprKind::OpaqueCall);
  e->name = std::move(fn);
  e->args = sorted_args(std::move(args));
  return e;
}

ExprPtr opaque_deriv(std::string fn, std::string wrt,
                     std::vector<std::pair<std::string, ExprPtr>> args) {
  auto e = make(ExprKind::OpaqueDeriv);
  e->name = std::move(fn);
  e->wrt = std::move(wrt);
  e->args = sorted_args(std::move(args));
  return e;
}

ExprPtr negate(const ExprPtr& e) {
  if (e->kind == ExprKind::Const) {
    auto n = make(ExprKind::Const);
    n->value = e->value == 0.0 ? 0.0 : -e->value;
    n->int_hint = e->int_hint;
    return n;
  }
  return mul({integer(-1), e});
}

namespace {

int kind_rank(ExprKind k) {
  switch (k) {
    case ExprKind::Const: return 0;
    case ExprKind::ScalarRef: return 1;
    case ExprKind::Add: return 2;
    case ExprKind::ArrayRead: return 3;
    case ExprKind::Max: return 4;
    case ExprKind::Min: return 5;
    case ExprKind::Pow: return 6;
    case ExprKind::Mul: return 7;
    case ExprKind::Select: return 8;
    case ExprKind::OpaqueCall: return 9;
    case ExprKind::OpaqueDeriv: return 10;
    case ExprKind::Compare: return 11;
  }
  return 12;
}

template <typename T>
int cmp3(const T& a, const T& b) {
  if (a < b) return -1;
  if (b < a) return 1;
  return 0;
}

}  // namespace

int compare_exprs(const ExprPtr& a, const ExprPtr& b) {
  if (a.get() == b.get()) return 0;
  if (int c = cmp3(kind_rank(a->kind), kind_rank(b->kind))) return c;
  switch (a->kind) {
    case ExprKind::Const:
      if (int c = cmp3(a->value, b->value)) return c;
      return cmp3(a->int_hint, b->int_hint);
    case ExprKind::ScalarRef:
      return cmp3(a->name, b->name);
    case ExprKind::ArrayRead: {
      if (int c = cmp3(a->name, b->name)) return c;
      if (int c = cmp3(a->indices.size(), b->indices.size())) return c;
      for (std::size_t i = 0; i < a->indices.size(); i++) {
        if (int c = cmp3(a->indices[i].counter, b->indices[i].counter)) return c;
        if (int c = cmp3(a->indices[i].offset, b->indices[i].offset)) return c;
      }
      return 0;
    }
    default:
      break;
  }
  if (int c = cmp3(a->name, b->name)) return c;
  if (int c = cmp3(a->wrt, b->wrt)) return c;
  if (int c = cmp3(static_cast<int>(a->rel), static_cast<int>(b->rel))) return c;
  if (int c = cmp3(a->exponent, b->exponent)) return c;
  if (int c = cmp3(a->operands.size(), b->operands.size())) return c;
  for (std::size_t i = 0; i < a->operands.size(); i++)
    if (int c = compare_exprs(a->operands[i], b->operands[i])) return c;
  if (int c = cmp3(a->args.size(), b->args.size())) return c;
  for (std::size_t i = 0; i < a->args.size(); i++) {
    if (int c = cmp3(a->args[i].first, b->args[i].first)) return c;
    if (int c = compare_exprs(a->args[i].second, b->args[i].second)) return c;
  }
  return 0;
}

bool exprs_equal(const ExprPtr& a, const ExprPtr& b) { return compare_exprs(a, b) == 0; }

bool is_const_value(const ExprPtr& e, double v) {
  return e->kind == ExprKind::Const && e->value == v;
}

ExprPtr substitute_counters(const ExprPtr& e, const std::map<std::string, long long>& shift) {
  switch (e->kind) {
    case ExprKind::Const:
    case ExprKind::ScalarRef:
      return e;
    case ExprKind::ArrayRead: {
      std::vector<IndexExpr> idx = e->indices;
      bool changed = false;
      for (auto& ix : idx) {
        auto it = shift.find(ix.counter);
        if (it == shift.end())
          throw Error("counter '" + ix.counter + "' not covered by substitution");
        if (it->second != 0) {
          ix.offset += it->second;
          changed = true;
        }
      }
      if (!changed) return e;
      return array_read(e->name, std::move(idx));
    }
    default: {
      auto n = std::make_shared<Expr>(*e);
      bool changed = false;
      for (auto& op : n->operands) {
        auto s = substitute_counters(op, shift);
        if (s.get() != op.get()) changed = true;
        op = s;
      }
      for (auto& [name, arg] : n->args) {
        auto s = substitute_counters(arg, shift);
        if (s.get() != arg.get()) changed = true;
        arg = s;
      }
      return changed ? ExprPtr(n) : e;
    }
  }
}

ExprPtr substitute_counters(const ExprPtr& e, const std::vector<std::string>& counters,
                            const std::vector<long long>& shift) {
  if (counters.size() != shift.size()) throw Error("substitution arity mismatch");
  std::map<std::string, long long> m;
  for (std::size_t i = 0; i < counters.size(); i++) m[counters[i]] = shift[i];
  return substitute_counters(e, m);
}

void for_each_node(const ExprPtr& e, const std::function<void(const Expr&)>& fn) {
  fn(*e);
  for (const auto& op : e->operands) for_each_node(op, fn);
  for (const auto& [name, arg] : e->args) for_each_node(arg, fn);
}

std::set<std::string> counters_in(const ExprPtr& e) {
  std::set<std::string> out;
  for_each_node(e, [&](const Expr& n) {
    for (const auto& ix : n.indices) out.insert(ix.counter);
  });
  return out;
}

std::string format_number(double v, bool int_hint) {
  if (int_hint) {
    std::ostringstream os;
    os << static_cast<long long>(v);
    return os.str();
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
    s += ".0";
  return s;
}

namespace {

std::string index_str(const IndexExpr& ix) {
  if (ix.offset == 0) return ix.counter;
  std::ostringstream os;
  os << ix.counter << (ix.offset > 0 ? " + " : " - ") << (ix.offset > 0 ? ix.offset : -ix.offset);
  return os.str();
}

// Precedence levels: 1 additive, 2 multiplicative, 3 unary, 4 atom.
std::string print_expr(const ExprPtr& e, int min_prec);

// Splits a term into (negative?, magnitude text) for signed rendering in sums.
std::pair<bool, std::string> signed_term(const ExprPtr& t) {
  if (t->kind == ExprKind::Const && t->value < 0)
    return {true, format_number(-t->value, t->int_hint)};
  if (t->kind == ExprKind::Mul && t->operands[0]->kind == ExprKind::Const &&
      t->operands[0]->value < 0) {
    const auto& c = t->operands[0];
    std::vector<ExprPtr> rest(t->operands.begin() + 1, t->operands.end());
    if (c->value == -1.0) return {true, print_expr(mul(std::move(rest)), 2)};
    rest.insert(rest.begin(), c->int_hint ? integer(static_cast<long long>(-c->value))
                                          : number(-c->value));
    return {true, print_expr(mul(std::move(rest)), 2)};
  }
  return {false, print_expr(t, 2)};
}

std::string print_expr(const ExprPtr& e, int min_prec) {
  std::string out;
  int prec = 4;
  switch (e->kind) {
    case ExprKind::Const:
      out = format_number(e->value, e->int_hint);
      prec = e->value < 0 ? 3 : 4;
      break;
    case ExprKind::ScalarRef:
      out = e->name;
      break;
    case ExprKind::ArrayRead: {
      out = e->name;
      for (const auto& ix : e->indices) out += "[" + index_str(ix) + "]";
      break;
    }
    case ExprKind::Add: {
      std::ostringstream os;
      for (std::size_t i = 0; i < e->operands.size(); i++) {
        auto [neg, text] = signed_term(e->operands[i]);
        if (i == 0)
          os << (neg ? "-" : "") << text;
        else
          os << (neg ? " - " : " + ") << text;
      }
      out = os.str();
      prec = 1;
      break;
    }
    case ExprKind::Mul: {
      std::ostringstream os;
      std::size_t start = 0;
      if (e->operands[0]->kind == ExprKind::Const && e->operands[0]->value == -1.0 &&
          e->operands.size() > 1) {
        os << "-";
        start = 1;
      }
      for (std::size_t i = start; i < e->operands.size(); i++) {
        if (i > start) os << "*";
        os << print_expr(e->operands[i], i == start ? 2 : 3);
      }
      out = os.str();
      prec = start == 1 ? 3 : 2;
      break;
    }
    case ExprKind::Min:
      out = "min(" + print_expr(e->operands[0], 1) + ", " + print_expr(e->operands[1], 1) + ")";
      break;
    case ExprKind::Max:
      out = "max(" + print_expr(e->operands[0], 1) + ", " + print_expr(e->operands[1], 1) + ")";
      break;
    case ExprKind::Pow: {
      std::ostringstream os;
      os << "pow(" << print_expr(e->operands[0], 1) << ", " << e->exponent << ")";
      out = os.str();
      break;
    }
    case ExprKind::Select:
      out = "select(" + print_expr(e->operands[0], 1) + ", " + print_expr(e->operands[1], 1) +
            ", " + print_expr(e->operands[2], 1) + ")";
      break;
    case ExprKind::Compare: {
      const char* op = e->rel == Relation::Ge   ? " >= "
                       : e->rel == Relation::Gt ? " > "
                       : e->rel == Relation::Le ? " <= "
                                                : " < ";
      out = print_expr(e->operands[0], 1) + op + print_expr(e->operands[1], 1);
      prec = 0;
      break;
    }
    case ExprKind::OpaqueCall:
    case ExprKind::OpaqueDeriv: {
      std::ostringstream os;
      if (e->kind == ExprKind::OpaqueDeriv)
        os << "derivative(" << e->name << ", " << e->wrt << ")";
      else
        os << e->name;
      os << "(";
      for (std::size_t i = 0; i < e->args.size(); i++) {
        if (i) os << ", ";
        os << e->args[i].first << "=" << print_expr(e->args[i].second, 1);
      }
      os << ")";
      out = os.str();
      break;
    }
  }
  if (prec < min_prec) return "(" + out + ")";
  return out;
}

}  // namespace

std::string to_input_string(const ExprPtr& e) { return print_expr(e, 0); }

}  // namespace stencilgrad
