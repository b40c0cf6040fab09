#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "stencilgrad/nest.hpp"

namespace stencilgrad {

const ArrayDecl* find_array(const Problem& p, const std::string& name) {
  for (const auto& a : p.arrays)
    if (a.name == name) return &a;
  return nullptr;
}

const ArrayDecl* find_array_by_adjoint(const Problem& p, const std::string& adjoint) {
  for (const auto& a : p.arrays)
    if (a.active && a.adjoint == adjoint) return &a;
  return nullptr;
}

const ArrayDecl& output_array(const Problem& p) {
  for (const auto& a : p.arrays)
    if (a.role == ArrayRole::Output) return a;
  throw Error("problem has no output array");
}

ActivitySpec activity_of(const Problem& p) {
  ActivitySpec s;
  for (const auto& a : p.arrays)
    if (a.active) s.adjoints[a.name] = a.adjoint;
  return s;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

bool ValidationReport::has(const std::string& code) const {
  return std::any_of(diagnostics.begin(), diagnostics.end(),
                     [&](const Diagnostic& d) { return d.code == code; });
}

std::string ValidationReport::str() const {
  std::ostringstream os;
  for (const auto& d : diagnostics) {
    os << d.code << ": " << d.message;
    if (!d.context.empty()) os << " [" << d.context << "]";
    os << "\n";
  }
  return os.str();
}

namespace {

void check_names(const Problem& p, ValidationReport& r) {
  std::set<std::string> seen;
  auto claim = [&](const std::string& name, const char* what) {
    if (!is_identifier(name)) {
      r.add("bad-identifier", std::string(what) + " '" + name + "' is not a valid identifier");
      return;
    }
    if (!seen.insert(name).second)
      r.add("name-collision", std::string(what) + " '" + name + "' reuses an existing name");
  };
  for (const auto& s : p.sizes) claim(s, "size symbol");
  for (const auto& s : p.scalars) claim(s, "coefficient symbol");
  for (const auto& c : p.nest.counters) claim(c, "counter");
  for (const auto& a : p.arrays) claim(a.name, "array");
  for (const auto& a : p.arrays) {
    if (a.active) claim(a.adjoint, "adjoint array");
    if (a.active && a.adjoint.empty())
      r.add("bad-field", "active array '" + a.name + "' has no adjoint name");
  }
}

void check_affine_symbols(const AffineExpr& e, const std::set<std::string>& sizes,
                          const std::string& ctx, ValidationReport& r) {
  for (const auto& [sym, coeff] : e.coefficients()) {
    (void)coeff;
    if (!sizes.count(sym))
      r.add("unknown-symbol", "'" + sym + "' is not a declared size symbol", ctx);
  }
}

void check_rhs(const Problem& p, const ActivitySpec& activity, ValidationReport& r) {
  const Statement& st = p.nest.body.front();
  std::set<std::string> counters(p.nest.counters.begin(), p.nest.counters.end());
  std::set<std::string> scalars(p.scalars.begin(), p.scalars.end());
  std::set<std::string> sizes(p.sizes.begin(), p.sizes.end());

  std::function<void(const ExprPtr&, bool)> walk = [&](const ExprPtr& e, bool in_select_cond) {
    switch (e->kind) {
      case ExprKind::Const:
        break;
      case ExprKind::ScalarRef: {
        if (scalars.count(e->name)) break;
        if (sizes.count(e->name))
          r.add("unknown-symbol", "size symbol '" + e->name + "' used in an expression", "rhs");
        else
          r.add("unknown-symbol", "'" + e->name + "' is not a declared coefficient symbol", "rhs");
        break;
      }
      case ExprKind::ArrayRead: {
        const ArrayDecl* decl = find_array(p, e->name);
        if (!decl) {
          r.add("unknown-array", "read of undeclared array '" + e->name + "'", "rhs");
          break;
        }
        if (e->name == st.array)
          r.add("read-write-overlap", "array '" + e->name + "' is both read and written", "rhs");
        if (static_cast<int>(e->indices.size()) != decl->rank)
          r.add("rank-mismatch", "array '" + e->name + "' has rank " +
                                     std::to_string(decl->rank) + " but is read with " +
                                     std::to_string(e->indices.size()) + " indices",
                "rhs");
        std::set<std::string> used;
        for (const auto& ix : e->indices) {
          if (!counters.count(ix.counter))
            r.add("unknown-symbol", "index counter '" + ix.counter + "' is not declared", "rhs");
          if (!used.insert(ix.counter).second)
            r.add("repeated-counter",
                  "array '" + e->name + "' indexed twice by counter '" + ix.counter + "'", "rhs");
        }
        if (activity.is_active(e->name)) {
          bool identity = e->indices.size() == p.nest.counters.size();
          for (std::size_t i = 0; identity && i < e->indices.size(); i++)
            identity = e->indices[i].counter == p.nest.counters[i];
          if (!identity)
            r.add("active-read-form",
                  "active array '" + e->name +
                      "' must be read with every loop counter in nest order",
                  "rhs");
        }
        break;
      }
      case ExprKind::Pow: {
        if (e->exponent < 0) {
          ExprKind bk = e->operands[0]->kind;
          if (bk != ExprKind::Const && bk != ExprKind::ScalarRef)
            r.add("active-division",
                  "division is only accepted by a constant or a coefficient symbol", "rhs");
        }
        walk(e->operands[0], false);
        break;
      }
      case ExprKind::Select:
        walk(e->operands[0], true);
        walk(e->operands[1], false);
        walk(e->operands[2], false);
        break;
      case ExprKind::Compare:
        if (!in_select_cond)
          r.add("internal-node", "comparison outside a select condition", "rhs");
        walk(e->operands[0], false);
        walk(e->operands[1], false);
        break;
      case ExprKind::OpaqueDeriv:
        r.add("internal-node", "derivative call is not part of the input language", "rhs");
        for (const auto& [name, arg] : e->args) walk(arg, false);
        break;
      default:
        for (const auto& op : e->operands) walk(op, false);
        for (const auto& [name, arg] : e->args) walk(arg, false);
        break;
    }
  };
  walk(st.rhs, false);
}

}  // namespace

ValidationReport validate(const Problem& p) {
  ValidationReport r;
  check_names(p, r);

  std::set<std::string> sizes(p.sizes.begin(), p.sizes.end());
  if (p.nest.counters.empty()) r.add("bad-field", "loop nest has no counters");
  if (p.nest.bounds.size() != p.nest.counters.size())
    r.add("bad-field", "one bound pair per counter is required");
  for (std::size_t i = 0; i < p.nest.bounds.size() && i < p.nest.counters.size(); i++) {
    check_affine_symbols(p.nest.bounds[i].lo, sizes, "bounds." + p.nest.counters[i], r);
    check_affine_symbols(p.nest.bounds[i].hi, sizes, "bounds." + p.nest.counters[i], r);
  }

  int outputs = 0;
  for (const auto& a : p.arrays) {
    if (a.role == ArrayRole::Output) outputs++;
    if (static_cast<int>(a.shape.size()) != a.rank)
      r.add("rank-mismatch",
            "array '" + a.name + "' declares rank " + std::to_string(a.rank) + " but " +
                std::to_string(a.shape.size()) + " shape expressions");
    for (const auto& s : a.shape) check_affine_symbols(s, sizes, "arrays." + a.name + ".shape", r);
  }
  if (outputs != 1) r.add("no-output", "exactly one output array is required");

  if (p.nest.body.size() != 1) {
    r.add("multi-statement", "the accepted input has exactly one statement");
    return r;
  }
  const Statement& st = p.nest.body.front();

  const ArrayDecl* out = find_array(p, st.array);
  if (!out) {
    r.add("unknown-array", "written array '" + st.array + "' is not declared", "lhs");
  } else {
    if (!out->active)
      r.add("inactive-lhs", "written array '" + st.array + "' must be active", "lhs");
    if (static_cast<int>(st.lhs.size()) != out->rank)
      r.add("rank-mismatch", "lhs uses " + std::to_string(st.lhs.size()) +
                                 " indices but '" + st.array + "' has rank " +
                                 std::to_string(out->rank),
            "lhs");
  }
  {
    std::set<std::string> used(st.lhs.begin(), st.lhs.end());
    bool perm = used.size() == st.lhs.size() && used.size() == p.nest.counters.size();
    for (const auto& c : st.lhs)
      if (!std::count(p.nest.counters.begin(), p.nest.counters.end(), c)) perm = false;
    if (!perm)
      r.add("lhs-not-counter-permutation",
            "lhs indices must be a permutation of all loop counters", "lhs");
  }

  if (st.rhs) check_rhs(p, activity_of(p), r);
  return r;
}

}  // namespace stencilgrad
