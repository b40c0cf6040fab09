#include "stencilgrad/codegen.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace stencilgrad {

namespace {

struct RenderCtx {
  const Problem* p;
  // Shape-defining declaration per emitted array name (adjoints use the
  // primal counterpart's shape).
  std::map<std::string, const ArrayDecl*> shape_of;
  const std::map<Counter, AffineExpr>* subst = nullptr;  // unrolled counters
  const std::map<std::string, std::string>* prototypes = nullptr;
  std::set<std::string>* used_protos = nullptr;
};

std::string shape_factor(const AffineExpr& s) {
  std::string t = s.str();
  bool simple = s.is_constant() ||
                (s.constant_term() == 0 && s.coefficients().size() == 1 &&
                 s.coefficients().begin()->second == 1);
  return simple ? t : "(" + t + ")";
}

std::string index_text(const RenderCtx& ctx, const IndexExpr& ix) {
  if (ctx.subst) {
    auto it = ctx.subst->find(ix.counter);
    if (it != ctx.subst->end()) return (it->second + AffineExpr(ix.offset)).str();
  }
  if (ix.offset == 0) return ix.counter;
  std::ostringstream os;
  os << ix.counter << (ix.offset > 0 ? " + " : " - ") << (ix.offset > 0 ? ix.offset : -ix.offset);
  return os.str();
}

std::string array_ref(const RenderCtx& ctx, const std::string& array,
                      const std::vector<IndexExpr>& indices) {
  auto it = ctx.shape_of.find(array);
  if (it == ctx.shape_of.end()) throw Error("no shape known for array '" + array + "'");
  const ArrayDecl* decl = it->second;
  if (indices.size() != decl->shape.size())
    throw Error("index arity mismatch for array '" + array + "'");
  if (indices.size() == 1) return array + "[" + index_text(ctx, indices[0]) + "]";
  std::ostringstream os;
  os << array << "[";
  for (std::size_t i = 0; i < indices.size(); i++) {
    if (i) os << " + ";
    os << "(" << index_text(ctx, indices[i]) << ")";
    for (std::size_t j = i + 1; j < indices.size(); j++) os << "*" << shape_factor(decl->shape[j]);
  }
  os << "]";
  return os.str();
}

std::string zero_like(const ExprPtr& c) {
  return c->kind == ExprKind::Const && c->int_hint ? format_number(c->value, true)
                                                   : format_number(c->value, false);
}

// Precedence: 1 additive, 2 multiplicative, 3 unary, 4 atom.
std::string render(const RenderCtx& ctx, const ExprPtr& e, int min_prec);

std::pair<bool, std::string> signed_term(const RenderCtx& ctx, const ExprPtr& t) {
  if (t->kind == ExprKind::Const && t->value < 0)
    return {true, format_number(-t->value, t->int_hint)};
  if (t->kind == ExprKind::Mul && t->operands[0]->kind == ExprKind::Const &&
      t->operands[0]->value < 0) {
    const auto& c = t->operands[0];
    std::vector<ExprPtr> rest(t->operands.begin() + 1, t->operands.end());
    if (c->value == -1.0) return {true, render(ctx, mul(std::move(rest)), 2)};
    rest.insert(rest.begin(), c->int_hint ? integer(static_cast<long long>(-c->value))
                                          : number(-c->value));
    return {true, render(ctx, mul(std::move(rest)), 2)};
  }
  return {false, render(ctx, t, 2)};
}

std::string opaque_name(const Expr& e) {
  return e.kind == ExprKind::OpaqueDeriv ? e.name + "_d_" + e.wrt : e.name;
}

std::string render(const RenderCtx& ctx, const ExprPtr& e, int min_prec) {
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
    case ExprKind::ArrayRead:
      out = array_ref(ctx, e->name, e->indices);
      break;
    case ExprKind::Add: {
      std::ostringstream os;
      for (std::size_t i = 0; i < e->operands.size(); i++) {
        auto [neg, text] = signed_term(ctx, e->operands[i]);
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
        os << render(ctx, e->operands[i], i == start ? 2 : 3);
      }
      out = os.str();
      prec = start == 1 ? 3 : 2;
      break;
    }
    case ExprKind::Min:
      out = "fmin(" + render(ctx, e->operands[0], 1) + ", " + render(ctx, e->operands[1], 1) + ")";
      break;
    case ExprKind::Max:
      out = "fmax(" + render(ctx, e->operands[0], 1) + ", " + render(ctx, e->operands[1], 1) + ")";
      break;
    case ExprKind::Pow: {
      std::ostringstream os;
      os << "pow(" << render(ctx, e->operands[0], 1) << ", " << e->exponent << ")";
      out = os.str();
      break;
    }
    case ExprKind::Select: {
      const auto& cond = e->operands[0];
      const char* op = cond->rel == Relation::Ge   ? ">="
                       : cond->rel == Relation::Gt ? ">"
                       : cond->rel == Relation::Le ? "<="
                                                   : "<";
      out = "((" + render(ctx, cond->operands[0], 1) + op + zero_like(cond->operands[1]) + ")?" +
            render(ctx, e->operands[1], 2) + ":" + render(ctx, e->operands[2], 2) + ")";
      break;
    }
    case ExprKind::Compare:
      throw Error("comparison emitted outside a select");
    case ExprKind::OpaqueCall:
    case ExprKind::OpaqueDeriv: {
      std::string fn = opaque_name(*e);
      if (!ctx.prototypes || !ctx.prototypes->count(fn))
        throw Error("no prototype declared for opaque function '" + fn + "'");
      if (ctx.used_protos) ctx.used_protos->insert(fn);
      std::ostringstream os;
      os << fn << "(";
      for (std::size_t i = 0; i < e->args.size(); i++) {
        if (i) os << ", ";
        os << render(ctx, e->args[i].second, 1);
      }
      os << ")";
      out = os.str();
      break;
    }
  }
  if (prec < min_prec) return "(" + out + ")";
  return out;
}

bool needs_math(const ExprPtr& e) {
  bool found = false;
  for_each_node(e, [&](const Expr& n) {
    if (n.kind == ExprKind::Min || n.kind == ExprKind::Max || n.kind == ExprKind::Pow)
      found = true;
  });
  return found;
}

struct References {
  std::set<std::string> scalars;
  std::vector<std::string> arrays;  // deterministic emission order
};

void collect_expr_refs(const ExprPtr& e, std::set<std::string>& scalars,
                       std::set<std::string>& arrays) {
  for_each_node(e, [&](const Expr& n) {
    if (n.kind == ExprKind::ScalarRef) scalars.insert(n.name);
    if (n.kind == ExprKind::ArrayRead) arrays.insert(n.name);
  });
}

/// Referenced scalars plus referenced arrays ordered by declaration, each
/// primal name followed by its adjoint when both occur.
References collect_refs(const Problem& p, const std::vector<const Statement*>& stmts) {
  std::set<std::string> scalars, names;
  for (const Statement* st : stmts) {
    names.insert(st->array);
    collect_expr_refs(st->rhs, scalars, names);
  }
  References r;
  r.scalars = std::move(scalars);
  for (const auto& a : p.arrays) {
    if (names.count(a.name)) r.arrays.push_back(a.name);
    if (a.active && names.count(a.adjoint)) r.arrays.push_back(a.adjoint);
  }
  return r;
}

std::string signature(const Problem& p, const std::string& name, const References& refs,
                      const EmitOptions& opts) {
  std::ostringstream os;
  os << "int " << name << "(";
  bool first = true;
  auto param = [&](const std::string& text) {
    if (!first) os << ", ";
    os << text;
    first = false;
  };
  for (const auto& s : p.sizes) param("int " + s);
  for (const auto& s : p.scalars)
    if (refs.scalars.count(s)) param("double " + s);
  for (const auto& a : refs.arrays)
    param(std::string("double *") + (opts.restrict_pointers ? "restrict " : "") + a);
  os << ")";
  return os.str();
}

RenderCtx make_ctx(const Problem& p, const EmitOptions& opts, std::set<std::string>* used) {
  RenderCtx ctx;
  ctx.p = &p;
  for (const auto& a : p.arrays) {
    ctx.shape_of[a.name] = &a;
    if (a.active) ctx.shape_of[a.adjoint] = &a;
  }
  ctx.prototypes = &opts.opaque_prototypes;
  ctx.used_protos = used;
  return ctx;
}

std::string counter_decls(const std::vector<Counter>& counters) {
  std::ostringstream os;
  os << "  int ";
  for (std::size_t i = 0; i < counters.size(); i++) {
    if (i) os << ", ";
    os << counters[i];
  }
  os << ";\n";
  return os.str();
}

std::string pragma_line(const std::vector<Counter>& counters, const std::string& indent) {
  std::ostringstream os;
  os << indent << "#pragma omp parallel for private(";
  for (std::size_t i = 0; i < counters.size(); i++) {
    if (i) os << ",";
    os << counters[counters.size() - 1 - i];
  }
  os << ")\n";
  return os.str();
}

void emit_statement(std::ostringstream& os, const RenderCtx& ctx, const Statement& st,
                    const std::string& indent) {
  std::vector<IndexExpr> idx;
  idx.reserve(st.lhs.size());
  for (const auto& c : st.lhs) idx.push_back({c, 0});
  os << indent << array_ref(ctx, st.array, idx)
     << (st.mode == WriteMode::Assign ? " = " : " += ") << render(ctx, st.rhs, 0) << ";\n";
}

void emit_loop_nest(std::ostringstream& os, const RenderCtx& ctx, const StencilLoopNest& nest,
                    bool pragma) {
  const std::size_t d = nest.counters.size();
  if (pragma) os << pragma_line(nest.counters, "  ");
  for (std::size_t i = 0; i < d; i++) {
    std::string ind(2 * (i + 1), ' ');
    os << ind << "for ( " << nest.counters[i] << "=" << nest.bounds[i].lo.str() << "; "
       << nest.counters[i] << "<=" << nest.bounds[i].hi.str() << "; " << nest.counters[i]
       << "++ ) {\n";
  }
  std::string ind(2 * (d + 1), ' ');
  for (const auto& st : nest.body) emit_statement(os, ctx, st, ind);
  for (std::size_t i = d; i > 0; i--) os << std::string(2 * i, ' ') << "}\n";
}

std::string prototype_block(const EmitOptions& opts, const std::set<std::string>& used) {
  std::ostringstream os;
  for (const auto& fn : used) {
    std::string proto = opts.opaque_prototypes.at(fn);
    os << proto;
    if (proto.empty() || proto.back() != ';') os << ";";
    os << "\n";
  }
  if (!used.empty()) os << "\n";
  return os.str();
}

std::string file_head(bool math, const std::string& protos) {
  std::string out;
  if (math) out += "#include <math.h>\n\n";
  out += protos;
  return out;
}

}  // namespace

std::string emit_primal(const Problem& p, const EmitOptions& opts) {
  const std::string name = opts.function_name.empty() ? p.name : opts.function_name;
  const Statement& st = p.nest.body.front();
  std::set<std::string> used;
  RenderCtx ctx = make_ctx(p, opts, &used);

  StencilLoopNest nest = p.nest;
  for (auto& s : nest.body) s.rhs = simplify(s.rhs);

  std::ostringstream body;
  body << counter_decls(nest.counters);
  emit_loop_nest(body, ctx, nest, opts.parallel);
  body << "  return 0;\n";

  References refs = collect_refs(p, {&st});
  std::ostringstream os;
  os << file_head(needs_math(st.rhs), prototype_block(opts, used));
  os << signature(p, name, refs, opts) << " {\n" << body.str() << "}\n";
  return os.str();
}

std::string emit_adjoint(const Problem& p, const AdjointProgram& program_in,
                         const EmitOptions& opts) {
  const std::string name = opts.function_name.empty() ? p.name + "_b" : opts.function_name;
  const AdjointProgram program = opts.merge ? merge_statements(program_in) : program_in;
  std::set<std::string> used;
  RenderCtx ctx = make_ctx(p, opts, &used);

  bool math = false;
  std::vector<const Statement*> stmts;
  for (const auto& n : program.nests)
    for (const auto& st : n.nest.body) {
      stmts.push_back(&st);
      math = math || needs_math(st.rhs);
    }

  std::ostringstream body;
  bool any_loops = false;
  for (const auto& n : program.nests)
    if (!(opts.unroll_degenerate && nest_is_degenerate(n))) any_loops = true;
  if (any_loops && !program.nests.empty()) body << counter_decls(program.counters);

  std::set<std::string> guard_lines;
  for (const auto& [extent, needed] : program.extent_guards)
    guard_lines.insert("  if ( " + extent.str() + " < " + std::to_string(needed) +
                       " ) return 1;\n");
  for (const auto& g : guard_lines) body << g;

  if (opts.unroll_degenerate) {
    for (const auto& n : program.nests) {
      if (!nest_is_degenerate(n)) continue;
      std::map<Counter, AffineExpr> subst;
      for (std::size_t i = 0; i < n.nest.counters.size(); i++)
        subst[n.nest.counters[i]] = n.nest.bounds[i].lo;
      RenderCtx uctx = ctx;
      uctx.subst = &subst;
      for (const auto& st : n.nest.body) emit_statement(body, uctx, st, "  ");
    }
  }
  for (const auto& n : program.nests) {
    if (opts.unroll_degenerate && nest_is_degenerate(n)) continue;
    bool pragma = opts.parallel && !(n.nest.bounds.front().lo == n.nest.bounds.front().hi);
    emit_loop_nest(body, ctx, n.nest, pragma);
  }
  body << "  return 0;\n";

  References refs = collect_refs(p, stmts);
  std::ostringstream os;
  os << file_head(math, prototype_block(opts, used));
  os << signature(p, name, refs, opts) << " {\n" << body.str() << "}\n";
  return os.str();
}

std::string emit_scatter_adjoint(const Problem& p, const EmitOptions& opts) {
  const std::string name =
      opts.function_name.empty() ? p.name + "_scatter_b" : opts.function_name;
  const auto terms = derive_adjoint_terms(p);
  std::set<std::string> used;
  RenderCtx ctx = make_ctx(p, opts, &used);

  bool math = false;
  std::vector<Statement> stmts;
  for (const auto& t : terms) {
    std::vector<IndexExpr> seed_idx;
    for (const auto& c : t.seed_lhs) seed_idx.push_back({c, 0});
    Statement st;
    st.array = t.adjoint_array;
    st.lhs = p.nest.counters;  // placeholder; written with offsets below
    st.mode = WriteMode::Increment;
    st.rhs = simplify(mul({t.partial, array_read(t.seed_array, std::move(seed_idx))}));
    stmts.push_back(std::move(st));
    math = math || needs_math(stmts.back().rhs);
  }

  std::ostringstream body;
  body << counter_decls(p.nest.counters);
  if (opts.parallel) body << pragma_line(p.nest.counters, "  ");
  const std::size_t d = p.nest.counters.size();
  for (std::size_t i = 0; i < d; i++) {
    std::string ind(2 * (i + 1), ' ');
    body << ind << "for ( " << p.nest.counters[i] << "=" << p.nest.bounds[i].lo.str() << "; "
         << p.nest.counters[i] << "<=" << p.nest.bounds[i].hi.str() << "; "
         << p.nest.counters[i] << "++ ) {\n";
  }
  std::string ind(2 * (d + 1), ' ');
  for (std::size_t ti = 0; ti < terms.size(); ti++) {
    std::vector<IndexExpr> widx;
    for (std::size_t i = 0; i < d; i++)
      widx.push_back({p.nest.counters[i], terms[ti].input.offset[i]});
    if (opts.parallel) body << ind << "#pragma omp atomic\n";
    body << ind << array_ref(ctx, stmts[ti].array, widx) << " += "
         << render(ctx, stmts[ti].rhs, 0) << ";\n";
  }
  for (std::size_t i = d; i > 0; i--) body << std::string(2 * i, ' ') << "}\n";
  body << "  return 0;\n";

  std::vector<const Statement*> stmt_ptrs;
  for (const auto& st : stmts) stmt_ptrs.push_back(&st);
  References refs = collect_refs(p, stmt_ptrs);
  std::ostringstream os;
  os << file_head(math, prototype_block(opts, used));
  os << signature(p, name, refs, opts) << " {\n" << body.str() << "}\n";
  return os.str();
}

namespace {

std::string prototype_of(const std::string& source) {
  // The emitted file starts with optional includes/prototypes; the function
  // signature is the first line ending in " {".
  std::istringstream is(source);
  std::string line;
  while (std::getline(is, line)) {
    auto pos = line.rfind(" {");
    if (pos != std::string::npos && line.rfind("int ", 0) == 0)
      return line.substr(0, pos) + ";\n";
  }
  throw Error("no function signature found in emitted source");
}

}  // namespace

std::string primal_prototype(const Problem& p, const EmitOptions& opts) {
  return prototype_of(emit_primal(p, opts));
}

std::string adjoint_prototype(const Problem& p, const AdjointProgram& program,
                              const EmitOptions& opts) {
  return prototype_of(emit_adjoint(p, program, opts));
}

std::string scatter_prototype(const Problem& p, const EmitOptions& opts) {
  return prototype_of(emit_scatter_adjoint(p, opts));
}

}  // namespace stencilgrad
