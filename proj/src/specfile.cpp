#include "stencilgrad/specfile.hpp"

#include <sstream>

#include "json.hpp"

#include "stencilgrad/parser.hpp"

namespace stencilgrad {

using json = nlohmann::ordered_json;

namespace {

std::size_t line_of(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); i++)
    if (text[i] == '\n') line++;
  return line;
}

const json* get_field(const json& j, const char* name, ValidationReport& r) {
  auto it = j.find(name);
  if (it == j.end()) {
    r.add("missing-field", std::string("required field '") + name + "' is missing", name);
    return nullptr;
  }
  return &*it;
}

bool string_list(const json& j, std::vector<std::string>* out, ValidationReport& r,
                 const std::string& ctx) {
  if (!j.is_array()) {
    r.add("bad-field", "expected a list of strings", ctx);
    return false;
  }
  out->clear();
  for (const auto& e : j) {
    if (!e.is_string()) {
      r.add("bad-field", "expected a list of strings", ctx);
      return false;
    }
    out->push_back(e.get<std::string>());
  }
  return true;
}

std::optional<AffineExpr> affine_field(const json& j, ValidationReport& r, const std::string& ctx,
                                       const char* code) {
  if (!j.is_string()) {
    r.add("bad-field", "expected an affine expression string", ctx);
    return std::nullopt;
  }
  std::string err;
  auto a = parse_affine(j.get<std::string>(), &err);
  if (!a) r.add(code, "'" + j.get<std::string>() + "': " + err, ctx);
  return a;
}

}  // namespace

SpecParseResult parse_spec(std::string_view json_text) {
  SpecParseResult result;
  ValidationReport& r = result.report;

  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    r.add("json-syntax",
          std::string(e.what()) + " (line " + std::to_string(line_of(json_text, e.byte)) + ")");
    return result;
  }
  if (!doc.is_object()) {
    r.add("json-syntax", "the stencil description must be a JSON object");
    return result;
  }

  Problem p;
  if (const json* f = get_field(doc, "name", r)) {
    if (f->is_string())
      p.name = f->get<std::string>();
    else
      r.add("bad-field", "name must be a string", "name");
  }

  if (const json* f = get_field(doc, "counters", r)) string_list(*f, &p.nest.counters, r, "counters");
  if (const json* f = get_field(doc, "sizes", r)) string_list(*f, &p.sizes, r, "sizes");
  if (const json* f = get_field(doc, "scalars", r)) string_list(*f, &p.scalars, r, "scalars");

  if (const json* f = get_field(doc, "bounds", r)) {
    if (!f->is_object()) {
      r.add("bad-field", "bounds must map each counter to [lower, upper]", "bounds");
    } else {
      for (const auto& c : p.nest.counters) {
        auto it = f->find(c);
        if (it == f->end()) {
          r.add("missing-field", "no bounds for counter '" + c + "'", "bounds." + c);
          continue;
        }
        if (!it->is_array() || it->size() != 2) {
          r.add("bad-field", "bounds must be [lower, upper]", "bounds." + c);
          continue;
        }
        auto lo = affine_field((*it)[0], r, "bounds." + c, "non-affine-bound");
        auto hi = affine_field((*it)[1], r, "bounds." + c, "non-affine-bound");
        if (lo && hi) p.nest.bounds.push_back({*lo, *hi});
      }
    }
  }

  if (const json* f = get_field(doc, "arrays", r)) {
    if (!f->is_object()) {
      r.add("bad-field", "arrays must be an object keyed by array name", "arrays");
    } else {
      for (auto it = f->begin(); it != f->end(); ++it) {
        const std::string ctx = "arrays." + it.key();
        const json& a = it.value();
        if (!a.is_object()) {
          r.add("bad-field", "array declaration must be an object", ctx);
          continue;
        }
        ArrayDecl decl;
        decl.name = it.key();
        if (const json* g = get_field(a, "rank", r)) {
          if (g->is_number_integer())
            decl.rank = g->get<int>();
          else
            r.add("bad-field", "rank must be an integer", ctx + ".rank");
        }
        if (const json* g = get_field(a, "shape", r)) {
          if (!g->is_array()) {
            r.add("bad-field", "shape must be a list of affine expression strings", ctx + ".shape");
          } else {
            for (const auto& s : *g) {
              auto sh = affine_field(s, r, ctx + ".shape", "non-affine-shape");
              if (sh) decl.shape.push_back(*sh);
            }
          }
        }
        if (const json* g = get_field(a, "active", r)) {
          if (g->is_boolean())
            decl.active = g->get<bool>();
          else
            r.add("bad-field", "active must be a boolean", ctx + ".active");
        }
        if (decl.active) {
          if (const json* g = get_field(a, "adjoint", r)) {
            if (g->is_string())
              decl.adjoint = g->get<std::string>();
            else
              r.add("bad-field", "adjoint must be a string", ctx + ".adjoint");
          }
        }
        if (const json* g = get_field(a, "role", r)) {
          std::string role = g->is_string() ? g->get<std::string>() : "";
          if (role == "input")
            decl.role = ArrayRole::Input;
          else if (role == "output")
            decl.role = ArrayRole::Output;
          else if (role == "coefficient")
            decl.role = ArrayRole::Coefficient;
          else
            r.add("bad-field", "role must be input, output or coefficient", ctx + ".role");
        }
        p.arrays.push_back(std::move(decl));
      }
    }
  }

  Statement st;
  if (const json* f = get_field(doc, "lhs", r)) {
    std::string err;
    if (!f->is_string() || !parse_lhs_ref(f->get<std::string>(), &st.array, &st.lhs, &err))
      r.add("lhs-not-counter-permutation", err.empty() ? "bad lhs reference" : err, "lhs");
  }
  if (const json* f = get_field(doc, "mode", r)) {
    std::string mode = f->is_string() ? f->get<std::string>() : "";
    if (mode == "=")
      st.mode = WriteMode::Assign;
    else if (mode == "+=")
      st.mode = WriteMode::Increment;
    else
      r.add("bad-field", "mode must be \"=\" or \"+=\"", "mode");
  }
  if (const json* f = get_field(doc, "rhs", r)) {
    std::string err;
    if (!f->is_string()) {
      r.add("bad-field", "rhs must be an expression string", "rhs");
    } else if (auto e = parse_expr(f->get<std::string>(), &err)) {
      st.rhs = e;
    } else if (err.find("array index") != std::string::npos) {
      r.add("non-constant-offset", err, "rhs");
    } else {
      r.add("expr-syntax", err, "rhs");
    }
  }
  p.nest.body.push_back(std::move(st));

  if (!r.ok()) return result;

  ValidationReport vr = validate(p);
  for (auto& d : vr.diagnostics) r.diagnostics.push_back(std::move(d));
  if (r.ok()) result.problem = std::move(p);
  return result;
}

std::string serialize_spec(const Problem& p) {
  json doc;
  doc["name"] = p.name;
  doc["counters"] = p.nest.counters;
  json bounds = json::object();
  for (std::size_t i = 0; i < p.nest.counters.size(); i++)
    bounds[p.nest.counters[i]] = {p.nest.bounds[i].lo.str(), p.nest.bounds[i].hi.str()};
  doc["bounds"] = std::move(bounds);
  doc["sizes"] = p.sizes;
  doc["scalars"] = p.scalars;
  json arrays = json::object();
  for (const auto& a : p.arrays) {
    json d;
    d["rank"] = a.rank;
    json shape = json::array();
    for (const auto& s : a.shape) shape.push_back(s.str());
    d["shape"] = std::move(shape);
    d["active"] = a.active;
    if (a.active) d["adjoint"] = a.adjoint;
    d["role"] = a.role == ArrayRole::Input        ? "input"
                : a.role == ArrayRole::Output     ? "output"
                                                  : "coefficient";
    arrays[a.name] = std::move(d);
  }
  doc["arrays"] = std::move(arrays);
  const Statement& st = p.nest.body.front();
  std::string lhs = st.array;
  for (const auto& c : st.lhs) lhs += "[" + c + "]";
  doc["lhs"] = lhs;
  doc["mode"] = st.mode == WriteMode::Assign ? "=" : "+=";
  doc["rhs"] = to_input_string(st.rhs);
  return doc.dump(2) + "\n";
}

}  // namespace stencilgrad
