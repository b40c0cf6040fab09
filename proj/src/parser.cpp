#include "stencilgrad/parser.hpp"

#include <cctype>
#include <cstdlib>
#include <sstream>

namespace stencilgrad {

namespace {

struct ExprParser {
  std::string_view text;
  std::size_t pos = 0;
  std::string error;

  void fail(const std::string& msg) {
    if (error.empty()) {
      std::ostringstream os;
      os << msg << " at position " << pos;
      error = os.str();
    }
  }

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) pos++;
  }
  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }
  bool accept(char c) {
    if (peek() == c) {
      pos++;
      return true;
    }
    return false;
  }
  bool expect(char c) {
    if (accept(c)) return true;
    fail(std::string("expected '") + c + "'");
    return false;
  }

  std::string ident() {
    skip_ws();
    if (pos >= text.size() ||
        (!std::isalpha(static_cast<unsigned char>(text[pos])) && text[pos] != '_'))
      return {};
    std::size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      pos++;
    return std::string(text.substr(start, pos - start));
  }

  bool integer_literal(long long* out) {
    skip_ws();
    bool neg = false;
    std::size_t save = pos;
    if (accept('-')) neg = true;
    skip_ws();
    if (pos >= text.size() || !std::isdigit(static_cast<unsigned char>(text[pos]))) {
      pos = save;
      return false;
    }
    long long v = 0;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      v = v * 10 + (text[pos] - '0');
      pos++;
    }
    *out = neg ? -v : v;
    return true;
  }

  ExprPtr number_literal() {
    skip_ws();
    std::size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) pos++;
    bool is_float = false;
    if (pos < text.size() && text[pos] == '.') {
      is_float = true;
      pos++;
      while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) pos++;
    }
    if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
      std::size_t save = pos;
      pos++;
      if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) pos++;
      if (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
        is_float = true;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) pos++;
      } else {
        pos = save;
      }
    }
    std::string tok(text.substr(start, pos - start));
    if (is_float) return number(std::strtod(tok.c_str(), nullptr));
    return integer(std::strtoll(tok.c_str(), nullptr, 10));
  }

  // idx := counter | counter ('+'|'-') INT
  bool parse_index(IndexExpr* out) {
    std::string c = ident();
    if (c.empty()) {
      fail("array index must be a counter with an optional constant offset");
      return false;
    }
    out->counter = c;
    out->offset = 0;
    skip_ws();
    if (peek() == '+' || peek() == '-') {
      char sign = text[pos];
      std::size_t save = pos;
      pos++;
      skip_ws();
      if (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
        long long v = 0;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
          v = v * 10 + (text[pos] - '0');
          pos++;
        }
        out->offset = sign == '+' ? v : -v;
      } else {
        pos = save;
        fail("array index must be a counter with an optional constant offset");
        return false;
      }
    }
    if (peek() != ']') {
      fail("array index must be a counter with an optional constant offset");
      return false;
    }
    return true;
  }

  ExprPtr parse_sum() {
    auto lhs = parse_product();
    if (!lhs) return nullptr;
    while (true) {
      char c = peek();
      if (c != '+' && c != '-') break;
      pos++;
      auto rhs = parse_product();
      if (!rhs) return nullptr;
      lhs = c == '+' ? add({lhs, rhs}) : add({lhs, negate(rhs)});
    }
    return lhs;
  }

  ExprPtr parse_product() {
    auto lhs = parse_unary();
    if (!lhs) return nullptr;
    while (true) {
      char c = peek();
      if (c != '*' && c != '/') break;
      pos++;
      auto rhs = parse_unary();
      if (!rhs) return nullptr;
      lhs = c == '*' ? mul({lhs, rhs}) : mul({lhs, pow_of(rhs, -1)});
    }
    return lhs;
  }

  ExprPtr parse_unary() {
    if (accept('-')) {
      auto e = parse_unary();
      if (!e) return nullptr;
      return negate(e);
    }
    return parse_atom();
  }

  ExprPtr parse_atom() {
    skip_ws();
    if (accept('(')) {
      auto e = parse_sum();
      if (!e) return nullptr;
      if (!expect(')')) return nullptr;
      return e;
    }
    if (pos < text.size() &&
        (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.'))
      return number_literal();
    std::string name = ident();
    if (name.empty()) {
      fail("expected a number, identifier or '('");
      return nullptr;
    }
    skip_ws();
    if (peek() == '(') {
      pos++;
      if (name == "min" || name == "max") {
        auto a = parse_sum();
        if (!a || !expect(',')) return nullptr;
        auto b = parse_sum();
        if (!b || !expect(')')) return nullptr;
        return name == "min" ? min_of(a, b) : max_of(a, b);
      }
      if (name == "pow") {
        auto base = parse_sum();
        if (!base || !expect(',')) return nullptr;
        long long k = 0;
        if (!integer_literal(&k)) {
          fail("pow exponent must be an integer literal");
          return nullptr;
        }
        if (!expect(')')) return nullptr;
        return pow_of(base, k);
      }
      fail("unknown function '" + name + "' (expected min, max or pow)");
      return nullptr;
    }
    if (peek() == '[') {
      std::vector<IndexExpr> indices;
      while (accept('[')) {
        IndexExpr ix;
        if (!parse_index(&ix)) return nullptr;
        if (!expect(']')) return nullptr;
        indices.push_back(ix);
      }
      return array_read(name, std::move(indices));
    }
    return scalar_ref(name);
  }
};

}  // namespace

ExprPtr parse_expr(std::string_view text, std::string* error) {
  ExprParser p;
  p.text = text;
  auto e = p.parse_sum();
  if (e) {
    p.skip_ws();
    if (p.pos != text.size()) {
      p.fail("trailing input");
      e = nullptr;
    }
  }
  if (!e && error) *error = p.error.empty() ? "syntax error" : p.error;
  return e;
}

bool parse_lhs_ref(std::string_view text, std::string* array, std::vector<std::string>* counters,
                   std::string* error) {
  ExprParser p;
  p.text = text;
  std::string name = p.ident();
  if (name.empty()) {
    if (error) *error = "expected an array name";
    return false;
  }
  counters->clear();
  while (p.accept('[')) {
    std::string c = p.ident();
    if (c.empty()) {
      if (error) *error = "lhs indices must be bare counters";
      return false;
    }
    if (!p.accept(']')) {
      if (error) *error = "lhs indices must be bare counters";
      return false;
    }
    counters->push_back(c);
  }
  p.skip_ws();
  if (p.pos != text.size()) {
    if (error) *error = "trailing input after lhs reference";
    return false;
  }
  *array = name;
  return true;
}

}  // namespace stencilgrad
