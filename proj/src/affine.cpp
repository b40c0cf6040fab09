#include "stencilgrad/affine.hpp"

#include <cctype>
#include <sstream>

namespace stencilgrad {

AffineExpr AffineExpr::sym(std::string name, long long coeff) {
  AffineExpr a;
  if (coeff != 0) a.coeffs_[std::move(name)] = coeff;
  return a;
}

AffineExpr& AffineExpr::operator+=(const AffineExpr& o) {
  constant_ += o.constant_;
  for (const auto& [name, c] : o.coeffs_) {
    long long v = (coeffs_[name] += c);
    if (v == 0) coeffs_.erase(name);
  }
  return *this;
}

AffineExpr& AffineExpr::operator-=(const AffineExpr& o) {
  constant_ -= o.constant_;
  for (const auto& [name, c] : o.coeffs_) {
    long long v = (coeffs_[name] -= c);
    if (v == 0) coeffs_.erase(name);
  }
  return *this;
}

AffineExpr AffineExpr::operator-() const { return scaled(-1); }

AffineExpr AffineExpr::scaled(long long k) const {
  AffineExpr r;
  if (k == 0) return r;
  r.constant_ = constant_ * k;
  for (const auto& [name, c] : coeffs_) r.coeffs_[name] = c * k;
  return r;
}

bool AffineExpr::operator<(const AffineExpr& o) const {
  if (coeffs_ != o.coeffs_) return coeffs_ < o.coeffs_;
  return constant_ < o.constant_;
}

long long AffineExpr::eval(const std::map<std::string, long long>& bindings) const {
  long long v = constant_;
  for (const auto& [name, c] : coeffs_) {
    auto it = bindings.find(name);
    if (it == bindings.end()) throw Error("unbound size symbol '" + name + "'");
    v += c * it->second;
  }
  return v;
}

std::string AffineExpr::str() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& [name, c] : coeffs_) {
    long long mag = c < 0 ? -c : c;
    if (first) {
      if (c < 0) os << "-";
      first = false;
    } else {
      os << (c < 0 ? " - " : " + ");
    }
    if (mag != 1) os << mag << "*";
    os << name;
  }
  if (first) {
    os << constant_;
  } else if (constant_ != 0) {
    os << (constant_ < 0 ? " - " : " + ") << (constant_ < 0 ? -constant_ : constant_);
  }
  return os.str();
}

namespace {

struct AffineParser {
  std::string_view text;
  std::size_t pos = 0;
  std::string error;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) pos++;
  }
  bool eof() {
    skip_ws();
    return pos >= text.size();
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

  std::optional<AffineExpr> parse_sum() {
    bool neg = false;
    while (true) {
      if (accept('-'))
        neg = !neg;
      else if (accept('+'))
        ;
      else
        break;
    }
    auto lhs = parse_product();
    if (!lhs) return std::nullopt;
    AffineExpr acc = neg ? -*lhs : *lhs;
    while (true) {
      char c = peek();
      if (c != '+' && c != '-') break;
      pos++;
      auto rhs = parse_product();
      if (!rhs) return std::nullopt;
      if (c == '+')
        acc += *rhs;
      else
        acc -= *rhs;
    }
    return acc;
  }

  std::optional<AffineExpr> parse_product() {
    auto lhs = parse_atom();
    if (!lhs) return std::nullopt;
    while (peek() == '*') {
      pos++;
      auto rhs = parse_atom();
      if (!rhs) return std::nullopt;
      if (lhs->is_constant())
        lhs = rhs->scaled(lhs->constant_term());
      else if (rhs->is_constant())
        lhs = lhs->scaled(rhs->constant_term());
      else {
        error = "nonlinear product of symbols";
        return std::nullopt;
      }
    }
    return lhs;
  }

  std::optional<AffineExpr> parse_atom() {
    skip_ws();
    if (accept('(')) {
      auto e = parse_sum();
      if (!e) return std::nullopt;
      if (!accept(')')) {
        error = "expected ')'";
        return std::nullopt;
      }
      return e;
    }
    if (accept('-')) {
      auto e = parse_atom();
      if (!e) return std::nullopt;
      return -*e;
    }
    if (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      long long v = 0;
      while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
        v = v * 10 + (text[pos] - '0');
        pos++;
      }
      return AffineExpr(v);
    }
    if (pos < text.size() &&
        (std::isalpha(static_cast<unsigned char>(text[pos])) || text[pos] == '_')) {
      std::size_t start = pos;
      while (pos < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
        pos++;
      return AffineExpr::sym(std::string(text.substr(start, pos - start)));
    }
    error = "expected number, symbol or '('";
    return std::nullopt;
  }
};

}  // namespace

std::optional<AffineExpr> parse_affine(std::string_view text, std::string* error) {
  AffineParser p;
  p.text = text;
  auto e = p.parse_sum();
  if (e && !p.eof()) {
    p.error = "trailing input";
    e = std::nullopt;
  }
  if (!e && error) *error = p.error.empty() ? "syntax error" : p.error;
  return e;
}

}  // namespace stencilgrad
