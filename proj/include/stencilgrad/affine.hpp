#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace stencilgrad {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Integer-linear expression c0 + sum(ck * symk) over size symbols.
/// Exact integer arithmetic; coefficient maps are kept normalized
/// (no zero entries), so operator== decides semantic equality.
class AffineExpr {
 public:
  AffineExpr() = default;
  AffineExpr(long long c) : constant_(c) {}
  static AffineExpr sym(std::string name, long long coeff = 1);

  AffineExpr& operator+=(const AffineExpr& o);
  AffineExpr& operator-=(const AffineExpr& o);
  friend AffineExpr operator+(AffineExpr a, const AffineExpr& b) {
    a += b;
    return a;
  }
  friend AffineExpr operator-(AffineExpr a, const AffineExpr& b) {
    a -= b;
    return a;
  }
  AffineExpr operator-() const;
  AffineExpr scaled(long long k) const;

  bool operator==(const AffineExpr&) const = default;
  bool operator<(const AffineExpr& o) const;

  bool is_constant() const { return coeffs_.empty(); }
  long long constant_term() const { return constant_; }
  const std::map<std::string, long long>& coefficients() const { return coeffs_; }

  /// Exact value under the given size bindings; throws Error on an unbound symbol.
  long long eval(const std::map<std::string, long long>& bindings) const;

  std::string str() const;

 private:
  std::map<std::string, long long> coeffs_;
  long long constant_ = 0;
};

/// Parses "2*n - 3", "n + 1", "0", ... Rejects nonlinear input such as "n*n".
std::optional<AffineExpr> parse_affine(std::string_view text, std::string* error = nullptr);

}  // namespace stencilgrad
