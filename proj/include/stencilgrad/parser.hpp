#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "stencilgrad/expr.hpp"

namespace stencilgrad {

/// Parses the infix expression grammar: numeric literals, identifiers, array
/// reads name[counter +- int]..., binary + - * /, unary -, min(a,b),
/// max(a,b), pow(a,k), parentheses. Returns nullptr and fills *error on
/// failure. Division becomes multiplication by pow(denominator, -1).
ExprPtr parse_expr(std::string_view text, std::string* error = nullptr);

/// Parses an lhs reference "r[i][j]" into array name and bare counters.
bool parse_lhs_ref(std::string_view text, std::string* array, std::vector<std::string>* counters,
                   std::string* error = nullptr);

}  // namespace stencilgrad
