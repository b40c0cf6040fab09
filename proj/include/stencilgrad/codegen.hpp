#pragma once

#include <map>
#include <string>

#include "stencilgrad/adjoint.hpp"
#include "stencilgrad/nest.hpp"

namespace stencilgrad {

struct EmitOptions {
  std::string function_name;       // empty: problem name (adjoint: + "_b")
  bool parallel = true;            // emit OpenMP pragmas
  bool unroll_degenerate = false;  // single-iteration nests become bare statements
  bool merge = false;              // combine statements sharing an lhs
  bool restrict_pointers = false;
  // C prototype text per opaque function name (including derivative names).
  std::map<std::string, std::string> opaque_prototypes;
};

/// One C99 function for the primal nest. Arrays are passed as flat pointers
/// with row-major index arithmetic from the declared shapes; the function
/// returns 0.
std::string emit_primal(const Problem& p, const EmitOptions& opts);

/// One C99 function for the adjoint program: minimum-extent guards (return 1
/// when violated), optional unrolled degenerate statements, then the loop
/// nests in program order. Returns 0 on success.
std::string emit_adjoint(const Problem& p, const AdjointProgram& program,
                         const EmitOptions& opts);

/// Conventional scatter adjoint over the primal iteration space, each
/// increment guarded by an atomic pragma when parallel. Benchmark aid only.
std::string emit_scatter_adjoint(const Problem& p, const EmitOptions& opts);

std::string primal_prototype(const Problem& p, const EmitOptions& opts);
std::string adjoint_prototype(const Problem& p, const AdjointProgram& program,
                              const EmitOptions& opts);
std::string scatter_prototype(const Problem& p, const EmitOptions& opts);

}  // namespace stencilgrad
