#include "stencilgrad/examples.hpp"

#include "stencilgrad/specfile.hpp"

namespace stencilgrad {

namespace {

const char* kLap1d = R"json({
  "name": "lap1d",
  "counters": ["i"],
  "bounds": {
    "i": ["1", "n - 1"]
  },
  "sizes": ["n"],
  "scalars": [],
  "arrays": {
    "c": {"rank": 1, "shape": ["n + 1"], "active": false, "role": "coefficient"},
    "u": {"rank": 1, "shape": ["n + 1"], "active": true, "adjoint": "ub", "role": "input"},
    "r": {"rank": 1, "shape": ["n + 1"], "active": true, "adjoint": "rb", "role": "output"}
  },
  "lhs": "r[i]",
  "mode": "=",
  "rhs": "c[i]*(2.0*u[i-1] - 3.0*u[i] + 4.0*u[i+1])"
}
)json";

const char* kWave3d = R"json({
  "name": "wave3d",
  "counters": ["i", "j", "k"],
  "bounds": {
    "i": ["1", "n - 2"],
    "j": ["1", "n - 2"],
    "k": ["1", "n - 2"]
  },
  "sizes": ["n"],
  "scalars": ["D"],
  "arrays": {
    "c": {"rank": 3, "shape": ["n", "n", "n"], "active": false, "role": "coefficient"},
    "u_1": {"rank": 3, "shape": ["n", "n", "n"], "active": true, "adjoint": "u_1_b", "role": "input"},
    "u_2": {"rank": 3, "shape": ["n", "n", "n"], "active": true, "adjoint": "u_2_b", "role": "input"},
    "u": {"rank": 3, "shape": ["n", "n", "n"], "active": true, "adjoint": "u_b", "role": "output"}
  },
  "lhs": "u[i][j][k]",
  "mode": "+=",
  "rhs": "2.0*u_1[i][j][k] - u_2[i][j][k] + c[i][j][k]*D*(u_1[i-1][j][k] - 2*u_1[i][j][k] + u_1[i+1][j][k] + u_1[i][j-1][k] - 2*u_1[i][j][k] + u_1[i][j+1][k] + u_1[i][j][k-1] - 2*u_1[i][j][k] + u_1[i][j][k+1])"
}
)json";

const char* kBurgers1d = R"json({
  "name": "burgers1d",
  "counters": ["i"],
  "bounds": {
    "i": ["1", "n - 2"]
  },
  "sizes": ["n"],
  "scalars": ["C", "D"],
  "arrays": {
    "u_1": {"rank": 1, "shape": ["n"], "active": true, "adjoint": "u_1_b", "role": "input"},
    "u": {"rank": 1, "shape": ["n"], "active": true, "adjoint": "u_b", "role": "output"}
  },
  "lhs": "u[i]",
  "mode": "+=",
  "rhs": "u_1[i] - C*(max(u_1[i], 0)*(u_1[i] - u_1[i-1]) + min(u_1[i], 0)*(u_1[i+1] - u_1[i])) + D*(u_1[i+1] + u_1[i-1] - 2.0*u_1[i])"
}
)json";

}  // namespace

std::vector<std::string> example_names() { return {"lap1d", "wave3d", "burgers1d"}; }

std::string example_spec_text(const std::string& name) {
  if (name == "lap1d") return kLap1d;
  if (name == "wave3d") return kWave3d;
  if (name == "burgers1d") return kBurgers1d;
  throw Error("unknown example '" + name + "' (expected lap1d, wave3d or burgers1d)");
}

Problem example_problem(const std::string& name) {
  auto result = parse_spec(example_spec_text(name));
  if (!result.problem)
    throw Error("bundled example '" + name + "' failed to parse:\n" + result.report.str());
  return *result.problem;
}

}  // namespace stencilgrad
