#pragma once

#include <string>
#include <vector>

#include "stencilgrad/nest.hpp"

namespace stencilgrad {

/// Bundled stencil descriptions: lap1d, wave3d, burgers1d.
std::vector<std::string> example_names();
std::string example_spec_text(const std::string& name);  // throws Error on unknown name
Problem example_problem(const std::string& name);

}  // namespace stencilgrad
