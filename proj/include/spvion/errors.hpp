#pragma once

#include <stdexcept>
#include <string>

namespace spvion {

// Numerical failure with a physical diagnosis attached (non-convergence,
// mode degeneracy, resonance).  The CLI maps this to its own exit code so
// scripts can tell "bad math" from "bad input".
struct SolverError : std::runtime_error {
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace spvion
