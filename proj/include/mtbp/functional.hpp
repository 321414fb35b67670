#pragma once

#include <string>

#include "mtbp/model.hpp"
#include "mtbp/path.hpp"

namespace mtbp {

enum class FunctionalKind {
  constant_one,
  terminal_type,    // I{sigma(x(t)) = j}
  flip_count_le,    // I{number of type changes along x[0,t] <= k}
  occupation_ge,    // I{L^x_j(t) >= theta}
  population_size,  // |X(t)|, a function of the tree alone
};

// Closed registry of test functionals evaluated identically on forward
// lineages and on the trunk of a biased tree.
struct PathFunctional {
  FunctionalKind kind = FunctionalKind::constant_one;
  TypeIndex type;
  std::size_t k = 0;
  double theta = 0.0;

  // Depends on more than the lineage's type history.
  bool needs_tree() const { return kind == FunctionalKind::population_size; }
  // Depends on more than the terminal type of the lineage.
  bool needs_path() const { return kind == FunctionalKind::flip_count_le || kind == FunctionalKind::occupation_ge; }

  double evaluate(const TrunkPath& lineage, std::size_t num_types, std::size_t population) const;
  // Canonical `name:params` form, using the model's type names.
  std::string name(const BranchingModel& model) const;
};

// Parses `constant_one`, `terminal_type:<type>`, `flip_count_le:<k>`,
// `occupation_ge:<type>,<theta>` or `population_size`. Types are given by name.
PathFunctional parse_functional(const std::string& text, const BranchingModel& model);

}  // namespace mtbp
