#pragma once

#include <queue>
#include <vector>

#include "mtbp/family_tree.hpp"
#include "mtbp/rng.hpp"

namespace mtbp::detail {

// Trunk rule of a size-biased tree: biased offspring tables, trunk lifetime
// rates and successor weights gamma.
struct TrunkRule {
  const std::vector<OffspringLaw>* laws = nullptr;
  const std::vector<CategoricalTable>* tables = nullptr;
  const Vector* rates = nullptr;
  const Vector* gamma = nullptr;
};

// Picks the successor among `count` consecutive children starting at `first`,
// with probability proportional to gamma of the child's type.
Id pick_successor(const std::vector<int>& counts, Id first, const Vector& gamma, Engine& rng);

class TreeBuilder {
 public:
  TreeBuilder(const BranchingModel& model, const std::vector<CategoricalTable>& tables)
      : model_(model), tables_(tables) {}

  FamilyTree build(TypeIndex root, double horizon, std::size_t cap, Engine& rng, const TrunkRule* trunk,
                   std::vector<Id>* trunk_ids) const;

 private:
  const BranchingModel& model_;
  const std::vector<CategoricalTable>& tables_;
};

}  // namespace mtbp::detail
