#pragma once

#include <vector>

#include "mtbp/family_tree.hpp"
#include "mtbp/forward_sim.hpp"
#include "mtbp/rng.hpp"
#include "mtbp/spectral.hpp"

namespace mtbp {

struct BiasedTree {
  FamilyTree tree;
  std::vector<Id> trunk_ids;  // xi_0, xi_1, ...: each a child of the previous
  BiasVariant variant = BiasVariant::h_biased;

  // Type history of the trunk on [0, horizon], one segment per trunk individual.
  TrunkPath trunk_path() const;
};

// Size-biased tree with trunk for an arbitrary positive weight vector gamma.
// Trunk individuals use the gamma-biased offspring law and lifetime rate;
// every other individual follows the unbiased model.
class BiasedSimulator {
 public:
  BiasedSimulator(BranchingModel model, SizeBiasedLaw law);

  BiasedTree simulate(TypeIndex root, double horizon, std::size_t cap, Engine& rng) const;

  // The trunk alone, built by realizing each trunk individual's biased
  // offspring and selecting the successor among the realized children.
  TrunkPath simulate_spine(TypeIndex root, double horizon, Engine& rng) const;

  const SizeBiasedLaw& law() const { return law_; }
  const BranchingModel& model() const { return model_; }

 private:
  BranchingModel model_;
  SizeBiasedLaw law_;
  std::vector<CategoricalTable> tables_;
  std::vector<CategoricalTable> biased_tables_;
};

BiasedTree simulate_biased_tree(const BranchingModel& model, const SpectralData& spec, BiasVariant variant,
                                TypeIndex root, double horizon, std::size_t cap, Engine& rng);

// Embedded jump chain with holding rates; self-jumps are kept.
struct JumpChain {
  Vector holding_rates;
  Matrix jump_probs;
};

JumpChain jump_chain(const RetrospectiveChain& chain);
// gamma = 1 trunk: holding rate a_i m_i, jump to j with probability m_ij / m_i.
JumpChain uniform_jump_chain(const BranchingModel& model);

// Marginal trunk chain; a new segment begins at every jump, including self-jumps.
TrunkPath simulate_trunk(const JumpChain& chain, TypeIndex root, double horizon, Engine& rng);

// Continuous-time chain with generator G: exit rate -g_ii, jump law g_ij / -g_ii.
TrunkPath simulate_mutation_chain(const Matrix& G, TypeIndex start, double horizon, Engine& rng);

}  // namespace mtbp
