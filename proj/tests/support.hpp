#pragma once

#include <random>
#include <string>

#include "mtbp/model.hpp"

namespace mtbp::test {

inline std::string model_path(const std::string& name) { return std::string(MTBP_MODELS_DIR) + "/" + name + ".cfg"; }

inline BranchingModel load(const std::string& name) { return load_model(model_path(name)); }

// Random irreducible-or-not model with |S| types and up to 3 atoms per type.
inline BranchingModel random_model(std::size_t S, std::mt19937_64& rng, double zero_bias = 0.5) {
  BranchingModel m;
  m.split_rates = Vector(static_cast<Eigen::Index>(S));
  std::uniform_real_distribution<double> unif(0.2, 2.0);
  std::uniform_int_distribution<int> count(0, 2);
  std::bernoulli_distribution zero(zero_bias);
  for (std::size_t i = 0; i < S; ++i) {
    m.type_names.push_back(std::to_string(i + 1));
    m.split_rates[static_cast<Eigen::Index>(i)] = unif(rng);
    OffspringLaw law;
    const int atoms = 1 + std::uniform_int_distribution<int>(0, 2)(rng);
    double total = 0.0;
    for (int a = 0; a < atoms; ++a) {
      OffspringAtom atom;
      for (std::size_t j = 0; j < S; ++j) atom.counts.push_back(zero(rng) ? 0 : count(rng));
      bool duplicate = false;
      for (const auto& other : law.atoms) duplicate = duplicate || other.counts == atom.counts;
      if (duplicate) continue;
      atom.prob = unif(rng);
      total += atom.prob;
      law.atoms.push_back(atom);
    }
    for (auto& atom : law.atoms) atom.prob /= total;
    m.offspring.push_back(law);
  }
  return m;
}

}  // namespace mtbp::test
