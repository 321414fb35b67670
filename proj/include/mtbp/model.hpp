#pragma once

#include <string>
#include <vector>

#include "mtbp/types.hpp"

namespace mtbp {

struct OffspringAtom {
  std::vector<int> counts;  // counts[j] = number of type-j children
  double prob = 0.0;

  int total() const;
};

// Finite-support offspring distribution on Z_+^S.
struct OffspringLaw {
  std::vector<OffspringAtom> atoms;
};

struct BranchingModel {
  std::vector<std::string> type_names;
  Vector split_rates;  // a_i, per unit time
  std::vector<OffspringLaw> offspring;

  std::size_t num_types() const { return offspring.size(); }
  const std::string& name(TypeIndex i) const { return type_names[i.value]; }
  // Resolves a type by its declared name; throws ModelError if unknown.
  TypeIndex type_named(const std::string& name) const;
};

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

inline constexpr double kProbSumTolerance = 1e-12;
inline constexpr double kMinAtomProb = 1e-15;

// Checks every model invariant and names each violation. Never throws.
ValidationReport validate_model(const BranchingModel& model);

// Throws ModelError with the validation summary if the model is invalid.
void require_valid(const BranchingModel& model);

// Support graph of M: edge i -> j iff some atom of p_i with positive
// probability has a positive j-count.
std::vector<std::vector<bool>> support_graph(const BranchingModel& model);

// Strong connectivity of a directed graph given as an adjacency matrix.
bool strongly_connected(const std::vector<std::vector<bool>>& adjacency);

struct MeanData {
  Matrix M;          // m_ij
  Vector row_means;  // m_i
  Matrix A;          // a_ij = a_i (m_ij - delta_ij)
  Vector r;          // r_i = a_i (m_i - 1)
};

MeanData mean_data(const BranchingModel& model);

// Finite support makes E(N_ij log N_ij) finite for every validating model.
constexpr bool zlogz_condition_holds(const BranchingModel&) { return true; }

// Model file: `types = [..]`, then one `[name]` section per type with
// `rate = <a>` and repeated `atom = {counts = [...], prob = <p>}` lines.
BranchingModel parse_model(const std::string& text);
BranchingModel load_model(const std::string& path);
std::string format_model(const BranchingModel& model);

}  // namespace mtbp
