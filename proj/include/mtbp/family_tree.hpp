#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "mtbp/model.hpp"
#include "mtbp/path.hpp"

namespace mtbp {

using Id = std::uint32_t;
inline constexpr Id kNoParent = std::numeric_limits<Id>::max();

enum class Fate : std::uint8_t { split, boundary, dead };

struct Individual {
  Id parent = kNoParent;
  TypeIndex type;
  double birth = 0.0;
  double end = 0.0;  // split/death time, or the horizon for boundary individuals
  Fate fate = Fate::boundary;
  Id first_child = 0;  // children of a split are the contiguous ids
  std::uint32_t num_children = 0;  // [first_child, first_child + num_children)

  bool has_parent() const { return parent != kNoParent; }
  // Lifetime is [birth, end); a boundary individual is also alive at end.
  bool alive_at(double t) const { return birth <= t && (t < end || (fate == Fate::boundary && t == end)); }
};

// Arena of individuals in creation order. Children always have larger ids
// than their parent, and every split parent ends where its children begin.
struct FamilyTree {
  std::vector<Individual> individuals;
  std::size_t num_types = 0;
  TypeIndex root_type;
  double horizon = 0.0;
  std::optional<double> extinct_at;
  std::optional<double> capped_at;  // cap breach time; queries are valid only before it

  bool capped() const { return capped_at.has_value(); }
  std::size_t size() const { return individuals.size(); }
  const Individual& operator[](Id id) const { return individuals[id]; }
};

using CountVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

// Ids alive at t (birth <= t < end). Throws QueryError if t is outside [0, horizon].
std::vector<Id> population_at(const FamilyTree& tree, double t);
// Z(t), the type histogram of population_at(t).
CountVector type_counts(const FamilyTree& tree, double t);

// Ancestor of x (alive at t) living at time s <= t.
Id ancestor_at(const FamilyTree& tree, Id x, double t, double s);

// Type history of the lineage of x on [0, t], one segment per ancestor.
TrunkPath lineage_path(const FamilyTree& tree, Id x, double t);

// L^x(t): fraction of [0, t] the lineage of x spent in each type.
Vector lineage_occupation(const FamilyTree& tree, Id x, double t);

// A^u(t): type histogram of the time-(t-u) ancestors of X(t), normalized by |X(t)|.
Vector ancestral_average(const FamilyTree& tree, double t, double u);

// W(t) = <Z(t), h> e^{-lambda t}.
double martingale_W(const FamilyTree& tree, const Vector& h, double lambda, double t);
// W~(t) = sum over x in X(t) of exp(-t <L^x(t), r>).
double martingale_Wtilde(const FamilyTree& tree, const Vector& r, double t);

// Per-segment statistics summed over the lineages of X(t). With
// `merge_repeats`, consecutive ancestors of the same type count as one sojourn.
PathStatistics lineage_statistics(const FamilyTree& tree, double t, bool merge_repeats = false);

// Fraction of x in X(t) with ||L^x(t) - reference||_TV >= eps.
double empirical_L_distribution(const FamilyTree& tree, double t, const Vector& reference, double eps);

enum class SubtreeFunctional {
  population,  // |X(x, s+u)|
  survival,    // 1 if X(x, s+u) is nonempty
  type_count,  // Z_k(x, s+u)
};

struct SubtreeQuery {
  SubtreeFunctional kind = SubtreeFunctional::population;
  TypeIndex type;  // used by type_count
};

// Average of f over the descendant subtrees X(x, [s, s+u]) of x in X_j(s).
double subtree_functional_average(const FamilyTree& tree, TypeIndex j, double s, double u, SubtreeQuery f);

}  // namespace mtbp
