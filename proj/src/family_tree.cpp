#include "mtbp/family_tree.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mtbp/linalg.hpp"

namespace mtbp {

namespace {

void check_time(const FamilyTree& tree, double t, const char* op) {
  if (!(t >= 0.0) || t > tree.horizon) {
    throw QueryError(std::string(op) + ": time " + std::to_string(t) + " outside [0, " +
                     std::to_string(tree.horizon) + "]");
  }
  if (tree.capped_at && t > *tree.capped_at) {
    throw QueryError(std::string(op) + ": tree was capped at time " + std::to_string(*tree.capped_at));
  }
}

void check_alive(const FamilyTree& tree, Id x, double t, const char* op) {
  if (x >= tree.size() || !tree[x].alive_at(t)) {
    throw QueryError(std::string(op) + ": individual " + std::to_string(x) + " is not alive at " +
                     std::to_string(t));
  }
}

std::vector<Id> nonempty_population(const FamilyTree& tree, double t, const char* op) {
  auto pop = population_at(tree, t);
  if (pop.empty()) throw QueryError(std::string(op) + ": undefined on extinction (X(t) is empty)");
  return pop;
}

}  // namespace

std::vector<Id> population_at(const FamilyTree& tree, double t) {
  check_time(tree, t, "population_at");
  std::vector<Id> out;
  for (Id id = 0; id < tree.size(); ++id) {
    if (tree[id].alive_at(t)) out.push_back(id);
  }
  return out;
}

CountVector type_counts(const FamilyTree& tree, double t) {
  CountVector z = CountVector::Zero(static_cast<Eigen::Index>(tree.num_types));
  for (Id id : population_at(tree, t)) z[tree[id].type] += 1;
  return z;
}

Id ancestor_at(const FamilyTree& tree, Id x, double t, double s) {
  check_time(tree, t, "ancestor_at");
  check_alive(tree, x, t, "ancestor_at");
  if (!(s >= 0.0) || s > t) throw QueryError("ancestor_at: need 0 <= s <= t");
  Id id = x;
  while (tree[id].birth > s) id = tree[id].parent;
  return id;
}

TrunkPath lineage_path(const FamilyTree& tree, Id x, double t) {
  check_time(tree, t, "lineage_path");
  check_alive(tree, x, t, "lineage_path");
  std::vector<Id> chain;
  for (Id id = x;; id = tree[id].parent) {
    chain.push_back(id);
    if (!tree[id].has_parent()) break;
  }
  TrunkPath path;
  path.start = tree[chain.back()].type;
  path.total = t;
  path.segments.reserve(chain.size());
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    const auto& ind = tree[*it];
    const double stop = (*it == x) ? t : ind.end;
    path.segments.push_back({ind.type, stop - ind.birth});
  }
  return path;
}

Vector lineage_occupation(const FamilyTree& tree, Id x, double t) {
  if (!(t > 0.0)) throw QueryError("lineage_occupation: need t > 0");
  return trunk_occupation(lineage_path(tree, x, t), tree.num_types);
}

Vector ancestral_average(const FamilyTree& tree, double t, double u) {
  if (!(u > 0.0) || !(u < t)) throw QueryError("ancestral_average: need 0 < u < t");
  const auto pop = nonempty_population(tree, t, "ancestral_average");
  Vector hist = Vector::Zero(static_cast<Eigen::Index>(tree.num_types));
  for (Id x : pop) hist[tree[ancestor_at(tree, x, t, t - u)].type] += 1.0;
  return hist / static_cast<double>(pop.size());
}

double martingale_W(const FamilyTree& tree, const Vector& h, double lambda, double t) {
  if (tree.capped()) throw QueryError("martingale_W: tree is capped");
  double sum = 0.0;
  for (Id x : population_at(tree, t)) sum += h[tree[x].type];
  return sum * std::exp(-lambda * t);
}

double martingale_Wtilde(const FamilyTree& tree, const Vector& r, double t) {
  if (tree.capped()) throw QueryError("martingale_Wtilde: tree is capped");
  check_time(tree, t, "martingale_Wtilde");
  // Accumulated int_0^{birth} r(sigma) ds along each lineage; parents precede children.
  std::vector<double> acc(tree.size(), 0.0);
  double sum = 0.0;
  for (Id id = 0; id < tree.size(); ++id) {
    const auto& ind = tree[id];
    if (ind.birth > t) continue;
    if (ind.has_parent()) {
      const auto& p = tree[ind.parent];
      acc[id] = acc[ind.parent] + r[p.type] * (p.end - p.birth);
    }
    if (ind.alive_at(t)) sum += std::exp(-(acc[id] + r[ind.type] * (t - ind.birth)));
  }
  return sum;
}

PathStatistics lineage_statistics(const FamilyTree& tree, double t, bool merge_repeats) {
  const auto pop = nonempty_population(tree, t, "lineage_statistics");
  PathStatistics stats(tree.num_types);
  for (Id x : pop) {
    const auto path = lineage_path(tree, x, t);
    stats += path_statistics(merge_repeats ? coalesce(path) : path, tree.num_types);
  }
  return stats;
}

double empirical_L_distribution(const FamilyTree& tree, double t, const Vector& reference, double eps) {
  if (!(eps > 0.0)) throw QueryError("empirical_L_distribution: need eps > 0");
  const auto pop = nonempty_population(tree, t, "empirical_L_distribution");
  std::size_t far = 0;
  for (Id x : pop) {
    if (tv_distance<double>(lineage_occupation(tree, x, t), reference) >= eps) ++far;
  }
  return static_cast<double>(far) / static_cast<double>(pop.size());
}

double subtree_functional_average(const FamilyTree& tree, TypeIndex j, double s, double u, SubtreeQuery f) {
  if (!(u >= 0.0)) throw QueryError("subtree_functional_average: need u >= 0");
  check_time(tree, s + u, "subtree_functional_average");
  std::vector<Id> roots;
  for (Id x : population_at(tree, s)) {
    if (tree[x].type == j) roots.push_back(x);
  }
  if (roots.empty()) throw QueryError("subtree_functional_average: no type-j individuals at s");

  const double t = s + u;
  double total = 0.0;
  std::vector<Id> stack;
  for (Id x : roots) {
    double count = 0.0;
    stack.assign(1, x);
    while (!stack.empty()) {
      const Id y = stack.back();
      stack.pop_back();
      const auto& ind = tree[y];
      if (ind.alive_at(t)) {
        if (f.kind != SubtreeFunctional::type_count || ind.type == f.type) count += 1.0;
      } else if (ind.fate == Fate::split && ind.end <= t) {
        for (Id c = ind.first_child; c < ind.first_child + ind.num_children; ++c) stack.push_back(c);
      }
    }
    total += (f.kind == SubtreeFunctional::survival) ? (count > 0 ? 1.0 : 0.0) : count;
  }
  return total / static_cast<double>(roots.size());
}

}  // namespace mtbp
