#pragma once

#include <vector>

#include "mtbp/family_tree.hpp"
#include "mtbp/rng.hpp"

namespace mtbp {

inline constexpr std::size_t kDefaultCap = 1'000'000;

// Event-driven simulator of the family tree: splits are processed
// earliest-first, so a cap breach at time T leaves every individual born
// before T in the arena.
class ForwardSimulator {
 public:
  explicit ForwardSimulator(BranchingModel model);

  FamilyTree simulate(TypeIndex root, double horizon, std::size_t cap, Engine& rng) const;

  const BranchingModel& model() const { return model_; }
  const CategoricalTable& offspring_table(TypeIndex i) const { return tables_[i.value]; }

 private:
  BranchingModel model_;
  std::vector<CategoricalTable> tables_;
};

FamilyTree simulate(const BranchingModel& model, TypeIndex root, double horizon, std::size_t cap, Engine& rng);

// Depth-first walk over the lineages alive at the horizon that never
// materializes the tree. For each x in X(horizon) calls visit(type, occ),
// where occ[j] is the time the lineage of x spent in type j. Returns false if
// more than max_population lineages were reached.
template <typename Visit>
bool stream_lineages(const ForwardSimulator& sim, TypeIndex root, double horizon, Engine& rng, Visit&& visit,
                     std::size_t max_population) {
  const auto& model = sim.model();
  const std::size_t n = model.num_types();
  struct Frame {
    std::uint32_t type;
    double birth;
  };
  std::vector<Frame> frames{{root.value, 0.0}};
  std::vector<double> occ(n, 0.0);  // occupancy rows, one per frame
  std::vector<double> current(n);
  std::size_t population = 0;

  while (!frames.empty()) {
    const Frame f = frames.back();
    frames.pop_back();
    std::copy(occ.end() - static_cast<std::ptrdiff_t>(n), occ.end(), current.begin());
    occ.resize(occ.size() - n);

    const double tau = exponential_draw(rng, model.split_rates[f.type]);
    if (f.birth + tau >= horizon) {
      current[f.type] += horizon - f.birth;
      if (++population > max_population) return false;
      visit(TypeIndex(f.type), static_cast<const std::vector<double>&>(current));
      continue;
    }
    current[f.type] += tau;
    const auto& atom = model.offspring[f.type].atoms[sim.offspring_table(TypeIndex(f.type)).sample(rng)];
    for (std::size_t j = n; j-- > 0;) {
      for (int c = 0; c < atom.counts[j]; ++c) {
        frames.push_back({static_cast<std::uint32_t>(j), f.birth + tau});
        occ.insert(occ.end(), current.begin(), current.end());
      }
    }
  }
  return true;
}

struct LineageCensus {
  std::size_t population = 0;
  std::size_t far = 0;  // lineages with ||L^x - reference||_TV >= eps
  bool capped = false;

  double fraction() const { return population ? double(far) / double(population) : 0.0; }
};

// Streaming counterpart of empirical_L_distribution for horizons where the
// full tree does not fit in memory.
LineageCensus occupation_census(const ForwardSimulator& sim, TypeIndex root, double horizon, const Vector& reference,
                                double eps, Engine& rng, std::size_t max_population);

}  // namespace mtbp
