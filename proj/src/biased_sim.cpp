#include "mtbp/biased_sim.hpp"

#include <cmath>
#include <utility>

#include "tree_builder.hpp"

namespace mtbp {

TrunkPath BiasedTree::trunk_path() const {
  TrunkPath path;
  path.start = tree.root_type;
  path.total = tree.horizon;
  if (tree.horizon == 0.0) return path;
  for (Id id : trunk_ids) {
    const auto& ind = tree[id];
    path.segments.push_back({ind.type, ind.end - ind.birth});
  }
  return path;
}

BiasedSimulator::BiasedSimulator(BranchingModel model, SizeBiasedLaw law)
    : model_(std::move(model)), law_(std::move(law)) {
  require_valid(model_);
  for (const auto& l : model_.offspring) tables_.push_back(atom_table(l));
  for (const auto& l : law_.laws) biased_tables_.push_back(atom_table(l));
}

BiasedTree BiasedSimulator::simulate(TypeIndex root, double horizon, std::size_t cap, Engine& rng) const {
  const detail::TrunkRule rule{&law_.laws, &biased_tables_, &law_.trunk_rates, &law_.gamma};
  BiasedTree out;
  out.tree = detail::TreeBuilder(model_, tables_).build(root, horizon, cap, rng, &rule, &out.trunk_ids);
  return out;
}

TrunkPath BiasedSimulator::simulate_spine(TypeIndex root, double horizon, Engine& rng) const {
  TrunkPath path;
  path.start = root;
  path.total = horizon;
  TypeIndex type = root;
  double elapsed = 0.0;
  while (elapsed < horizon) {
    const double tau = exponential_draw(rng, law_.trunk_rates[type]);
    if (elapsed + tau >= horizon) {
      path.segments.push_back({type, horizon - elapsed});
      break;
    }
    path.segments.push_back({type, tau});
    elapsed += tau;
    const auto& counts = law_.laws[type.value].atoms[biased_tables_[type.value].sample(rng)].counts;
    const Id chosen = detail::pick_successor(counts, 0, law_.gamma, rng);
    Id offset = 0;
    std::size_t j = 0;
    while (offset + static_cast<Id>(counts[j]) <= chosen) offset += static_cast<Id>(counts[j++]);
    type = TypeIndex(j);
  }
  return path;
}

BiasedTree simulate_biased_tree(const BranchingModel& model, const SpectralData& spec, BiasVariant variant,
                                TypeIndex root, double horizon, std::size_t cap, Engine& rng) {
  BiasedTree out = BiasedSimulator(model, size_biased_law(model, spec, variant)).simulate(root, horizon, cap, rng);
  out.variant = variant;
  return out;
}

JumpChain jump_chain(const RetrospectiveChain& chain) { return {chain.holding_rates, chain.jump_probs}; }

JumpChain uniform_jump_chain(const BranchingModel& model) {
  const MeanData mean = mean_data(model);
  JumpChain out;
  out.holding_rates = model.split_rates.cwiseProduct(mean.row_means);
  out.jump_probs = mean.row_means.cwiseInverse().asDiagonal() * mean.M;
  return out;
}

namespace {

std::vector<CategoricalTable> row_tables(const Matrix& P) {
  std::vector<CategoricalTable> out;
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    std::vector<double> w(static_cast<std::size_t>(P.cols()));
    for (Eigen::Index j = 0; j < P.cols(); ++j) w[static_cast<std::size_t>(j)] = P(i, j);
    out.emplace_back(w);
  }
  return out;
}

}  // namespace

TrunkPath simulate_trunk(const JumpChain& chain, TypeIndex root, double horizon, Engine& rng) {
  const auto tables = row_tables(chain.jump_probs);
  TrunkPath path;
  path.start = root;
  path.total = horizon;
  TypeIndex type = root;
  double elapsed = 0.0;
  while (elapsed < horizon) {
    const double tau = exponential_draw(rng, chain.holding_rates[type]);
    if (elapsed + tau >= horizon) {
      path.segments.push_back({type, horizon - elapsed});
      break;
    }
    path.segments.push_back({type, tau});
    elapsed += tau;
    type = TypeIndex(tables[type.value].sample(rng));
  }
  return path;
}

TrunkPath simulate_mutation_chain(const Matrix& G, TypeIndex start, double horizon, Engine& rng) {
  Matrix off = G;
  off.diagonal().setZero();
  const auto tables = row_tables(off.cwiseMax(0.0));
  TrunkPath path;
  path.start = start;
  path.total = horizon;
  TypeIndex type = start;
  double elapsed = 0.0;
  while (elapsed < horizon) {
    const double rate = -G(type.value, type.value);
    const double tau = rate > 0.0 ? exponential_draw(rng, rate) : horizon;
    if (elapsed + tau >= horizon) {
      path.segments.push_back({type, horizon - elapsed});
      break;
    }
    path.segments.push_back({type, tau});
    elapsed += tau;
    type = TypeIndex(tables[type.value].sample(rng));
  }
  return path;
}

}  // namespace mtbp
