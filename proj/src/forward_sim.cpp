#include "mtbp/forward_sim.hpp"

#include <functional>
#include <utility>

#include "mtbp/linalg.hpp"
#include "tree_builder.hpp"

namespace mtbp {

namespace detail {

Id pick_successor(const std::vector<int>& counts, Id first, const Vector& gamma, Engine& rng) {
  std::vector<double> weights(counts.size());
  for (std::size_t j = 0; j < counts.size(); ++j) weights[j] = counts[j] * gamma[static_cast<Eigen::Index>(j)];
  const std::size_t type = CategoricalTable(weights).sample(rng);
  if (counts[type] <= 0) throw std::logic_error("trunk successor selected a type with no children");
  Id offset = 0;
  for (std::size_t j = 0; j < type; ++j) offset += static_cast<Id>(counts[j]);
  const auto ell = std::uniform_int_distribution<int>(0, counts[type] - 1)(rng);
  return first + offset + static_cast<Id>(ell);
}

FamilyTree TreeBuilder::build(TypeIndex root, double horizon, std::size_t cap, Engine& rng, const TrunkRule* trunk,
                              std::vector<Id>* trunk_ids) const {
  if (root.value >= model_.num_types()) throw QueryError("simulate: root type out of range");
  if (!(horizon >= 0.0)) throw QueryError("simulate: horizon must be nonnegative");
  if (cap < 1) throw QueryError("simulate: cap must be at least 1");

  FamilyTree tree;
  tree.num_types = model_.num_types();
  tree.root_type = root;
  tree.horizon = horizon;

  using Event = std::pair<double, Id>;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> events;
  std::size_t boundary = 0;
  Id trunk_id = trunk ? 0 : kNoParent;

  auto spawn = [&](Id id) {
    auto& ind = tree.individuals[id];
    const double rate = (id == trunk_id) ? (*trunk->rates)[ind.type] : model_.split_rates[ind.type];
    const double end = ind.birth + exponential_draw(rng, rate);
    if (end >= horizon) {
      ind.end = horizon;
      ind.fate = Fate::boundary;
      ++boundary;
    } else {
      ind.end = end;
      events.emplace(end, id);
    }
  };

  tree.individuals.push_back(Individual{kNoParent, root, 0.0, 0.0, Fate::boundary, 0, 0});
  if (trunk_ids) trunk_ids->assign(1, 0);
  spawn(0);

  double last_death = 0.0;
  while (!events.empty()) {
    const auto [time, id] = events.top();
    events.pop();
    const TypeIndex type = tree.individuals[id].type;
    const bool on_trunk = (id == trunk_id);
    const auto& law = on_trunk ? (*trunk->laws)[type.value] : model_.offspring[type.value];
    const auto& table = on_trunk ? (*trunk->tables)[type.value] : tables_[type.value];
    const auto& counts = law.atoms[table.sample(rng)].counts;

    std::size_t k = 0;
    for (int c : counts) k += static_cast<std::size_t>(c);
    if (tree.size() + k > cap) {
      tree.capped_at = time;
      tree.individuals[id].fate = Fate::boundary;
      break;
    }
    auto& parent = tree.individuals[id];
    if (k == 0) {
      parent.fate = Fate::dead;
      last_death = time;
      continue;
    }
    parent.fate = Fate::split;
    parent.first_child = static_cast<Id>(tree.size());
    parent.num_children = static_cast<std::uint32_t>(k);
    const Id first = parent.first_child;
    for (std::size_t j = 0; j < counts.size(); ++j) {
      for (int c = 0; c < counts[j]; ++c) {
        tree.individuals.push_back(Individual{id, TypeIndex(j), time, 0.0, Fate::boundary, 0, 0});
      }
    }
    if (on_trunk) {
      trunk_id = pick_successor(counts, first, *trunk->gamma, rng);
      if (trunk_ids) trunk_ids->push_back(trunk_id);
    }
    for (Id c = first; c < first + k; ++c) spawn(c);
  }

  if (!tree.capped() && boundary == 0) tree.extinct_at = last_death;
  return tree;
}

}  // namespace detail

namespace {

std::vector<CategoricalTable> tables_for(const BranchingModel& model) {
  std::vector<CategoricalTable> out;
  for (const auto& law : model.offspring) out.push_back(atom_table(law));
  return out;
}

}  // namespace

ForwardSimulator::ForwardSimulator(BranchingModel model) : model_(std::move(model)) {
  require_valid(model_);
  tables_ = tables_for(model_);
}

FamilyTree ForwardSimulator::simulate(TypeIndex root, double horizon, std::size_t cap, Engine& rng) const {
  return detail::TreeBuilder(model_, tables_).build(root, horizon, cap, rng, nullptr, nullptr);
}

FamilyTree simulate(const BranchingModel& model, TypeIndex root, double horizon, std::size_t cap, Engine& rng) {
  return ForwardSimulator(model).simulate(root, horizon, cap, rng);
}

LineageCensus occupation_census(const ForwardSimulator& sim, TypeIndex root, double horizon, const Vector& reference,
                                double eps, Engine& rng, std::size_t max_population) {
  if (!(horizon > 0.0)) throw QueryError("occupation_census: need horizon > 0");
  LineageCensus census;
  const auto n = static_cast<Eigen::Index>(sim.model().num_types());
  Vector occ(n);
  const bool complete = stream_lineages(
      sim, root, horizon, rng,
      [&](TypeIndex, const std::vector<double>& times) {
        for (Eigen::Index j = 0; j < n; ++j) occ[j] = times[static_cast<std::size_t>(j)] / horizon;
        ++census.population;
        if (tv_distance<double>(occ, reference) >= eps) ++census.far;
      },
      max_population);
  census.capped = !complete;
  return census;
}

}  // namespace mtbp
