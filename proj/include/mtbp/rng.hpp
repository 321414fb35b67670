#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "mtbp/model.hpp"

namespace mtbp {

using Engine = std::mt19937_64;

inline constexpr std::uint64_t kDefaultSeed = 20240611ULL;

// Independent purposes draw from disjoint substreams of the same master seed.
enum class StreamTag : std::uint64_t {
  forward = 1,
  trunk = 2,
  mutation_chain = 3,
  census = 4,
  rerun = 5,
};

// Engine for (master seed, replicate index, purpose); depends on nothing else,
// so results do not depend on which worker runs the replicate.
inline Engine substream(std::uint64_t master_seed, std::uint64_t replicate, StreamTag tag) {
  const auto t = static_cast<std::uint64_t>(tag);
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(replicate), static_cast<std::uint32_t>(replicate >> 32),
                    static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(t >> 32)};
  return Engine(seq);
}

inline double exponential_draw(Engine& rng, double rate) {
  return std::exponential_distribution<double>(rate)(rng);
}

inline double uniform_draw(Engine& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// Inverse-CDF sampler over a finite list of weights.
class CategoricalTable {
 public:
  CategoricalTable() = default;
  explicit CategoricalTable(const std::vector<double>& weights) {
    cumulative_.reserve(weights.size());
    double total = 0.0;
    for (double w : weights) cumulative_.push_back(total += w);
    for (double& c : cumulative_) c /= total;
    if (!cumulative_.empty()) cumulative_.back() = 1.0;
  }

  std::size_t sample(Engine& rng) const {
    const double u = uniform_draw(rng);
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
  }

  std::size_t size() const { return cumulative_.size(); }

 private:
  std::vector<double> cumulative_;
};

inline CategoricalTable atom_table(const OffspringLaw& law) {
  std::vector<double> w;
  w.reserve(law.atoms.size());
  for (const auto& a : law.atoms) w.push_back(a.prob);
  return CategoricalTable(w);
}

}  // namespace mtbp
