#include "mtbp/model.hpp"

#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace mtbp {

int OffspringAtom::total() const { return std::accumulate(counts.begin(), counts.end(), 0); }

TypeIndex BranchingModel::type_named(const std::string& name) const {
  for (std::size_t i = 0; i < type_names.size(); ++i) {
    if (type_names[i] == name) return TypeIndex(i);
  }
  throw ModelError("unknown type '" + name + "'");
}

std::string ValidationReport::summary() const {
  if (ok()) return "ok";
  std::ostringstream os;
  for (std::size_t k = 0; k < violations.size(); ++k) {
    if (k) os << "; ";
    os << violations[k];
  }
  return os.str();
}

std::vector<std::vector<bool>> support_graph(const BranchingModel& model) {
  const std::size_t n = model.num_types();
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& atom : model.offspring[i].atoms) {
      if (!(atom.prob > 0.0)) continue;
      for (std::size_t j = 0; j < n && j < atom.counts.size(); ++j) {
        if (atom.counts[j] > 0) adj[i][j] = true;
      }
    }
  }
  return adj;
}

namespace {

// Tarjan's algorithm; returns the number of strongly connected components.
class SccCounter {
 public:
  explicit SccCounter(const std::vector<std::vector<bool>>& adj)
      : adj_(adj), index_(adj.size(), -1), low_(adj.size(), 0), on_stack_(adj.size(), false) {}

  int count() {
    for (std::size_t v = 0; v < adj_.size(); ++v) {
      if (index_[v] < 0) visit(v);
    }
    return components_;
  }

 private:
  void visit(std::size_t v) {
    index_[v] = low_[v] = next_++;
    stack_.push_back(v);
    on_stack_[v] = true;
    for (std::size_t w = 0; w < adj_.size(); ++w) {
      if (!adj_[v][w]) continue;
      if (index_[w] < 0) {
        visit(w);
        low_[v] = std::min(low_[v], low_[w]);
      } else if (on_stack_[w]) {
        low_[v] = std::min(low_[v], index_[w]);
      }
    }
    if (low_[v] == index_[v]) {
      std::size_t w;
      do {
        w = stack_.back();
        stack_.pop_back();
        on_stack_[w] = false;
      } while (w != v);
      ++components_;
    }
  }

  const std::vector<std::vector<bool>>& adj_;
  std::vector<int> index_;
  std::vector<int> low_;
  std::vector<bool> on_stack_;
  std::vector<std::size_t> stack_;
  int next_ = 0;
  int components_ = 0;
};

}  // namespace

bool strongly_connected(const std::vector<std::vector<bool>>& adjacency) {
  if (adjacency.empty()) return false;
  return SccCounter(adjacency).count() == 1;
}

ValidationReport validate_model(const BranchingModel& model) {
  ValidationReport report;
  auto& v = report.violations;
  const std::size_t n = model.num_types();
  if (n == 0) {
    v.push_back("model has no types");
    return report;
  }
  if (static_cast<std::size_t>(model.split_rates.size()) != n) {
    v.push_back("split rate vector has length " + std::to_string(model.split_rates.size()) +
                ", expected " + std::to_string(n));
  }
  if (!model.type_names.empty() && model.type_names.size() != n) {
    v.push_back("type name list has length " + std::to_string(model.type_names.size()));
  }

  auto label = [&](std::size_t i) {
    return "type " + (i < model.type_names.size() ? model.type_names[i] : std::to_string(i));
  };

  for (std::size_t i = 0; i < n && i < static_cast<std::size_t>(model.split_rates.size()); ++i) {
    const double a = model.split_rates[static_cast<Eigen::Index>(i)];
    if (!(a > 0.0) || !std::isfinite(a)) {
      v.push_back(label(i) + ": split rate " + std::to_string(a) + " is not positive");
    }
  }

  bool shapes_ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& atoms = model.offspring[i].atoms;
    if (atoms.empty()) {
      v.push_back(label(i) + ": offspring law has no atoms");
      shapes_ok = false;
      continue;
    }
    double total = 0.0;
    std::set<std::vector<int>> seen;
    for (const auto& atom : atoms) {
      if (atom.counts.size() != n) {
        v.push_back(label(i) + ": count vector has length " + std::to_string(atom.counts.size()));
        shapes_ok = false;
      }
      for (int c : atom.counts) {
        if (c < 0) v.push_back(label(i) + ": negative offspring count " + std::to_string(c));
      }
      if (!(atom.prob > 0.0) || atom.prob > 1.0 || !std::isfinite(atom.prob)) {
        v.push_back(label(i) + ": atom probability " + std::to_string(atom.prob) + " outside (0,1]");
      } else if (atom.prob < kMinAtomProb) {
        v.push_back(label(i) + ": atom probability " + std::to_string(atom.prob) + " below 1e-15");
      }
      if (!seen.insert(atom.counts).second) {
        v.push_back(label(i) + ": duplicate count vector");
      }
      total += atom.prob;
    }
    if (std::abs(total - 1.0) > kProbSumTolerance) {
      std::ostringstream os;
      os << label(i) << ": probabilities sum to " << total;
      v.push_back(os.str());
    }
  }

  if (shapes_ok && !strongly_connected(support_graph(model))) {
    v.push_back("M reducible");
  }
  return report;
}

void require_valid(const BranchingModel& model) {
  const auto report = validate_model(model);
  if (!report.ok()) throw ModelError("invalid model: " + report.summary());
}

MeanData mean_data(const BranchingModel& model) {
  require_valid(model);
  const auto n = static_cast<Eigen::Index>(model.num_types());
  MeanData out;
  out.M = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (const auto& atom : model.offspring[static_cast<std::size_t>(i)].atoms) {
      for (Eigen::Index j = 0; j < n; ++j) {
        out.M(i, j) += atom.prob * atom.counts[static_cast<std::size_t>(j)];
      }
    }
  }
  out.row_means = out.M.rowwise().sum();
  out.A = model.split_rates.asDiagonal() * (out.M - Matrix::Identity(n, n));
  out.r = model.split_rates.cwiseProduct(out.row_means - Vector::Ones(n));
  return out;
}

}  // namespace mtbp
