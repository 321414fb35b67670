#include "mtbp/path.hpp"

#include <limits>

namespace mtbp {

TrunkPath coalesce(const TrunkPath& path) {
  TrunkPath out{path.start, {}, path.total};
  for (const auto& seg : path.segments) {
    if (!out.segments.empty() && out.segments.back().type == seg.type) {
      out.segments.back().sojourn += seg.sojourn;
    } else {
      out.segments.push_back(seg);
    }
  }
  return out;
}

std::size_t type_changes(const TrunkPath& path) {
  std::size_t changes = 0;
  for (std::size_t k = 1; k < path.segments.size(); ++k) {
    if (!(path.segments[k].type == path.segments[k - 1].type)) ++changes;
  }
  return changes;
}

Vector trunk_occupation(const TrunkPath& path, std::size_t num_types) {
  if (!(path.total > 0.0)) throw QueryError("trunk_occupation: path has zero length");
  Vector occ = Vector::Zero(static_cast<Eigen::Index>(num_types));
  for (const auto& seg : path.segments) occ[seg.type] += seg.sojourn;
  return occ / path.total;
}

PathStatistics::PathStatistics(std::size_t num_types)
    : holding(Vector::Zero(static_cast<Eigen::Index>(num_types))),
      exits(Vector::Zero(static_cast<Eigen::Index>(num_types))),
      transitions(Matrix::Zero(static_cast<Eigen::Index>(num_types), static_cast<Eigen::Index>(num_types))) {}

PathStatistics& PathStatistics::operator+=(const PathStatistics& other) {
  holding += other.holding;
  exits += other.exits;
  transitions += other.transitions;
  return *this;
}

Vector PathStatistics::exit_rates() const {
  Vector rates(holding.size());
  for (Eigen::Index i = 0; i < holding.size(); ++i) {
    rates[i] = exits[i] > 0 ? exits[i] / holding[i] : std::numeric_limits<double>::quiet_NaN();
  }
  return rates;
}

Matrix PathStatistics::transition_frequencies() const {
  Matrix freq = transitions;
  for (Eigen::Index i = 0; i < freq.rows(); ++i) {
    const double row = transitions.row(i).sum();
    if (row > 0) {
      freq.row(i) /= row;
    } else {
      freq.row(i).setConstant(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return freq;
}

PathStatistics path_statistics(const TrunkPath& path, std::size_t num_types) {
  PathStatistics stats(num_types);
  const auto& segs = path.segments;
  for (std::size_t k = 0; k < segs.size(); ++k) {
    stats.holding[segs[k].type] += segs[k].sojourn;
    if (k + 1 < segs.size()) {
      stats.exits[segs[k].type] += 1;
      stats.transitions(segs[k].type.value, segs[k + 1].type.value) += 1;
    }
  }
  return stats;
}

}  // namespace mtbp
