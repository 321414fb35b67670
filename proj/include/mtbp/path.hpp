#pragma once

#include <vector>

#include "mtbp/types.hpp"

namespace mtbp {

struct Segment {
  TypeIndex type;
  double sojourn = 0.0;
};

// A type history on [0, total]: consecutive (type, sojourn) pieces. A new
// segment starts at every split along the path, even if the type repeats.
struct TrunkPath {
  TypeIndex start;
  std::vector<Segment> segments;
  double total = 0.0;

  TypeIndex terminal_type() const { return segments.empty() ? start : segments.back().type; }
};

// Merges neighbouring segments of equal type.
TrunkPath coalesce(const TrunkPath& path);

// Number of type changes along the path.
std::size_t type_changes(const TrunkPath& path);

// Per-type fraction of [0, total] spent in each type. Throws on a zero-length path.
Vector trunk_occupation(const TrunkPath& path, std::size_t num_types);

// Sufficient statistics of a piecewise-constant type path: total holding time
// per type, completed sojourns (exits) per type, and exit destinations.
struct PathStatistics {
  Vector holding;
  Vector exits;
  Matrix transitions;

  explicit PathStatistics(std::size_t num_types = 0);
  PathStatistics& operator+=(const PathStatistics& other);

  // exits_i / holding_i; NaN for types never exited.
  Vector exit_rates() const;
  // Row-normalized transition counts; rows without exits are NaN.
  Matrix transition_frequencies() const;
};

// The final segment is right-censored and contributes holding time only.
PathStatistics path_statistics(const TrunkPath& path, std::size_t num_types);

}  // namespace mtbp
