#pragma once

#include <iosfwd>

#include "mtbp/biased_sim.hpp"
#include "mtbp/family_tree.hpp"

namespace mtbp {

// Text dump of a tree: a `# horizon=.. root=.. extinct_at=.. capped_at=..`
// header, then one `id parent type birth end fate` line per individual,
// where fate is `S:<child ids>`, `B` (alive at the horizon) or `D`. Lists
// are comma separated; a biased tree adds a trailing `T:<trunk ids>` line.
void write_tree(std::ostream& os, const FamilyTree& tree);
void write_tree(std::ostream& os, const BiasedTree& tree);

FamilyTree read_tree(std::istream& is);
BiasedTree read_biased_tree(std::istream& is);

}  // namespace mtbp
