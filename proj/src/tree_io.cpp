#include "mtbp/tree_io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace mtbp {

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string opt(const std::optional<double>& x) { return x ? num(*x) : std::string("-"); }

std::optional<double> parse_opt(const std::string& s) {
  if (s == "-") return std::nullopt;
  return std::stod(s);
}

void write_body(std::ostream& os, const FamilyTree& tree) {
  os << "# horizon=" << num(tree.horizon) << " root=" << tree.root_type.value << " types=" << tree.num_types
     << " extinct_at=" << opt(tree.extinct_at) << " capped_at=" << opt(tree.capped_at) << '\n';
  for (Id id = 0; id < tree.size(); ++id) {
    const auto& ind = tree[id];
    os << id << ' ';
    if (ind.has_parent()) {
      os << ind.parent;
    } else {
      os << '-';
    }
    os << ' ' << ind.type.value << ' ' << num(ind.birth) << ' ' << num(ind.end) << ' ';
    switch (ind.fate) {
      case Fate::split:
        os << "S:";
        for (std::uint32_t c = 0; c < ind.num_children; ++c) os << (c ? "," : "") << ind.first_child + c;
        break;
      case Fate::boundary: os << 'B'; break;
      case Fate::dead: os << 'D'; break;
    }
    os << '\n';
  }
}

[[noreturn]] void bad(std::size_t line, const std::string& what) {
  throw QueryError("tree dump line " + std::to_string(line) + ": " + what);
}

FamilyTree read_body(std::istream& is, std::vector<Id>* trunk) {
  FamilyTree tree;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line[0] == '#') {
      std::string tok;
      ls >> tok;
      while (ls >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) bad(lineno, "malformed header field '" + tok + "'");
        const std::string key = tok.substr(0, eq), value = tok.substr(eq + 1);
        if (key == "horizon") tree.horizon = std::stod(value);
        else if (key == "root") tree.root_type = TypeIndex(std::stoul(value));
        else if (key == "types") tree.num_types = std::stoul(value);
        else if (key == "extinct_at") tree.extinct_at = parse_opt(value);
        else if (key == "capped_at") tree.capped_at = parse_opt(value);
      }
      header = true;
      continue;
    }
    if (!header) bad(lineno, "missing header");
    if (line.rfind("T:", 0) == 0) {
      if (!trunk) bad(lineno, "unexpected trunk line");
      std::istringstream ids(line.substr(2));
      std::string item;
      while (std::getline(ids, item, ',')) trunk->push_back(static_cast<Id>(std::stoul(item)));
      continue;
    }
    Id id;
    std::string parent, fate;
    unsigned type;
    Individual ind;
    if (!(ls >> id >> parent >> type >> ind.birth >> ind.end >> fate)) bad(lineno, "expected 6 fields");
    if (id != tree.size()) bad(lineno, "ids must be consecutive");
    ind.parent = parent == "-" ? kNoParent : static_cast<Id>(std::stoul(parent));
    ind.type = TypeIndex(type);
    if (fate == "B") {
      ind.fate = Fate::boundary;
    } else if (fate == "D") {
      ind.fate = Fate::dead;
    } else if (fate.rfind("S:", 0) == 0 && fate.size() > 2) {
      ind.fate = Fate::split;
      std::istringstream ids(fate.substr(2));
      std::string item;
      while (std::getline(ids, item, ',')) {
        const auto child = static_cast<Id>(std::stoul(item));
        if (ind.num_children == 0) {
          ind.first_child = child;
        } else if (child != ind.first_child + ind.num_children) {
          bad(lineno, "children of a split must have consecutive ids");
        }
        ++ind.num_children;
      }
    } else {
      bad(lineno, "unknown fate '" + fate + "'");
    }
    tree.individuals.push_back(ind);
  }
  if (!header) throw QueryError("tree dump: empty input");
  return tree;
}

}  // namespace

void write_tree(std::ostream& os, const FamilyTree& tree) { write_body(os, tree); }

void write_tree(std::ostream& os, const BiasedTree& tree) {
  write_body(os, tree.tree);
  os << "T:";
  for (std::size_t k = 0; k < tree.trunk_ids.size(); ++k) os << (k ? "," : "") << tree.trunk_ids[k];
  os << '\n';
}

FamilyTree read_tree(std::istream& is) { return read_body(is, nullptr); }

BiasedTree read_biased_tree(std::istream& is) {
  BiasedTree out;
  out.tree = read_body(is, &out.trunk_ids);
  return out;
}

}  // namespace mtbp
