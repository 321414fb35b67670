#include "mtbp/functional.hpp"

#include <charconv>
#include <sstream>

namespace mtbp {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::size_t parse_count(const std::string& s, const std::string& where) {
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw QueryError(where + ": expected a nonnegative integer, got '" + s + "'");
  return v;
}

double parse_real(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw QueryError(where + ": expected a number, got '" + s + "'");
}

}  // namespace

double PathFunctional::evaluate(const TrunkPath& lineage, std::size_t num_types, std::size_t population) const {
  switch (kind) {
    case FunctionalKind::constant_one:
      return 1.0;
    case FunctionalKind::terminal_type:
      return lineage.terminal_type() == type ? 1.0 : 0.0;
    case FunctionalKind::flip_count_le:
      return type_changes(lineage) <= k ? 1.0 : 0.0;
    case FunctionalKind::occupation_ge:
      return trunk_occupation(lineage, num_types)[type] >= theta ? 1.0 : 0.0;
    case FunctionalKind::population_size:
      return static_cast<double>(population);
  }
  return 0.0;
}

std::string PathFunctional::name(const BranchingModel& model) const {
  std::ostringstream os;
  switch (kind) {
    case FunctionalKind::constant_one: os << "constant_one"; break;
    case FunctionalKind::terminal_type: os << "terminal_type:" << model.name(type); break;
    case FunctionalKind::flip_count_le: os << "flip_count_le:" << k; break;
    case FunctionalKind::occupation_ge: os << "occupation_ge:" << model.name(type) << ',' << theta; break;
    case FunctionalKind::population_size: os << "population_size"; break;
  }
  return os.str();
}

PathFunctional parse_functional(const std::string& text, const BranchingModel& model) {
  const auto colon = text.find(':');
  const std::string head = trim(text.substr(0, colon));
  const std::string args = colon == std::string::npos ? std::string() : trim(text.substr(colon + 1));
  PathFunctional f;
  auto no_args = [&] {
    if (!args.empty()) throw QueryError("functional '" + head + "' takes no parameters");
  };
  if (head == "constant_one") {
    no_args();
    f.kind = FunctionalKind::constant_one;
  } else if (head == "population_size") {
    no_args();
    f.kind = FunctionalKind::population_size;
  } else if (head == "terminal_type") {
    f.kind = FunctionalKind::terminal_type;
    f.type = model.type_named(args);
  } else if (head == "flip_count_le") {
    f.kind = FunctionalKind::flip_count_le;
    f.k = parse_count(args, head);
  } else if (head == "occupation_ge") {
    const auto comma = args.find(',');
    if (comma == std::string::npos) throw QueryError("occupation_ge needs '<type>,<theta>'");
    f.kind = FunctionalKind::occupation_ge;
    f.type = model.type_named(trim(args.substr(0, comma)));
    f.theta = parse_real(trim(args.substr(comma + 1)), head);
  } else {
    throw QueryError("unknown functional '" + head + "'");
  }
  return f;
}

}  // namespace mtbp
