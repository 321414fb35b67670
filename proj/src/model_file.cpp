#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "mtbp/model.hpp"

namespace mtbp {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string unquote(const std::string& s) {
  std::string t = trim(s);
  if (t.size() >= 2 && (t.front() == '"' || t.front() == '\'') && t.back() == t.front()) {
    return t.substr(1, t.size() - 2);
  }
  return t;
}

class LineError {
 public:
  explicit LineError(int line) : line_(line) {}
  [[noreturn]] void fail(const std::string& what) const {
    throw ModelError("model file line " + std::to_string(line_) + ": " + what);
  }

 private:
  int line_;
};

// "[a, b, c]" -> {"a","b","c"}
std::vector<std::string> parse_list(const std::string& text, const LineError& err) {
  const std::string t = trim(text);
  if (t.size() < 2 || t.front() != '[' || t.back() != ']') err.fail("expected a [..] list");
  std::vector<std::string> out;
  const std::string body = t.substr(1, t.size() - 2);
  if (trim(body).empty()) return out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = unquote(item);
    if (item.empty()) err.fail("empty list entry");
    out.push_back(item);
  }
  return out;
}

double parse_real(const std::string& text, const LineError& err) {
  const std::string t = trim(text);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(t, &used);
  } catch (const std::exception&) {
    err.fail("expected a number, got '" + t + "'");
  }
  if (used != t.size()) err.fail("trailing characters after number '" + t + "'");
  return value;
}

int parse_count(const std::string& text, const LineError& err) {
  const std::string t = trim(text);
  std::size_t used = 0;
  long value = 0;
  try {
    value = std::stol(t, &used);
  } catch (const std::exception&) {
    err.fail("expected an integer count, got '" + t + "'");
  }
  if (used != t.size()) err.fail("expected an integer count, got '" + t + "'");
  return static_cast<int>(value);
}

// "{counts = [2, 0], prob = 0.5}"
OffspringAtom parse_atom(const std::string& text, const LineError& err) {
  const std::string t = trim(text);
  if (t.size() < 2 || t.front() != '{' || t.back() != '}') err.fail("atom must be an inline table {..}");
  const std::string body = t.substr(1, t.size() - 2);
  std::optional<std::vector<int>> counts;
  std::optional<double> prob;

  std::size_t pos = 0;
  while (pos < body.size()) {
    const auto eq = body.find('=', pos);
    if (eq == std::string::npos) break;
    const std::string key = trim(body.substr(pos, eq - pos));
    std::size_t value_end;
    std::string value;
    const auto vstart = body.find_first_not_of(" \t", eq + 1);
    if (vstart != std::string::npos && body[vstart] == '[') {
      value_end = body.find(']', vstart);
      if (value_end == std::string::npos) err.fail("unterminated counts list");
      value = body.substr(vstart, value_end - vstart + 1);
      ++value_end;
    } else {
      value_end = body.find(',', eq + 1);
      if (value_end == std::string::npos) value_end = body.size();
      value = body.substr(eq + 1, value_end - eq - 1);
    }
    if (key == "counts") {
      std::vector<int> c;
      for (const auto& s : parse_list(value, err)) c.push_back(parse_count(s, err));
      counts = std::move(c);
    } else if (key == "prob") {
      prob = parse_real(value, err);
    } else {
      err.fail("unknown atom field '" + key + "'");
    }
    pos = body.find(',', value_end);
    if (pos == std::string::npos) break;
    ++pos;
  }
  if (!counts) err.fail("atom is missing 'counts'");
  if (!prob) err.fail("atom is missing 'prob'");
  return OffspringAtom{*counts, *prob};
}

}  // namespace

BranchingModel parse_model(const std::string& text) {
  std::vector<std::string> names;
  std::map<std::string, std::optional<double>> rates;
  std::map<std::string, OffspringLaw> laws;
  std::optional<std::string> section;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const LineError err(line_no);
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
      const std::string name = unquote(line.substr(1, line.size() - 2));
      if (!laws.count(name)) err.fail("section [" + name + "] does not name a declared type");
      section = name;
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) err.fail("expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (!section) {
      if (key != "types") err.fail("unexpected top-level key '" + key + "'");
      if (!names.empty()) err.fail("types declared twice");
      names = parse_list(value, err);
      if (names.empty()) err.fail("types list is empty");
      for (const auto& n : names) {
        if (laws.count(n)) err.fail("duplicate type name '" + n + "'");
        laws[n] = OffspringLaw{};
        rates[n] = std::nullopt;
      }
      continue;
    }
    if (key == "rate") {
      if (rates[*section]) err.fail("rate given twice for type " + *section);
      rates[*section] = parse_real(value, err);
    } else if (key == "atom") {
      laws[*section].atoms.push_back(parse_atom(value, err));
    } else {
      err.fail("unknown key '" + key + "'");
    }
  }

  if (names.empty()) throw ModelError("model file declares no types");
  BranchingModel model;
  model.type_names = names;
  model.split_rates = Vector(static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& rate = rates[names[i]];
    if (!rate) throw ModelError("type " + names[i] + " has no rate");
    model.split_rates[static_cast<Eigen::Index>(i)] = *rate;
    model.offspring.push_back(laws[names[i]]);
  }
  return model;
}

BranchingModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot read model file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

std::string format_model(const BranchingModel& model) {
  std::ostringstream os;
  os.precision(17);
  os << "types = [";
  for (std::size_t i = 0; i < model.type_names.size(); ++i) os << (i ? ", " : "") << model.type_names[i];
  os << "]\n";
  for (std::size_t i = 0; i < model.num_types(); ++i) {
    os << "\n[" << model.type_names[i] << "]\n";
    os << "rate = " << model.split_rates[static_cast<Eigen::Index>(i)] << "\n";
    for (const auto& atom : model.offspring[i].atoms) {
      os << "atom = {counts = [";
      for (std::size_t j = 0; j < atom.counts.size(); ++j) os << (j ? ", " : "") << atom.counts[j];
      os << "], prob = " << atom.prob << "}\n";
    }
  }
  return os.str();
}

}  // namespace mtbp
