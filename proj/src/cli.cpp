#include "mtbp/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "mtbp/estimators.hpp"
#include "mtbp/tree_io.hpp"

namespace mtbp {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string model;
  std::uint64_t seed = kDefaultSeed;
  std::size_t n = 0;
  double t = 0.0;
  double u = 0.0;
  double eps = 0.0;
  std::size_t cap = kDefaultCap;
  std::string variant = "h";
  std::string F;
  std::string out = "mtbp-out";
  std::string root;
  std::string nu;
  std::vector<double> t_grid;
  bool dump_trees = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hex(std::uint64_t x) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << x;
  return os.str();
}

Vector parse_vector(const std::string& text, std::size_t expected) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--nu: '" + item + "' is not a number");
    }
  }
  if (values.size() != expected) {
    throw UsageError("--nu: expected " + std::to_string(expected) + " entries, got " + std::to_string(values.size()));
  }
  return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::string vec_text(const Vector& v) {
  std::ostringstream os;
  os << std::setprecision(6) << '(';
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  return os.str() + ")";
}

void print_matrix(std::ostream& os, const std::string& label, const Matrix& m) {
  os << label << ":\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    os << "  ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << std::setw(12) << std::setprecision(6) << m(i, j);
    os << '\n';
  }
}

class Command {
 public:
  Command(const std::string& name, const Options& opt, const std::map<std::string, bool>& given, std::ostream& out,
          std::ostream& err)
      : name_(name), opt_(opt), given_(given), out_(out), err_(err) {
    model_text_ = read_file(opt.model);
    try {
      model_ = parse_model(model_text_);
    } catch (const ModelError& e) {
      throw UsageError(opt.model + ": " + e.what());
    }
    label_ = fs::path(opt.model).stem().string();
    spec_ = spectral_data(model_);
    run_.seed = opt.seed;
    run_.cap = opt.cap;
    run_.root = opt.root.empty() ? TypeIndex(0) : model_.type_named(opt.root);
  }

  bool has(const std::string& flag) const {
    const auto it = given_.find(flag);
    return it != given_.end() && it->second;
  }
  template <typename T>
  T value_or(const std::string& flag, T value, T fallback) const {
    return has(flag) ? value : fallback;
  }

  int execute(json& params) {
    if (name_ == "spectral") return spectral(params);
    if (name_ == "simulate-forward") return simulate_forward(params);
    if (name_ == "simulate-biased") return simulate_biased(params);
    if (name_ == "verify") return verify(params);
    if (name_ == "fk") return fk(params);
    if (name_ == "ldp") return ldp(params);
    if (name_ == "limits") return limits(params);
    throw UsageError("unknown subcommand '" + name_ + "'");
  }

  const std::vector<CheckRow>& rows() const { return rows_; }
  const std::string& model_text() const { return model_text_; }

 private:
  void add(CheckRow row) {
    row.model = label_;
    out_ << std::left << std::setw(24) << row.check << ' ' << std::setw(14) << verdict_name(row.verdict) << std::right
         << " estimate=" << std::setprecision(8) << row.estimate << " target=" << row.target
         << " tol=" << row.tolerance;
    if (!row.params.empty()) out_ << "  [" << row.params << ']';
    out_ << '\n';
    rows_.push_back(std::move(row));
  }

  int status() const {
    for (const auto& r : rows_) {
      if (r.verdict == Verdict::fail) return kExitCheckFailed;
    }
    return kExitPass;
  }

  void set_n(json& params, std::size_t fallback) {
    run_.n = value_or<std::size_t>("--n", opt_.n, fallback);
    params["n"] = run_.n;
  }

  double time(json& params, double fallback) {
    const double t = value_or("--t", opt_.t, fallback);
    params["t"] = t;
    return t;
  }

  int spectral(json&) {
    const MeanData mean = mean_data(model_);
    const auto chain = retrospective_generator(model_, spec_);
    const auto derived = derived_generators(model_, spec_);
    const auto laws = biased_laws(model_, spec_);
    out_ << "model " << label_ << " (" << model_.num_types() << " types)\n"
         << "lambda = " << std::setprecision(10) << spec_.lambda << "\n"
         << "pi     = " << vec_text(spec_.pi) << "\n"
         << "h      = " << vec_text(spec_.h) << "\n"
         << "alpha  = " << vec_text(spec_.alpha) << "\n"
         << "r      = " << vec_text(mean.r) << "\n"
         << "c      = " << vec_text(laws.c) << "\n"
         << "perron residual = " << spec_.residual << "\n";
    print_matrix(out_, "A", mean.A);
    print_matrix(out_, "G", chain.G);
    print_matrix(out_, "G reversed", derived.G_rev);
    print_matrix(out_, "G tilde", derived.G_tilde);
    add({"lambda", "", "", spec_.lambda, 0.0, 0.0, 0.0, 0, 0, Verdict::info});
    for (std::size_t i = 0; i < model_.num_types(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const std::string type = "type=" + model_.name(TypeIndex(i));
      add({"pi", "", type, spec_.pi[ii], 0.0, 0.0, 0.0, 0, 0, Verdict::info});
      add({"h", "", type, spec_.h[ii], 0.0, 0.0, 0.0, 0, 0, Verdict::info});
      add({"alpha", "", type, spec_.alpha[ii], 0.0, 0.0, 0.0, 0, 0, Verdict::info});
    }
    return status();
  }

  fs::path tree_dir() const {
    const fs::path dir = fs::path(opt_.out) / "trees";
    fs::create_directories(dir);
    return dir;
  }

  int simulate_forward(json& params) {
    set_n(params, 100);
    const double t = time(params, 5.0);
    params["cap"] = run_.cap;
    params["dump_trees"] = opt_.dump_trees;
    const ForwardSimulator sim(model_);
    const fs::path dir = opt_.dump_trees ? tree_dir() : fs::path();
    struct Outcome {
      std::optional<double> population;
      bool extinct = false;
    };
    auto one = [&](std::size_t k) {
      Engine rng = substream(run_.seed, k, StreamTag::forward);
      const FamilyTree tree = sim.simulate(run_.root, t, run_.cap, rng);
      if (opt_.dump_trees) {
        std::ofstream os(dir / ("forward_" + std::to_string(k) + ".tree"));
        write_tree(os, tree);
      }
      Outcome o;
      o.extinct = tree.extinct_at.has_value();
      if (!tree.capped()) o.population = static_cast<double>(population_at(tree, t).size());
      return o;
    };
    const auto outcomes = run_replicates(run_.n, one, run_.workers);
    std::vector<std::optional<double>> pops, extinct;
    for (const auto& o : outcomes) {
      pops.push_back(o.population);
      extinct.push_back(o.population ? std::optional<double>(o.extinct ? 1.0 : 0.0) : std::nullopt);
    }
    const MCEstimate pop = summarize(pops);
    const MCEstimate ext = summarize(extinct);
    const double expected = matrix_exponential(mean_data(model_).A, t).row(run_.root.value).sum();
    const std::string p = "t=" + std::to_string(t) + ";root=" + model_.name(run_.root);
    add({"mean_population", "", p, pop.mean, pop.std_error, expected, 0.0, pop.n, pop.discarded, Verdict::info});
    add({"extinct_fraction", "", p, ext.mean, ext.std_error, 0.0, 0.0, ext.n, ext.discarded, Verdict::info});
    return status();
  }

  int simulate_biased(json& params) {
    set_n(params, 100);
    const double t = time(params, 5.0);
    if (opt_.variant != "h" && opt_.variant != "uniform") throw UsageError("--variant must be h or uniform");
    const BiasVariant variant = opt_.variant == "h" ? BiasVariant::h_biased : BiasVariant::uniform;
    params["variant"] = opt_.variant;
    params["cap"] = run_.cap;
    params["dump_trees"] = opt_.dump_trees;
    const BiasedSimulator sim(model_, size_biased_law(model_, spec_, variant));
    const fs::path dir = opt_.dump_trees ? tree_dir() : fs::path();
    struct Outcome {
      std::optional<double> population;
      double trunk_length = 0.0;
    };
    auto one = [&](std::size_t k) {
      Engine rng = substream(run_.seed, k, StreamTag::trunk);
      BiasedTree biased = sim.simulate(run_.root, t, run_.cap, rng);
      biased.variant = variant;
      if (opt_.dump_trees) {
        std::ofstream os(dir / ("biased_" + std::to_string(k) + ".tree"));
        write_tree(os, biased);
      }
      Outcome o;
      o.trunk_length = static_cast<double>(biased.trunk_ids.size());
      if (!biased.tree.capped()) o.population = static_cast<double>(population_at(biased.tree, t).size());
      return o;
    };
    const auto outcomes = run_replicates(run_.n, one, run_.workers);
    std::vector<std::optional<double>> pops, trunk;
    for (const auto& o : outcomes) {
      pops.push_back(o.population);
      trunk.push_back(o.trunk_length);
    }
    const MCEstimate pop = summarize(pops);
    const MCEstimate tr = summarize(trunk);
    const std::string p = "t=" + std::to_string(t) + ";root=" + model_.name(run_.root) + ";variant=" + opt_.variant;
    add({"mean_population", "", p, pop.mean, pop.std_error, 0.0, 0.0, pop.n, pop.discarded, Verdict::info});
    add({"mean_trunk_individuals", "", p, tr.mean, tr.std_error, 0.0, 0.0, tr.n, tr.discarded, Verdict::info});
    return status();
  }

  int verify(json& params) {
    set_n(params, 10'000);
    const double t = time(params, 1.0);
    params["cap"] = run_.cap;
    std::vector<PathFunctional> functionals;
    if (has("--F")) {
      functionals.push_back(parse_functional(opt_.F, model_));
    } else {
      functionals.push_back(parse_functional("constant_one", model_));
      for (std::size_t j = 0; j < model_.num_types(); ++j) {
        functionals.push_back(parse_functional("terminal_type:" + model_.name(TypeIndex(j)), model_));
      }
      functionals.push_back(parse_functional("flip_count_le:1", model_));
      functionals.push_back(parse_functional("occupation_ge:" + model_.name(TypeIndex(0)) + ",0.5", model_));
      functionals.push_back(parse_functional("population_size", model_));
    }
    json names = json::array();
    for (const auto& F : functionals) {
      names.push_back(F.name(model_));
      add(verify_size_bias(model_, spec_, F, t, run_).row);
    }
    params["F"] = names;
    return status();
  }

  int fk(json& params) {
    set_n(params, 100'000);
    const double t = time(params, 1.0);
    for (std::size_t j = 0; j < model_.num_types(); ++j) {
      add(feynman_kac_check(model_, spec_, TypeIndex(j), t, run_).row);
    }
    return status();
  }

  int ldp(json& params) {
    set_n(params, 100'000);
    const double t = time(params, 30.0);
    const double eps = value_or("--eps", opt_.eps, 0.02);
    if (!has("--nu")) throw UsageError("ldp needs --nu");
    const Vector nu = parse_vector(opt_.nu, model_.num_types());
    params["eps"] = eps;
    params["nu"] = opt_.nu;
    const LdpReport rep = ldp_rate_estimate(model_, spec_, nu, eps, t, run_);
    if (!rep.warning.empty()) err_ << "warning: " << rep.warning << '\n';
    add(rep.row);
    return status();
  }

  int limits(json& params) {
    LimitConfig cfg;
    set_n(params, 1000);
    cfg.run = run_;
    cfg.t = time(params, cfg.t);
    cfg.u = value_or("--u", opt_.u, cfg.t / 2.0);
    cfg.eps = value_or("--eps", opt_.eps, cfg.eps);
    if (has("--t-grid")) cfg.t_grid = opt_.t_grid;
    if (!(cfg.u > 0.0 && cfg.u < cfg.t)) throw UsageError("limits needs 0 < u < t");
    params["u"] = cfg.u;
    params["eps"] = cfg.eps;
    params["t_grid"] = cfg.t_grid;
    params["cap"] = run_.cap;
    const auto rows = limit_checks(model_, spec_, cfg);
    for (const auto& r : rows) add(r);
    for (const auto& r : rows_) {
      if (r.verdict == Verdict::refused) {
        err_ << "limit checks need a supercritical model (lambda > 0)\n";
        return kExitUsage;
      }
    }
    return status();
  }

  std::string name_;
  const Options& opt_;
  const std::map<std::string, bool>& given_;
  std::ostream& out_;
  std::ostream& err_;
  std::string model_text_;
  BranchingModel model_;
  std::string label_;
  SpectralData spec_;
  RunConfig run_;
  std::vector<CheckRow> rows_;
};

void write_outputs(const Options& opt, const std::string& subcommand, const std::vector<std::string>& args,
                   const Command& cmd, const json& params) {
  fs::create_directories(opt.out);
  {
    std::ofstream csv(fs::path(opt.out) / "results.csv", std::ios::binary);
    csv << csv_header() << '\n';
    for (const auto& r : cmd.rows()) csv << csv_row(r) << '\n';
    if (!csv) throw UsageError("cannot write results.csv in '" + opt.out + "'");
  }
  json manifest;
  manifest["tool"] = "mtbp";
  manifest["version"] = kVersion;
  manifest["subcommand"] = subcommand;
  manifest["argv"] = args;
  manifest["model"] = {{"path", opt.model}, {"fnv1a", hex(fnv1a(cmd.model_text()))}};
  manifest["seed"] = opt.seed;
  manifest["params"] = params;
  manifest["workers"] = default_workers();
  std::ofstream(fs::path(opt.out) / "manifest.json") << manifest.dump(2) << '\n';
}

int run_from_manifest(const std::string& path, const std::optional<std::string>& out_dir, std::ostream& out,
                      std::ostream& err) {
  json manifest;
  try {
    manifest = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
  if (!manifest.contains("argv") || !manifest["argv"].is_array()) throw UsageError(path + ": no argv recorded");
  auto args = manifest["argv"].get<std::vector<std::string>>();
  if (manifest.contains("model")) {
    const auto& model = manifest["model"];
    const std::string model_path = model.value("path", "");
    const std::string recorded = model.value("fnv1a", "");
    if (!model_path.empty() && hex(fnv1a(read_file(model_path))) != recorded) {
      err << "warning: model file '" << model_path << "' changed since the manifest was written\n";
    }
  }
  if (out_dir) {
    for (auto it = args.begin(); it != args.end();) {
      if (*it == "--out" && it + 1 != args.end()) {
        it = args.erase(it, it + 2);
      } else if (it->rfind("--out=", 0) == 0) {
        it = args.erase(it);
      } else {
        ++it;
      }
    }
    args.push_back("--out");
    args.push_back(*out_dir);
  }
  return run_cli(args, out, err);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulation and Monte Carlo checks for multitype branching processes", "mtbp"};
  app.set_version_flag("--version", kVersion);
  Options opt;
  std::string manifest_path;
  std::string manifest_out;
  app.add_option("--from-manifest", manifest_path, "Re-run the command recorded in a manifest.json")
      ->check(CLI::ExistingFile);
  app.add_option("--out", manifest_out, "Output directory override for --from-manifest");

  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"spectral", "Perron data, generators and biased laws of a model"},
      {"simulate-forward", "Simulate forward family trees"},
      {"simulate-biased", "Simulate size-biased trees with a trunk"},
      {"verify", "Check the size-bias identity for test functionals"},
      {"fk", "Check first moments against the trunk representation"},
      {"ldp", "Estimate the growth rate of lineages with a given occupation"},
      {"limits", "Limit-theorem checks at finite time"},
  };
  std::map<std::string, std::map<std::string, CLI::Option*>> registered;
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    auto& reg = registered[s.name];
    reg["--model"] = sub->add_option("--model", opt.model, "Model file")->required()->check(CLI::ExistingFile);
    reg["--seed"] = sub->add_option("--seed", opt.seed, "Master seed");
    reg["--out"] = sub->add_option("--out", opt.out, "Output directory");
    reg["--root"] = sub->add_option("--root", opt.root, "Root type name (default: first type)");
    const std::string name = s.name;
    if (name == "spectral") continue;
    reg["--n"] = sub->add_option("--n", opt.n, "Replicates")->check(CLI::PositiveNumber);
    reg["--t"] = sub->add_option("--t", opt.t, "Time horizon")->check(CLI::NonNegativeNumber);
    if (name != "fk" && name != "ldp") reg["--cap"] = sub->add_option("--cap", opt.cap, "Arena cap")->check(CLI::PositiveNumber);
    if (name == "simulate-biased") {
      reg["--variant"] = sub->add_option("--variant", opt.variant, "Trunk successor weights")
                             ->check(CLI::IsMember({"h", "uniform"}));
    }
    if (name == "simulate-forward" || name == "simulate-biased") {
      reg["--dump-trees"] = sub->add_flag("--dump-trees", opt.dump_trees, "Write every tree to <out>/trees");
    }
    if (name == "verify") reg["--F"] = sub->add_option("--F", opt.F, "Functional name[:params]");
    if (name == "ldp") {
      reg["--nu"] = sub->add_option("--nu", opt.nu, "Occupation vector, comma separated");
      reg["--eps"] = sub->add_option("--eps", opt.eps, "TV ball radius")->check(CLI::PositiveNumber);
    }
    if (name == "limits") {
      reg["--u"] = sub->add_option("--u", opt.u, "Ancestral look-back time")->check(CLI::PositiveNumber);
      reg["--eps"] = sub->add_option("--eps", opt.eps, "Occupation tolerance")->check(CLI::PositiveNumber);
      reg["--t-grid"] = sub->add_option("--t-grid", opt.t_grid, "Martingale check times")->delimiter(',');
    }
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (!manifest_path.empty()) {
      if (!app.get_subcommands().empty()) throw UsageError("--from-manifest cannot be combined with a subcommand");
      return run_from_manifest(manifest_path, manifest_out.empty() ? std::nullopt : std::optional(manifest_out), out,
                               err);
    }
    if (app.get_subcommands().size() != 1) {
      err << "error: expected one subcommand\n" << app.help();
      return kExitUsage;
    }
    const std::string subcommand = app.get_subcommands().front()->get_name();
    std::map<std::string, bool> given;
    for (const auto& [flag, option] : registered[subcommand]) given[flag] = option->count() > 0;

    Command cmd(subcommand, opt, given, out, err);
    json params = json::object();
    params["root"] = opt.root;
    const int code = cmd.execute(params);
    write_outputs(opt, subcommand, args, cmd, params);
    return code;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
  } catch (const ModelError& e) {
    err << "model error: " << e.what() << '\n';
  } catch (const SpectralError& e) {
    err << "spectral error: " << e.what() << '\n';
  } catch (const QueryError& e) {
    err << "invalid parameters: " << e.what() << '\n';
  } catch (const EstimatorError& e) {
    err << "invalid parameters: " << e.what() << '\n';
  } catch (const std::invalid_argument& e) {
    err << "invalid parameters: " << e.what() << '\n';
  }
  return kExitUsage;
}

}  // namespace mtbp
