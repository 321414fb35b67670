#include "mtbp/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>

#include "mtbp/linalg.hpp"

namespace mtbp {

double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

MCEstimate summarize(const std::vector<std::optional<double>>& samples) {
  MCEstimate est;
  std::vector<double> kept;
  kept.reserve(samples.size());
  for (const auto& s : samples) {
    if (s) {
      kept.push_back(*s);
    } else {
      ++est.discarded;
    }
  }
  est.n = kept.size();
  if (est.n == 0) {
    est.mean = std::numeric_limits<double>::quiet_NaN();
    est.std_error = std::numeric_limits<double>::quiet_NaN();
    return est;
  }
  est.mean = pairwise_sum(kept.data(), kept.size()) / double(est.n);
  if (est.n > 1) {
    std::vector<double> sq(kept.size());
    for (std::size_t k = 0; k < kept.size(); ++k) sq[k] = (kept[k] - est.mean) * (kept[k] - est.mean);
    const double var = pairwise_sum(sq.data(), sq.size()) / double(est.n - 1);
    est.std_error = std::sqrt(var / double(est.n));
  }
  return est;
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::flaky: return "flaky";
    case Verdict::inconclusive: return "inconclusive";
    case Verdict::info: return "info";
    case Verdict::refused: return "refused";
  }
  return "?";
}

std::string csv_header() { return "check,model,params,estimate,stderr,target,tolerance,n,discarded,verdict"; }

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string param(const std::string& key, double value) { return key + "=" + fmt(value); }

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ';';
    out += p;
  }
  return out;
}

std::string vec_param(const std::string& key, const Vector& v) {
  std::string out = key + "=(";
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? " " : "") + fmt(v[i]);
  return out + ")";
}

void require_n(const RunConfig& cfg, const char* op) {
  if (cfg.n < 1) throw EstimatorError(std::string(op) + ": need n >= 1");
}

void require_time(double t, const char* op) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw EstimatorError(std::string(op) + ": time must be finite and >= 0");
}

void require_root(const BranchingModel& model, const RunConfig& cfg) {
  if (cfg.root.value >= model.num_types()) throw EstimatorError("root type out of range");
}

MCEstimate require_some(MCEstimate est, const char* op) {
  if (est.n == 0) throw EstimatorError(std::string(op) + ": every replicate was discarded");
  return est;
}

// |a - b| <= 3 se + rounding slack.
bool within_three_sigma(double a, double b, double se, double target) {
  return std::abs(a - b) <= 3.0 * se + rounding_slack(target);
}

double fraction_stderr(double p, std::size_t n) { return n ? std::sqrt(p * (1.0 - p) / double(n)) : 0.0; }

}  // namespace

// RFC 4180 quoting for fields that contain separators or quotes.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_row(const CheckRow& row) {
  std::ostringstream os;
  os << csv_field(row.check) << ',' << csv_field(row.model) << ',' << csv_field(row.params) << ',' << fmt(row.estimate) << ',' << fmt(row.std_error)
     << ',' << fmt(row.target) << ',' << fmt(row.tolerance) << ',' << row.n << ',' << row.discarded << ','
     << verdict_name(row.verdict);
  return os.str();
}

std::uint64_t rerun_seed(std::uint64_t seed) {
  Engine e = substream(seed, 0, StreamTag::rerun);
  return e();
}

double rounding_slack(double target) { return 1e-12 * std::max(1.0, std::abs(target)); }

MCEstimate estimate_forward_side(const BranchingModel& model, const SpectralData& spec, const PathFunctional& F,
                                 double t, const RunConfig& cfg) {
  require_n(cfg, "estimate_forward_side");
  require_time(t, "estimate_forward_side");
  require_root(model, cfg);
  const ForwardSimulator sim(model);
  const std::size_t S = model.num_types();
  const double scale = std::exp(-spec.lambda * t) / spec.h[cfg.root];
  auto one = [&](std::size_t k) -> std::optional<double> {
    Engine rng = substream(cfg.seed, k, StreamTag::forward);
    const FamilyTree tree = sim.simulate(cfg.root, t, cfg.cap, rng);
    if (tree.capped()) return std::nullopt;
    const auto pop = population_at(tree, t);
    std::vector<double> terms;
    terms.reserve(pop.size());
    for (Id x : pop) {
      const TypeIndex type = tree[x].type;
      double f;
      if (F.needs_path()) {
        f = F.evaluate(lineage_path(tree, x, t), S, pop.size());
      } else {
        TrunkPath terminal;
        terminal.start = type;
        f = F.evaluate(terminal, S, pop.size());
      }
      terms.push_back(f * spec.h[type]);
    }
    return scale * pairwise_sum(terms.data(), terms.size());
  };
  return require_some(summarize(run_replicates(cfg.n, one, cfg.workers)), "estimate_forward_side");
}

MCEstimate estimate_trunk_side(const BranchingModel& model, const SpectralData& spec, const PathFunctional& F,
                               double t, const RunConfig& cfg) {
  require_n(cfg, "estimate_trunk_side");
  require_time(t, "estimate_trunk_side");
  require_root(model, cfg);
  const BiasedSimulator sim(model, size_biased_law(model, spec, BiasVariant::h_biased));
  const std::size_t S = model.num_types();
  auto one = [&](std::size_t k) -> std::optional<double> {
    Engine rng = substream(cfg.seed, k, StreamTag::trunk);
    if (!F.needs_tree()) {
      const TrunkPath path = sim.simulate_spine(cfg.root, t, rng);
      return F.evaluate(path, S, 0);
    }
    const BiasedTree biased = sim.simulate(cfg.root, t, cfg.cap, rng);
    if (biased.tree.capped()) return std::nullopt;
    return F.evaluate(biased.trunk_path(), S, population_at(biased.tree, t).size());
  };
  return require_some(summarize(run_replicates(cfg.n, one, cfg.workers)), "estimate_trunk_side");
}

SizeBiasReport verify_size_bias(const BranchingModel& model, const SpectralData& spec, const PathFunctional& F,
                                double t, const RunConfig& cfg) {
  SizeBiasReport rep;
  auto attempt = [&](const RunConfig& c) {
    rep.forward = estimate_forward_side(model, spec, F, t, c);
    rep.trunk = estimate_trunk_side(model, spec, F, t, c);
    const double se = std::hypot(rep.forward.std_error, rep.trunk.std_error);
    rep.z = se > 0.0 ? (rep.forward.mean - rep.trunk.mean) / se : 0.0;
    return within_three_sigma(rep.forward.mean, rep.trunk.mean, se, rep.trunk.mean);
  };
  if (attempt(cfg)) {
    rep.verdict = Verdict::pass;
  } else {
    RunConfig again = cfg;
    again.seed = rerun_seed(cfg.seed);
    rep.verdict = attempt(again) ? Verdict::flaky : Verdict::fail;
  }
  const double se = std::hypot(rep.forward.std_error, rep.trunk.std_error);
  rep.row = {"size_bias",
             "",
             join({"F=" + F.name(model), param("t", t), "root=" + model.name(cfg.root)}),
             rep.forward.mean,
             se,
             rep.trunk.mean,
             3.0 * se,
             rep.forward.n + rep.trunk.n,
             rep.forward.discarded + rep.trunk.discarded,
             rep.verdict};
  return rep;
}

FeynmanKacReport feynman_kac_check(const BranchingModel& model, const SpectralData& spec, TypeIndex j, double t,
                                   const RunConfig& cfg) {
  require_n(cfg, "feynman_kac_check");
  require_time(t, "feynman_kac_check");
  require_root(model, cfg);
  if (j.value >= model.num_types()) throw EstimatorError("feynman_kac_check: type out of range");
  const MeanData mean = mean_data(model);
  const BiasedSimulator sim(model, size_biased_law(model, spec, BiasVariant::uniform));

  FeynmanKacReport rep;
  rep.target = matrix_exponential(mean.A, t)(cfg.root.value, j.value);

  auto attempt = [&](const RunConfig& c) {
    auto one = [&](std::size_t k) -> std::optional<double> {
      Engine rng = substream(c.seed, k, StreamTag::trunk);
      const TrunkPath path = sim.simulate_spine(c.root, t, rng);
      if (path.terminal_type() != j) return 0.0;
      double exponent = 0.0;
      for (const auto& seg : path.segments) exponent += mean.r[seg.type] * seg.sojourn;
      return std::exp(exponent);
    };
    const auto samples = run_replicates(c.n, one, c.workers);
    rep.estimate = summarize(samples);
    std::vector<double> sq(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) sq[k] = *samples[k] * *samples[k];
    const double s2 = pairwise_sum(sq.data(), sq.size());
    const double s1 = rep.estimate.mean * double(rep.estimate.n);
    rep.effective_sample_size = s2 > 0.0 ? s1 * s1 / s2 : 0.0;
    return within_three_sigma(rep.estimate.mean, rep.target, rep.estimate.std_error, rep.target);
  };

  const bool ok = attempt(cfg);
  if (rep.effective_sample_size < kMinEffectiveSampleSize) {
    rep.verdict = Verdict::inconclusive;
  } else if (ok) {
    rep.verdict = Verdict::pass;
  } else {
    RunConfig again = cfg;
    again.seed = rerun_seed(cfg.seed);
    const bool ok2 = attempt(again);
    if (rep.effective_sample_size < kMinEffectiveSampleSize) {
      rep.verdict = Verdict::inconclusive;
    } else {
      rep.verdict = ok2 ? Verdict::flaky : Verdict::fail;
    }
  }
  rep.row = {"feynman_kac",
             "",
             join({"root=" + model.name(cfg.root), "j=" + model.name(j), param("t", t),
                   param("ess", rep.effective_sample_size)}),
             rep.estimate.mean,
             rep.estimate.std_error,
             rep.target,
             3.0 * rep.estimate.std_error + rounding_slack(rep.target),
             rep.estimate.n,
             rep.estimate.discarded,
             rep.verdict};
  return rep;
}

namespace {

// Simplex grid with the given number of steps per unit, for 1 to 3 types.
template <typename Visit>
void simplex_grid(Eigen::Index n, int steps, Visit&& visit) {
  Vector nu(n);
  if (n == 1) {
    nu[0] = 1.0;
    visit(nu);
  } else if (n == 2) {
    for (int a = 0; a <= steps; ++a) {
      nu << double(a) / steps, double(steps - a) / steps;
      visit(nu);
    }
  } else if (n == 3) {
    for (int a = 0; a <= steps; ++a) {
      for (int b = 0; a + b <= steps; ++b) {
        nu << double(a) / steps, double(b) / steps, double(steps - a - b) / steps;
        visit(nu);
      }
    }
  } else {
    throw EstimatorError("ldp target band: simplex grid supports at most 3 types");
  }
}

}  // namespace

RateBand ldp_target_band(const Matrix& G, double lambda, const Vector& nu, double eps) {
  if (!on_simplex<double>(nu)) throw EstimatorError("ldp: nu is not a probability vector");
  if (!(eps > 0.0)) throw EstimatorError("ldp: eps must be positive");
  const Eigen::Index n = G.rows();
  const int steps = n == 2 ? 20000 : 400;
  const RateFunctionOptions options{4, 500, 0x5eedULL};
  double inf_closed = rate_function<double>(G, nu, options);
  double inf_open = inf_closed;
  // Grid points are only compared, never accumulated, so a small relative
  // margin is enough to separate the open ball from its boundary.
  const double margin = 1e-12;
  simplex_grid(n, steps, [&](const Vector& p) {
    const double d = tv_distance<double>(p, nu);
    if (d > eps * (1 + margin)) return;
    const double value = rate_function<double>(G, p, options);
    inf_closed = std::min(inf_closed, value);
    if (d < eps * (1 - margin)) inf_open = std::min(inf_open, value);
  });
  return {lambda - inf_open, lambda - inf_closed};
}

LdpReport ldp_rate_estimate(const BranchingModel& model, const SpectralData& spec, const Vector& nu, double eps,
                            double t, const RunConfig& cfg, double tolerance) {
  require_n(cfg, "ldp_rate_estimate");
  require_root(model, cfg);
  if (!(t > 0.0)) throw EstimatorError("ldp_rate_estimate: need t > 0");
  if (nu.size() != static_cast<Eigen::Index>(model.num_types())) throw EstimatorError("ldp: nu has the wrong size");
  const auto chain = retrospective_generator(model, spec);
  LdpReport rep;
  rep.band = ldp_target_band(chain.G, spec.lambda, nu, eps);

  const BiasedSimulator sim(model, size_biased_law(model, spec, BiasVariant::h_biased));
  const std::size_t S = model.num_types();
  auto one = [&](std::size_t k) -> std::optional<double> {
    Engine rng = substream(cfg.seed, k, StreamTag::trunk);
    const TrunkPath path = sim.simulate_spine(cfg.root, t, rng);
    if (tv_distance<double>(trunk_occupation(path, S), nu) >= eps) return 0.0;
    return 1.0 / spec.h[path.terminal_type()];
  };
  const auto samples = run_replicates(cfg.n, one, cfg.workers);
  rep.trunk = summarize(samples);
  for (const auto& s : samples) rep.hits += (*s > 0.0);

  double distance;
  if (rep.hits == 0) {
    rep.estimate = -std::numeric_limits<double>::infinity();
    rep.warning = "no trunk path landed in the ball; rate estimate is -inf";
    distance = std::numeric_limits<double>::infinity();
  } else {
    rep.estimate = spec.lambda + std::log(spec.h[cfg.root] * rep.trunk.mean) / t;
    distance = std::max({0.0, rep.band.lower - rep.estimate, rep.estimate - rep.band.upper});
  }
  rep.verdict = distance <= tolerance ? Verdict::pass : Verdict::fail;
  // Delta method: se(log m) ~ se(m) / m.
  const double se = rep.hits ? rep.trunk.std_error / rep.trunk.mean / t : std::numeric_limits<double>::infinity();
  rep.row = {"ldp_rate",
             "",
             join({vec_param("nu", nu), param("eps", eps), param("t", t), "root=" + model.name(cfg.root),
                   param("band_lo", rep.band.lower), param("band_hi", rep.band.upper),
                   "hits=" + std::to_string(rep.hits)}),
             rep.estimate,
             se,
             0.5 * (rep.band.lower + rep.band.upper),
             tolerance + 0.5 * (rep.band.upper - rep.band.lower),
             rep.trunk.n,
             rep.trunk.discarded,
             rep.verdict};
  return rep;
}

Vector extinction_probabilities(const BranchingModel& model) {
  const auto n = static_cast<Eigen::Index>(model.num_types());
  Vector q = Vector::Zero(n);
  for (int iter = 0; iter < 1'000'000; ++iter) {
    Vector next(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double f = 0.0;
      for (const auto& atom : model.offspring[static_cast<std::size_t>(i)].atoms) {
        double term = atom.prob;
        for (Eigen::Index j = 0; j < n; ++j) term *= std::pow(q[j], atom.counts[static_cast<std::size_t>(j)]);
        f += term;
      }
      next[i] = std::min(f, 1.0);
    }
    const double change = (next - q).cwiseAbs().maxCoeff();
    q = next;
    if (change < 1e-15) break;
  }
  return q;
}

Vector finite_ancestral_distribution(const MeanData& mean, const SpectralData& spec, double u) {
  const Vector growth = matrix_exponential(mean.A, u).rowwise().sum() * std::exp(-spec.lambda * u);
  return spec.pi.cwiseProduct(growth);
}

namespace {

// Forward trees at time t, one per replicate; capped trees and (if asked)
// extinct ones are reported as nullopt.
template <typename Stat>
std::vector<std::optional<double>> forward_statistic(const BranchingModel& model, double t, const RunConfig& cfg,
                                                     bool need_survival, Stat&& stat) {
  const ForwardSimulator sim(model);
  auto one = [&](std::size_t k) -> std::optional<double> {
    Engine rng = substream(cfg.seed, k, StreamTag::forward);
    const FamilyTree tree = sim.simulate(cfg.root, t, cfg.cap, rng);
    if (tree.capped()) return std::nullopt;
    if (need_survival && tree.extinct_at) return std::nullopt;
    return stat(tree);
  };
  return run_replicates(cfg.n, one, cfg.workers);
}

CheckRow fraction_row(std::string check, std::string params, const MCEstimate& est, double target) {
  const Verdict v = est.n > 0 && est.mean >= target ? Verdict::pass : Verdict::fail;
  return {std::move(check), "", std::move(params), est.mean, fraction_stderr(est.mean, est.n), target, 0.0,
          est.n, est.discarded, v};
}

}  // namespace

CheckRow kesten_stigum_types(const BranchingModel& model, const SpectralData& spec, const LimitConfig& cfg) {
  const auto samples = forward_statistic(model, cfg.t, cfg.run, true, [&](const FamilyTree& tree) {
    const Vector z = type_counts(tree, cfg.t).cast<double>();
    return tv_distance<double>(z / z.sum(), spec.pi) < cfg.ks_tv ? 1.0 : 0.0;
  });
  return fraction_row("kesten_stigum_types",
                      join({param("t", cfg.t), param("tv", cfg.ks_tv), "root=" + model.name(cfg.run.root)}),
                      summarize(samples), cfg.ks_replicate_fraction);
}

CheckRow kesten_stigum_survival(const BranchingModel& model, const SpectralData& spec, const LimitConfig& cfg) {
  const auto samples = forward_statistic(model, cfg.t, cfg.run, false, [&](const FamilyTree& tree) {
    return martingale_W(tree, spec.h, spec.lambda, cfg.t) > cfg.ks_threshold ? 1.0 : 0.0;
  });
  const MCEstimate est = summarize(samples);
  const double target = 1.0 - extinction_probabilities(model)[cfg.run.root];
  const Verdict v = std::abs(est.mean - target) <= cfg.ks_survival_tolerance ? Verdict::pass : Verdict::fail;
  return {"kesten_stigum_survival",
          "",
          join({param("t", cfg.t), param("threshold", cfg.ks_threshold), "root=" + model.name(cfg.run.root)}),
          est.mean,
          fraction_stderr(est.mean, est.n),
          target,
          cfg.ks_survival_tolerance,
          est.n,
          est.discarded,
          v};
}

CheckRow growth_rate(const BranchingModel& model, const SpectralData& spec, const LimitConfig& cfg) {
  if (!(cfg.t > 0.0)) throw EstimatorError("growth_rate: need t > 0");
  const auto samples = forward_statistic(model, cfg.t, cfg.run, true, [&](const FamilyTree& tree) {
    return std::log(double(population_at(tree, cfg.t).size())) / cfg.t;
  });
  const MCEstimate est = summarize(samples);
  std::vector<double> kept;
  for (const auto& s : samples) {
    if (s) kept.push_back(*s);
  }
  double median = std::numeric_limits<double>::quiet_NaN();
  if (!kept.empty()) {
    std::sort(kept.begin(), kept.end());
    const std::size_t m = kept.size() / 2;
    median = kept.size() % 2 ? kept[m] : 0.5 * (kept[m - 1] + kept[m]);
  }
  const Verdict v = std::abs(median - spec.lambda) <= cfg.growth_tolerance ? Verdict::pass : Verdict::fail;
  return {"growth_rate", "", join({param("t", cfg.t), "root=" + model.name(cfg.run.root), param("mean", est.mean)}),
          median, est.std_error, spec.lambda, cfg.growth_tolerance, est.n, est.discarded, v};
}

std::vector<CheckRow> pop_average(const BranchingModel& model, const SpectralData& spec, const LimitConfig& cfg) {
  const auto S = static_cast<Eigen::Index>(model.num_types());
  const Vector alpha_u = finite_ancestral_distribution(mean_data(model), spec, cfg.u);
  const ForwardSimulator sim(model);
  auto one = [&](std::size_t k) -> std::optional<Vector> {
    Engine rng = substream(cfg.run.seed, k, StreamTag::forward);
    const FamilyTree tree = sim.simulate(cfg.run.root, cfg.t, cfg.run.cap, rng);
    if (tree.capped() || tree.extinct_at) return std::nullopt;
    return ancestral_average(tree, cfg.t, cfg.u);
  };
  const auto samples = run_replicates(cfg.run.n, one, cfg.run.workers);
  std::size_t kept = 0;
  Vector mean_A = Vector::Zero(S);
  for (Eigen::Index j = 0; j < S; ++j) {
    std::vector<double> col;
    for (const auto& s : samples) {
      if (s) col.push_back((*s)[j]);
    }
    kept = col.size();
    mean_A[j] = kept ? pairwise_sum(col.data(), col.size()) / double(kept) : std::numeric_limits<double>::quiet_NaN();
  }
  const std::size_t discarded = samples.size() - kept;
  const double d1 = kept ? tv_distance<double>(mean_A, alpha_u) : std::numeric_limits<double>::infinity();
  const double d2 = tv_distance<double>(alpha_u, ancestral_distribution(spec));
  const std::string params = join({param("t", cfg.t), param("u", cfg.u), "root=" + model.name(cfg.run.root)});
  return {
      {"pop_average", "", params + ";" + vec_param("mean_A", mean_A), d1, 0.0, 0.0, cfg.pop_average_tolerance, kept,
       discarded, d1 < cfg.pop_average_tolerance ? Verdict::pass : Verdict::fail},
      {"pop_average_limit", "", join({param("u", cfg.u), vec_param("alpha_u", alpha_u)}), d2, 0.0, 0.0,
       cfg.alpha_u_tolerance, 0, 0, d2 < cfg.alpha_u_tolerance ? Verdict::pass : Verdict::fail},
  };
}

CheckRow time_average(const BranchingModel& model, const SpectralData& spec, const LimitConfig& cfg) {
  const ForwardSimulator sim(model);
  const Vector alpha = ancestral_distribution(spec);
  auto one = [&](std::size_t k) -> std::optional<double> {
    Engine rng = substream(cfg.run.seed, k, StreamTag::census);
    const LineageCensus census =
        occupation_census(sim, cfg.run.root, cfg.t, alpha, cfg.eps, rng, cfg.census_max_population);
    if (census.capped || census.population == 0) return std::nullopt;
    return census.fraction();
  };
  const auto fractions = run_replicates(cfg.run.n, one, cfg.run.workers);
  std::vector<std::optional<double>> good;
  good.reserve(fractions.size());
  for (const auto& f : fractions) good.push_back(f ? std::optional(*f < cfg.lineage_fraction ? 1.0 : 0.0) : f);
  return fraction_row("time_average",
                      join({param("t", cfg.t), param("eps", cfg.eps), param("lineage_fraction", cfg.lineage_fraction),
                            "root=" + model.name(cfg.run.root), param("mean_far_fraction", summarize(fractions).mean)}),
                      summarize(good), cfg.ks_replicate_fraction);
}

std::vector<CheckRow> trunk_statistics(const BranchingModel& model, const SpectralData& spec, const LimitConfig& cfg) {
  const std::size_t S = model.num_types();
  const auto chain = retrospective_generator(model, spec);
  const BiasedSimulator sim(model, size_biased_law(model, spec, BiasVariant::h_biased));
  const double T = cfg.trunk_horizon;
  const std::size_t R = cfg.trunk_replicates;
  if (!(T > 0.0) || R < 1) throw EstimatorError("trunk_statistics: need a positive horizon and replicate count");

  struct Pair {
    PathStatistics trunk, coalesced, reference;
  };
  auto one = [&](std::size_t k) {
    Engine rng = substream(cfg.run.seed, k, StreamTag::trunk);
    const TrunkPath spine = sim.simulate_spine(cfg.run.root, T, rng);
    Engine rng2 = substream(cfg.run.seed, k, StreamTag::mutation_chain);
    const TrunkPath ref = simulate_mutation_chain(chain.G, cfg.run.root, T, rng2);
    return Pair{path_statistics(spine, S), path_statistics(coalesce(spine), S), path_statistics(ref, S)};
  };
  const auto results = run_replicates(R, one, cfg.run.workers);
  // Fixed-order reduction keeps the totals independent of scheduling.
  PathStatistics trunk(S), coalesced(S), reference(S);
  for (const auto& r : results) {
    trunk += r.trunk;
    coalesced += r.coalesced;
    reference += r.reference;
  }

  std::vector<CheckRow> rows;
  const std::string base = join({param("horizon", T), "replicates=" + std::to_string(R)});
  auto rel_row = [&](std::string check, std::string params, double est, double target) {
    const double tol = cfg.trunk_tolerance * std::abs(target);
    const bool ok = std::isfinite(est) && std::abs(est - target) <= tol + rounding_slack(target);
    rows.push_back({std::move(check), "", base + ";" + params, est, 0.0, target, tol, R, 0,
                    ok ? Verdict::pass : Verdict::fail});
  };

  const Vector mean_sojourn = trunk.holding.cwiseQuotient(trunk.exits);
  const Vector spine_rates = coalesced.exit_rates();
  const Vector ref_rates = reference.exit_rates();
  const Matrix spine_jumps = coalesced.transition_frequencies();
  const Matrix ref_jumps = reference.transition_frequencies();
  for (std::size_t i = 0; i < S; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const std::string type = "type=" + model.name(TypeIndex(i));
    if (trunk.holding[ii] <= 0.0) continue;  // type never visited
    rel_row("trunk_sojourn_mean", type, mean_sojourn[ii], 1.0 / chain.holding_rates[ii]);
    if (-chain.G(ii, ii) > 0.0) {
      rel_row("trunk_exit_rate", type, spine_rates[ii], ref_rates[ii]);
      for (std::size_t j = 0; j < S; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        if (i == j || chain.G(ii, jj) <= 0.0) continue;
        rel_row("trunk_jump_frequency", type + "->" + model.name(TypeIndex(j)), spine_jumps(ii, jj),
                ref_jumps(ii, jj));
      }
    } else {
      rel_row("trunk_exit_rate", type, coalesced.exits[ii], 0.0);
    }
  }
  const Vector occupation = trunk.holding / trunk.holding.sum();
  const double d = tv_distance<double>(occupation, ancestral_distribution(spec));
  rows.push_back({"trunk_occupation", "", base + ";" + vec_param("occupation", occupation), d, 0.0, 0.0,
                  cfg.trunk_tolerance, R, 0, d < cfg.trunk_tolerance ? Verdict::pass : Verdict::fail});
  return rows;
}

namespace {

CheckRow martingale_row(std::string check, std::string params, const std::vector<std::optional<double>>& samples,
                        double target, const std::function<std::vector<std::optional<double>>()>& rerun) {
  MCEstimate est = summarize(samples);
  Verdict v = Verdict::pass;
  if (est.n == 0 || !within_three_sigma(est.mean, target, est.std_error, target)) {
    const MCEstimate again = summarize(rerun());
    v = again.n > 0 && within_three_sigma(again.mean, target, again.std_error, target) ? Verdict::flaky
                                                                                       : Verdict::fail;
  }
  return {std::move(check), "", std::move(params), est.mean, est.std_error, target,
          3.0 * est.std_error + rounding_slack(target), est.n, est.discarded, v};
}

}  // namespace

CheckRow martingale_W_check(const BranchingModel& model, const SpectralData& spec, double t, const RunConfig& cfg) {
  require_n(cfg, "martingale_W_check");
  require_time(t, "martingale_W_check");
  require_root(model, cfg);
  auto run = [&](const RunConfig& c) {
    return forward_statistic(model, t, c, false,
                             [&](const FamilyTree& tree) { return martingale_W(tree, spec.h, spec.lambda, t); });
  };
  RunConfig again = cfg;
  again.seed = rerun_seed(cfg.seed);
  return martingale_row("martingale_W", join({param("t", t), "root=" + model.name(cfg.root)}), run(cfg),
                        spec.h[cfg.root], [&] { return run(again); });
}

CheckRow martingale_Wtilde_check(const BranchingModel& model, const SpectralData&, double t, const RunConfig& cfg) {
  require_n(cfg, "martingale_Wtilde_check");
  require_time(t, "martingale_Wtilde_check");
  require_root(model, cfg);
  const Vector r = mean_data(model).r;
  auto run = [&](const RunConfig& c) {
    return forward_statistic(model, t, c, false, [&](const FamilyTree& tree) { return martingale_Wtilde(tree, r, t); });
  };
  RunConfig again = cfg;
  again.seed = rerun_seed(cfg.seed);
  return martingale_row("martingale_Wtilde", join({param("t", t), "root=" + model.name(cfg.root)}), run(cfg), 1.0,
                        [&] { return run(again); });
}

std::vector<CheckRow> variational_check(const BranchingModel& model, const SpectralData& spec, const LimitConfig& cfg) {
  const VariationalResult v = variational_lambda(model, spec);
  const double gap = std::abs(v.value - spec.lambda);
  const double d = tv_distance<double>(v.argmax, ancestral_distribution(spec));
  return {
      {"variational_value", "", "", v.value, 0.0, spec.lambda, cfg.variational_tolerance, 0, 0,
       gap <= cfg.variational_tolerance ? Verdict::pass : Verdict::fail},
      {"variational_argmax", "", vec_param("argmax", v.argmax), d, 0.0, 0.0, cfg.variational_argmax_tolerance, 0, 0,
       d <= cfg.variational_argmax_tolerance ? Verdict::pass : Verdict::fail},
  };
}

std::vector<CheckRow> limit_checks(const BranchingModel& model, const SpectralData& spec, const LimitConfig& cfg) {
  static const char* const kChecks[] = {"kesten_stigum_types", "kesten_stigum_survival", "growth_rate",
                                        "pop_average",         "time_average",           "trunk_statistics",
                                        "martingale_W",        "martingale_Wtilde",      "variational"};
  std::vector<CheckRow> rows;
  if (!(spec.lambda > 0.0)) {
    for (const char* c : kChecks) {
      rows.push_back({c, "", param("lambda", spec.lambda), std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0, 0.0, 0,
                      0, Verdict::refused});
    }
    return rows;
  }
  auto append = [&](std::vector<CheckRow> more) { rows.insert(rows.end(), more.begin(), more.end()); };
  rows.push_back(kesten_stigum_types(model, spec, cfg));
  rows.push_back(kesten_stigum_survival(model, spec, cfg));
  rows.push_back(growth_rate(model, spec, cfg));
  append(pop_average(model, spec, cfg));
  rows.push_back(time_average(model, spec, cfg));
  append(trunk_statistics(model, spec, cfg));
  for (double t : cfg.t_grid) rows.push_back(martingale_W_check(model, spec, t, cfg.run));
  for (double t : cfg.t_grid) rows.push_back(martingale_Wtilde_check(model, spec, t, cfg.run));
  append(variational_check(model, spec, cfg));
  return rows;
}

}  // namespace mtbp
