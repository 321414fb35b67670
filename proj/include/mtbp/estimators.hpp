#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mtbp/biased_sim.hpp"
#include "mtbp/forward_sim.hpp"
#include "mtbp/functional.hpp"
#include "mtbp/parallel.hpp"
#include "mtbp/spectral.hpp"

namespace mtbp {

struct MCEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // sample standard deviation / sqrt(n)
  std::size_t n = 0;
  std::size_t discarded = 0;  // extinct or capped replicates, by context
};

// Pairwise (cascade) summation in index order.
double pairwise_sum(const double* x, std::size_t n);

// Mean and standard error of the engaged samples; disengaged ones count as discarded.
MCEstimate summarize(const std::vector<std::optional<double>>& samples);

enum class Verdict { pass, fail, flaky, inconclusive, info, refused };

const char* verdict_name(Verdict v);

// One CSV row: check,model,params,estimate,stderr,target,tolerance,n,discarded,verdict.
// Params are `key=value` pairs joined by ';'.
struct CheckRow {
  std::string check;
  std::string model;
  std::string params;
  double estimate = 0.0;
  double std_error = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  std::size_t n = 0;
  std::size_t discarded = 0;
  Verdict verdict = Verdict::info;
};

std::string csv_header();
std::string csv_row(const CheckRow& row);
std::string csv_field(const std::string& s);

struct RunConfig {
  std::uint64_t seed = kDefaultSeed;
  std::size_t n = 1000;
  std::size_t cap = kDefaultCap;
  TypeIndex root{0};
  std::size_t workers = default_workers();
};

// Master seed used for the single rerun of a failed 3-sigma check.
std::uint64_t rerun_seed(std::uint64_t seed);

// Absolute slack added to every 3-sigma band so zero-variance estimators are
// not failed by last-bit rounding.
double rounding_slack(double target);

// h_i^{-1} E^i(e^{-lambda t} sum_{x in X(t)} F(X[0,t], x[0,t]) h_{type(x)}).
// Extinct replicates contribute 0; capped ones are discarded.
MCEstimate estimate_forward_side(const BranchingModel& model, const SpectralData& spec, const PathFunctional& F,
                                 double t, const RunConfig& cfg);

// E of F on the h-biased tree with trunk. Path functionals only simulate the
// trunk; tree functionals build the whole biased tree.
MCEstimate estimate_trunk_side(const BranchingModel& model, const SpectralData& spec, const PathFunctional& F,
                               double t, const RunConfig& cfg);

struct SizeBiasReport {
  MCEstimate forward;
  MCEstimate trunk;
  double z = 0.0;
  Verdict verdict = Verdict::fail;
  CheckRow row;
};

// Both sides of the size-bias identity; pass within 3 combined standard
// errors, with one rerun on a fresh seed before declaring failure.
SizeBiasReport verify_size_bias(const BranchingModel& model, const SpectralData& spec, const PathFunctional& F,
                                double t, const RunConfig& cfg);

inline constexpr double kMinEffectiveSampleSize = 100.0;

struct FeynmanKacReport {
  MCEstimate estimate;
  double effective_sample_size = 0.0;
  double target = 0.0;
  Verdict verdict = Verdict::fail;
  CheckRow row;
};

// E^i Z_j(t) from the uniform-successor trunk reweighted by exp(int_0^t r),
// against (e^{tA})_ij.
FeynmanKacReport feynman_kac_check(const BranchingModel& model, const SpectralData& spec, TypeIndex j, double t,
                                   const RunConfig& cfg);

struct RateBand {
  double lower = 0.0;  // lambda - inf over the open ball
  double upper = 0.0;  // lambda - inf over the closed ball
};

// Target band for the growth rate of lineages whose occupation lies within
// TV distance eps of nu, via a simplex grid (at most 3 types).
RateBand ldp_target_band(const Matrix& G, double lambda, const Vector& nu, double eps);

struct LdpReport {
  double estimate = 0.0;  // -inf when no trunk path hit the ball
  RateBand band;
  MCEstimate trunk;
  std::size_t hits = 0;
  std::string warning;
  Verdict verdict = Verdict::fail;
  CheckRow row;
};

inline constexpr double kLdpTolerance = 0.1;

LdpReport ldp_rate_estimate(const BranchingModel& model, const SpectralData& spec, const Vector& nu, double eps,
                            double t, const RunConfig& cfg, double tolerance = kLdpTolerance);

// Extinction probabilities q_i: smallest fixed point of the offspring
// generating functions in [0,1]^S.
Vector extinction_probabilities(const BranchingModel& model);

// alpha^u_j = pi_j <(e^{uA})_j., 1> e^{-lambda u}.
Vector finite_ancestral_distribution(const MeanData& mean, const SpectralData& spec, double u);

struct LimitConfig {
  RunConfig run;
  std::vector<double> t_grid{1.0, 2.0, 4.0};  // martingale checks
  double t = 15.0;
  double u = 8.0;
  double eps = 0.1;
  double ks_tv = 0.05;
  double ks_replicate_fraction = 0.9;
  double ks_threshold = 0.01;
  double ks_survival_tolerance = 0.03;
  double growth_tolerance = 0.1;
  double pop_average_tolerance = 0.05;
  double alpha_u_tolerance = 0.01;
  double lineage_fraction = 0.1;
  std::size_t census_max_population = 200'000'000;
  double trunk_horizon = 1000.0;
  std::size_t trunk_replicates = 1000;
  double trunk_tolerance = 0.01;
  double variational_tolerance = 1e-6;
  double variational_argmax_tolerance = 1e-4;
};

// Survival-conditioned fraction of replicates with ||Z(t)/|Z(t)| - pi||_TV < ks_tv.
CheckRow kesten_stigum_types(const BranchingModel& model, const SpectralData& spec, const LimitConfig& cfg);
// Frequency of {W(t) > ks_threshold} against the survival probability 1 - q_root.
CheckRow kesten_stigum_survival(const BranchingModel& model, const SpectralData& spec, const LimitConfig& cfg);
// Survival-conditioned replicate median of log|Z(t)| / t against lambda.
CheckRow growth_rate(const BranchingModel& model, const SpectralData& spec, const LimitConfig& cfg);
// TV distance of the mean A^u(t) from alpha^u, and of alpha^u from alpha.
std::vector<CheckRow> pop_average(const BranchingModel& model, const SpectralData& spec, const LimitConfig& cfg);
// Fraction of surviving replicates in which fewer than lineage_fraction of
// X(t) have ||L^x(t) - alpha||_TV >= eps. Streams lineages, so large t works.
CheckRow time_average(const BranchingModel& model, const SpectralData& spec, const LimitConfig& cfg);
// h-biased trunk: sojourn means, exit rates and jump frequencies against the
// retrospective chain, pooled occupation against alpha.
std::vector<CheckRow> trunk_statistics(const BranchingModel& model, const SpectralData& spec, const LimitConfig& cfg);
CheckRow martingale_W_check(const BranchingModel& model, const SpectralData& spec, double t, const RunConfig& cfg);
CheckRow martingale_Wtilde_check(const BranchingModel& model, const SpectralData& spec, double t, const RunConfig& cfg);
std::vector<CheckRow> variational_check(const BranchingModel& model, const SpectralData& spec, const LimitConfig& cfg);

// Every limit check; on models with lambda <= 0 returns `refused` rows only.
std::vector<CheckRow> limit_checks(const BranchingModel& model, const SpectralData& spec, const LimitConfig& cfg);

}  // namespace mtbp
