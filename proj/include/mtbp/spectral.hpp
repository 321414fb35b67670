#pragma once

#include <vector>

#include "mtbp/linalg.hpp"
#include "mtbp/model.hpp"

namespace mtbp {

struct SpectralData {
  double lambda = 0.0;
  Vector pi;     // left eigenvector, <pi,1> = 1
  Vector h;      // right eigenvector, <pi,h> = 1
  Vector alpha;  // ancestral distribution, alpha_i = pi_i h_i
  double residual = 0.0;
};

// Principal eigenvalue and normalized eigenvectors of A; alpha is filled in.
SpectralData perron(const Matrix& A, const PerronOptions& opt = {});
SpectralData spectral_data(const BranchingModel& model);

Vector ancestral_distribution(const SpectralData& spec);

// Retrospective mutation chain: holding rate a_i + lambda, jump law p_ij.
struct RetrospectiveChain {
  Matrix G;
  Vector holding_rates;
  Matrix jump_probs;
};

RetrospectiveChain retrospective_generator(const BranchingModel& model, const SpectralData& spec);
// Second route: g_ij = h_i^{-1} (a_ij - lambda delta_ij) h_j.
Matrix conjugated_generator(const MeanData& mean, const SpectralData& spec);

struct DerivedGenerators {
  Matrix G_rev;    // time reversal of G
  Matrix G_tilde;  // mutation-only chain of the uniform size-biased trunk
};

DerivedGenerators derived_generators(const BranchingModel& model, const SpectralData& spec);
// Second route for the time reversal: alpha_j g_ji / alpha_i.
Matrix reversed_from_chain(const Matrix& G, const Vector& alpha);

// Offspring laws biased by a weight vector gamma: atom kappa gets mass
// <kappa,gamma> p_i(kappa) / <m_i,gamma>, trunk lifetimes are exponential with
// rate a_i <m_i,gamma> / gamma_i, and the trunk successor is a child picked
// with probability proportional to gamma of its type.
struct SizeBiasedLaw {
  Vector gamma;
  Vector trunk_rates;
  std::vector<OffspringLaw> laws;
};

SizeBiasedLaw size_biased_law(const BranchingModel& model, const Vector& gamma);

enum class BiasVariant { h_biased, uniform };

SizeBiasedLaw size_biased_law(const BranchingModel& model, const SpectralData& spec, BiasVariant variant);

struct BiasedLaws {
  Vector c;                          // 1 + lambda / a_i
  std::vector<OffspringLaw> p_hat;   // h-biased
  std::vector<OffspringLaw> p_tilde; // size-biased, uniform successor
};

BiasedLaws biased_laws(const BranchingModel& model, const SpectralData& spec);

// Level-2 rate function of the chain with generator G.
double rate_function(const Matrix& G, const Vector& nu);

struct VariationalResult {
  double value = 0.0;
  Vector argmax;
};

// max over the simplex of <nu, r> - I_{G_tilde}(nu).
VariationalResult variational_lambda(const BranchingModel& model, const SpectralData& spec);

}  // namespace mtbp
