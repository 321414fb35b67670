#include "mtbp/spectral.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace mtbp {

SpectralData perron(const Matrix& A, const PerronOptions& opt) {
  const auto result = perron_eigen(A, opt);
  SpectralData spec;
  spec.lambda = result.lambda;
  spec.pi = result.left;
  spec.h = result.right;
  spec.residual = result.residual;
  spec.alpha = ancestral_distribution(spec);
  return spec;
}

SpectralData spectral_data(const BranchingModel& model) { return perron(mean_data(model).A); }

Vector ancestral_distribution(const SpectralData& spec) { return spec.pi.cwiseProduct(spec.h); }

RetrospectiveChain retrospective_generator(const BranchingModel& model, const SpectralData& spec) {
  const MeanData mean = mean_data(model);
  const Eigen::Index n = mean.M.rows();
  RetrospectiveChain chain;
  chain.holding_rates = model.split_rates.array() + spec.lambda;
  chain.jump_probs = Matrix(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double c = 1.0 + spec.lambda / model.split_rates[i];
    for (Eigen::Index j = 0; j < n; ++j) {
      chain.jump_probs(i, j) = mean.M(i, j) * spec.h[j] / (c * spec.h[i]);
    }
  }
  chain.G = chain.holding_rates.asDiagonal() * (chain.jump_probs - Matrix::Identity(n, n));
  return chain;
}

Matrix conjugated_generator(const MeanData& mean, const SpectralData& spec) {
  const Eigen::Index n = mean.A.rows();
  const Matrix shifted = mean.A - spec.lambda * Matrix::Identity(n, n);
  return spec.h.cwiseInverse().asDiagonal() * shifted * spec.h.asDiagonal();
}

DerivedGenerators derived_generators(const BranchingModel& model, const SpectralData& spec) {
  const MeanData mean = mean_data(model);
  const Eigen::Index n = mean.A.rows();
  DerivedGenerators out;
  const Matrix shifted_t = mean.A.transpose() - spec.lambda * Matrix::Identity(n, n);
  out.G_rev = spec.pi.cwiseInverse().asDiagonal() * shifted_t * spec.pi.asDiagonal();
  // a_i m_ij - a_i m_i delta_ij; rows sum to zero.
  out.G_tilde = model.split_rates.asDiagonal() * mean.M;
  out.G_tilde.diagonal() -= model.split_rates.cwiseProduct(mean.row_means);
  return out;
}

Matrix reversed_from_chain(const Matrix& G, const Vector& alpha) {
  return alpha.cwiseInverse().asDiagonal() * G.transpose() * alpha.asDiagonal();
}

SizeBiasedLaw size_biased_law(const BranchingModel& model, const Vector& gamma) {
  const MeanData mean = mean_data(model);
  const Eigen::Index n = mean.M.rows();
  if (gamma.size() != n || !(gamma.array() > 0).all()) {
    throw ModelError("size-bias weights must be a positive vector of length |S|");
  }
  SizeBiasedLaw out;
  out.gamma = gamma;
  out.trunk_rates = Vector(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = mean.M.row(i).dot(gamma);
    out.trunk_rates[i] = model.split_rates[i] * norm / gamma[i];
    OffspringLaw law;
    for (const auto& atom : model.offspring[static_cast<std::size_t>(i)].atoms) {
      double weight = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) weight += atom.counts[static_cast<std::size_t>(j)] * gamma[j];
      if (weight > 0.0) law.atoms.push_back({atom.counts, weight * atom.prob / norm});
    }
    out.laws.push_back(std::move(law));
  }
  return out;
}

SizeBiasedLaw size_biased_law(const BranchingModel& model, const SpectralData& spec, BiasVariant variant) {
  const auto n = static_cast<Eigen::Index>(model.num_types());
  return size_biased_law(model, variant == BiasVariant::h_biased ? spec.h : Vector::Ones(n));
}

BiasedLaws biased_laws(const BranchingModel& model, const SpectralData& spec) {
  const MeanData mean = mean_data(model);
  const Eigen::Index n = mean.M.rows();
  BiasedLaws out;
  out.c = (spec.lambda / model.split_rates.array() + 1.0).matrix();
  for (Eigen::Index i = 0; i < n; ++i) {
    OffspringLaw hat, tilde;
    for (const auto& atom : model.offspring[static_cast<std::size_t>(i)].atoms) {
      double kh = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) kh += atom.counts[static_cast<std::size_t>(j)] * spec.h[j];
      const int size = atom.total();
      if (kh > 0.0) hat.atoms.push_back({atom.counts, kh * atom.prob / (out.c[i] * spec.h[i])});
      if (size > 0) tilde.atoms.push_back({atom.counts, size * atom.prob / mean.row_means[i]});
    }
    out.p_hat.push_back(std::move(hat));
    out.p_tilde.push_back(std::move(tilde));
  }
  return out;
}

double rate_function(const Matrix& G, const Vector& nu) { return mtbp::rate_function<double>(G, nu); }

namespace {

struct Objective {
  const Matrix& G_tilde;
  const Vector& r;
  RateFunctionOptions inner{1, 500, 0x5eedULL};

  // Value of <nu,r> - I(nu) and its gradient r_i + (G v*)_i / v*_i.
  double operator()(const Vector& nu, Vector* grad, Vector* warm) const {
    const auto inner_sol = rate_function_argmax<double>(G_tilde, nu, inner, warm);
    if (warm) *warm = inner_sol.v;
    if (grad) *grad = r + (G_tilde * inner_sol.v).cwiseQuotient(inner_sol.v);
    return nu.dot(r) - inner_sol.value;
  }
};

struct AscentResult {
  Vector nu;
  double value;
  double stationarity;
};

AscentResult projected_ascent(const Objective& phi, Vector nu) {
  Vector warm = Vector::Ones(nu.size());
  Vector grad;
  double value = phi(nu, &grad, &warm);
  double step = 1.0;
  double stationarity = 1.0;
  for (int it = 0; it < 20000; ++it) {
    bool accepted = false;
    Vector candidate, cand_grad, cand_warm = warm;
    double cand_value = value;
    for (int ls = 0; ls < 80; ++ls) {
      candidate = project_to_simplex<double>(nu + step * grad);
      cand_warm = warm;
      cand_value = phi(candidate, &cand_grad, &cand_warm);
      if (cand_value >= value + 1e-4 * grad.dot(candidate - nu)) {
        accepted = true;
        break;
      }
      step /= 2;
    }
    if (!accepted) break;
    const double moved = (candidate - nu).cwiseAbs().maxCoeff();
    nu = std::move(candidate);
    grad = std::move(cand_grad);
    warm = std::move(cand_warm);
    value = cand_value;
    step = std::min(step * 2.0, 1e3);
    if (moved < 1e-14) break;
  }
  // Projected-gradient residual with a unit step.
  stationarity = (project_to_simplex<double>(nu + grad) - nu).cwiseAbs().maxCoeff();
  return {nu, value, stationarity};
}

void barycentric_grid(std::size_t dim, int steps, std::vector<Vector>& out) {
  std::vector<int> counts(dim, 0);
  auto rec = [&](auto&& self, std::size_t k, int remaining) -> void {
    if (k + 1 == dim) {
      counts[k] = remaining;
      Vector nu(static_cast<Eigen::Index>(dim));
      for (std::size_t j = 0; j < dim; ++j) nu[static_cast<Eigen::Index>(j)] = counts[j] / double(steps);
      out.push_back(nu);
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      counts[k] = c;
      self(self, k + 1, remaining - c);
    }
  };
  rec(rec, 0, steps);
}

}  // namespace

VariationalResult variational_lambda(const BranchingModel& model, const SpectralData& spec) {
  const MeanData mean = mean_data(model);
  const Matrix G_tilde = derived_generators(model, spec).G_tilde;
  const Eigen::Index n = mean.A.rows();
  if (n == 1) return {mean.r[0], Vector::Ones(1)};

  const Objective phi{G_tilde, mean.r};
  std::vector<Vector> starts;
  starts.push_back(Vector::Constant(n, 1.0 / double(n)));
  std::mt19937_64 rng(0xda7aULL);
  std::gamma_distribution<double> gamma(1.0, 1.0);
  while (starts.size() < 10) {
    Vector nu(n);
    for (Eigen::Index k = 0; k < n; ++k) nu[k] = gamma(rng) + 1e-3;
    starts.push_back(nu / nu.sum());
  }
  if (n <= 3) {
    std::vector<Vector> grid;
    barycentric_grid(static_cast<std::size_t>(n), 100, grid);
    double best_value = -std::numeric_limits<double>::infinity();
    Vector best_point;
    for (const auto& nu : grid) {
      const double v = phi(nu, nullptr, nullptr);
      if (v > best_value) {
        best_value = v;
        best_point = nu;
      }
    }
    starts.push_back(best_point);
  }

  AscentResult best{Vector(), -std::numeric_limits<double>::infinity(), 1.0};
  for (const auto& start : starts) {
    auto result = projected_ascent(phi, start);
    if (result.value > best.value) best = std::move(result);
  }
  if (!(best.stationarity < 1e-6)) {
    std::ostringstream os;
    os.precision(12);
    os << "variational_lambda: optimizer did not converge (best value " << best.value << ", stationarity "
       << best.stationarity << ")";
    throw SpectralError(os.str());
  }
  return {best.value, best.nu};
}

}  // namespace mtbp
