#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "mtbp/types.hpp"

namespace mtbp {

template <typename Scalar>
struct PerronResult {
  Scalar lambda{};
  VectorX<Scalar> left;   // pi: <pi,1> = 1
  VectorX<Scalar> right;  // h: <pi,h> = 1
  Scalar residual{};      // max componentwise relative eigen-residual
  long iterations = 0;
};

struct PerronOptions {
  double step_tolerance = 1e-13;
  long max_iterations = 1'000'000;
  double residual_tolerance = 1e-10;
};

namespace detail {

// Power iteration with 1-norm normalization on a nonnegative primitive matrix.
template <typename Scalar>
VectorX<Scalar> power_iterate(const MatrixX<Scalar>& B, const PerronOptions& opt, long& iterations) {
  const Eigen::Index n = B.rows();
  VectorX<Scalar> x = VectorX<Scalar>::Constant(n, Scalar(1) / Scalar(n));
  for (long it = 1; it <= opt.max_iterations; ++it) {
    VectorX<Scalar> y = B * x;
    y /= y.sum();
    const Scalar step = (y - x).cwiseAbs().maxCoeff();
    x = std::move(y);
    if (step < Scalar(opt.step_tolerance)) {
      iterations = std::max(iterations, it);
      return x;
    }
  }
  iterations = opt.max_iterations;
  return x;
}

}  // namespace detail

// Principal eigen-triple of an irreducible matrix with nonnegative off-diagonal
// entries. Iterates on A + sI, with s large enough that the diagonal is
// strictly positive, separately for A and its transpose.
template <typename Derived>
PerronResult<typename Derived::Scalar> perron_eigen(const Eigen::MatrixBase<Derived>& A_in,
                                                    const PerronOptions& opt = {}) {
  using Scalar = typename Derived::Scalar;
  const MatrixX<Scalar> A = A_in;
  const Eigen::Index n = A.rows();
  if (n == 0 || A.cols() != n) throw SpectralError("perron: matrix must be square and nonempty");

  Scalar max_neg_diag = 0;
  for (Eigen::Index i = 0; i < n; ++i) max_neg_diag = std::max(max_neg_diag, -A(i, i));
  Scalar scale = A.cwiseAbs().maxCoeff();
  if (!(scale > 0)) scale = 1;
  const Scalar shift = max_neg_diag + scale;
  const MatrixX<Scalar> B = A + shift * MatrixX<Scalar>::Identity(n, n);

  PerronResult<Scalar> out;
  VectorX<Scalar> h = detail::power_iterate<Scalar>(B, opt, out.iterations);
  VectorX<Scalar> pi = detail::power_iterate<Scalar>(B.transpose(), opt, out.iterations);

  out.lambda = pi.dot(A * h) / pi.dot(h);
  if (n > 1) {
    // Two steps of shifted inverse iteration polish the power-iteration vectors.
    const MatrixX<Scalar> shifted = A - out.lambda * MatrixX<Scalar>::Identity(n, n);
    const Eigen::PartialPivLU<MatrixX<Scalar>> lu(shifted), lu_t(shifted.transpose());
    auto polish = [](const Eigen::PartialPivLU<MatrixX<Scalar>>& f, VectorX<Scalar>& v) {
      for (int k = 0; k < 2; ++k) {
        VectorX<Scalar> w = f.solve(v);
        w /= w.sum();
        if (!w.allFinite() || !(w.array() > 0).all()) return;
        v = std::move(w);
      }
    };
    polish(lu, h);
    polish(lu_t, pi);
  }
  pi /= pi.sum();
  h /= pi.dot(h);
  out.lambda = pi.dot(A * h) / pi.dot(h);

  const VectorX<Scalar> Ah = A * h;
  const RowVectorX<Scalar> piA = pi.transpose() * A;
  const VectorX<Scalar> absAh = A.cwiseAbs() * h;
  const RowVectorX<Scalar> abspiA = pi.transpose() * A.cwiseAbs();
  Scalar residual = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto relative = [](Scalar num, Scalar den) { return den > 0 ? num / den : num; };
    const Scalar rr = relative(std::abs(Ah(i) - out.lambda * h(i)), absAh(i) + std::abs(out.lambda) * h(i));
    const Scalar rl = relative(std::abs(piA(i) - out.lambda * pi(i)), abspiA(i) + std::abs(out.lambda) * pi(i));
    residual = std::max({residual, rr, rl});
  }
  out.residual = residual;
  out.left = std::move(pi);
  out.right = std::move(h);

  const bool positive = (out.left.array() > 0).all() && (out.right.array() > 0).all();
  if (out.iterations >= opt.max_iterations || !(residual < Scalar(opt.residual_tolerance)) || !positive) {
    std::ostringstream os;
    os << "perron: power iteration did not converge (residual " << residual << " after "
       << out.iterations << " iterations)";
    throw SpectralError(os.str());
  }
  return out;
}

// e^{tA} by Taylor series with scaling and squaring.
template <typename Derived>
MatrixX<typename Derived::Scalar> matrix_exponential(const Eigen::MatrixBase<Derived>& A,
                                                     typename Derived::Scalar t) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = A.rows();
  if (t < 0) throw std::invalid_argument("matrix_exponential: t must be nonnegative");
  const MatrixX<Scalar> I = MatrixX<Scalar>::Identity(n, n);
  MatrixX<Scalar> X = t * A;
  const Scalar norm = X.cwiseAbs().colwise().sum().maxCoeff();
  if (!(norm > 0)) return I;

  int squarings = 0;
  Scalar scaled = norm;
  while (scaled >= Scalar(0.5)) {
    scaled /= 2;
    ++squarings;
  }
  X /= std::ldexp(Scalar(1), squarings);

  MatrixX<Scalar> sum = I;
  MatrixX<Scalar> term = I;
  for (int k = 1; k < 200; ++k) {
    term = (term * X) / Scalar(k);
    sum += term;
    if (term.cwiseAbs().colwise().sum().maxCoeff() < Scalar(1e-18)) break;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

template <typename Scalar>
bool on_simplex(const VectorX<Scalar>& nu, Scalar tol = Scalar(1e-10)) {
  return nu.size() > 0 && (nu.array() >= -tol).all() && std::abs(nu.sum() - Scalar(1)) <= tol;
}

// Euclidean projection onto the probability simplex.
template <typename Scalar>
VectorX<Scalar> project_to_simplex(const VectorX<Scalar>& y) {
  const Eigen::Index n = y.size();
  std::vector<Scalar> u(y.data(), y.data() + n);
  std::sort(u.begin(), u.end(), std::greater<Scalar>());
  Scalar cumulative = 0, theta = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cumulative += u[static_cast<std::size_t>(k)];
    const Scalar candidate = (cumulative - 1) / Scalar(k + 1);
    if (u[static_cast<std::size_t>(k)] - candidate > 0) theta = candidate;
  }
  return (y.array() - theta).cwiseMax(Scalar(0)).matrix();
}

template <typename Scalar>
Scalar tv_distance(const VectorX<Scalar>& p, const VectorX<Scalar>& q) {
  return Scalar(0.5) * (p - q).cwiseAbs().sum();
}

struct RateFunctionOptions {
  int restarts = 20;
  int max_iterations = 500;
  std::uint64_t seed = 0x5eedULL;
};

template <typename Scalar>
struct RateFunctionResult {
  Scalar value{};
  VectorX<Scalar> v;  // maximizing (or asymptotically maximizing) positive vector, v_0 = 1
};

namespace detail {

// Objective -sum_i nu_i (Gv)_i / v_i at v = exp(w).
template <typename Scalar>
Scalar rate_objective(const MatrixX<Scalar>& G, const VectorX<Scalar>& nu, const VectorX<Scalar>& w) {
  const Eigen::Index n = G.rows();
  Scalar f = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (nu(i) == 0) continue;
    Scalar row = G(i, i);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i && G(i, j) != 0) row += G(i, j) * std::exp(w(j) - w(i));
    }
    f -= nu(i) * row;
  }
  return f;
}

// Damped Newton ascent on the concave objective in log coordinates, w_0 = 0.
template <typename Scalar>
RateFunctionResult<Scalar> rate_ascent(const MatrixX<Scalar>& G, const VectorX<Scalar>& nu, VectorX<Scalar> w,
                                       int max_iterations) {
  const Eigen::Index n = G.rows();
  const Eigen::Index m = n - 1;
  Scalar f = rate_objective(G, nu, w);
  const Scalar scale = 1 + G.diagonal().cwiseAbs().maxCoeff();

  for (int it = 0; it < max_iterations; ++it) {
    VectorX<Scalar> grad = VectorX<Scalar>::Zero(n);
    MatrixX<Scalar> neg_hess = MatrixX<Scalar>::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (nu(i) == 0) continue;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i || G(i, j) == 0) continue;
        const Scalar c = nu(i) * G(i, j) * std::exp(w(j) - w(i));
        grad(j) -= c;
        grad(i) += c;
        neg_hess(i, i) += c;
        neg_hess(j, j) += c;
        neg_hess(i, j) -= c;
        neg_hess(j, i) -= c;
      }
    }
    const VectorX<Scalar> g = grad.tail(m);
    if (g.cwiseAbs().maxCoeff() < Scalar(1e-15) * scale) break;

    MatrixX<Scalar> H = neg_hess.bottomRightCorner(m, m);
    const Scalar damping = Scalar(1e-12) * (1 + H.diagonal().maxCoeff());
    H.diagonal().array() += damping;
    VectorX<Scalar> step = H.ldlt().solve(g);
    if (!step.allFinite()) step = g;

    Scalar alpha = 1;
    bool improved = false;
    for (int ls = 0; ls < 60; ++ls) {
      VectorX<Scalar> trial = w;
      trial.tail(m) += alpha * step;
      const Scalar ft = rate_objective(G, nu, trial);
      if (std::isfinite(ft) && ft >= f + Scalar(1e-4) * alpha * g.dot(step)) {
        improved = ft > f;
        w = std::move(trial);
        f = ft;
        break;
      }
      alpha /= 2;
    }
    if (!improved) break;
  }
  return {f, w.array().exp().matrix()};
}

}  // namespace detail

// Donsker-Varadhan level-2 rate function
//   I_G(nu) = sup_{v > 0} [ -sum_i nu_i (Gv)_i / v_i ].
template <typename Scalar>
RateFunctionResult<Scalar> rate_function_argmax(const MatrixX<Scalar>& G, const VectorX<Scalar>& nu,
                                                const RateFunctionOptions& opt = {},
                                                const VectorX<Scalar>* warm_start = nullptr) {
  const Eigen::Index n = G.rows();
  if (G.cols() != n || nu.size() != n) throw std::invalid_argument("rate_function: dimension mismatch");
  if (!on_simplex<Scalar>(nu)) throw std::invalid_argument("rate_function: nu is not a probability vector");
  const Scalar row_tol = Scalar(1e-10) * (1 + G.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(G.row(i).sum()) > row_tol) throw std::invalid_argument("rate_function: G rows must sum to 0");
  }
  const VectorX<Scalar> nu_clean = nu.cwiseMax(Scalar(0)) / nu.cwiseMax(Scalar(0)).sum();
  if (n == 1) return {Scalar(0), VectorX<Scalar>::Ones(1)};

  VectorX<Scalar> w0 = VectorX<Scalar>::Zero(n);
  if (warm_start) {
    w0 = warm_start->array().log().matrix();
    w0.array() -= w0(0);
    if (!w0.allFinite()) w0.setZero();
  }
  RateFunctionResult<Scalar> best = detail::rate_ascent(G, nu_clean, w0, opt.max_iterations);

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 2.0);
  for (int r = 1; r < opt.restarts; ++r) {
    VectorX<Scalar> w(n);
    w(0) = 0;
    for (Eigen::Index k = 1; k < n; ++k) w(k) = Scalar(normal(rng));
    auto candidate = detail::rate_ascent(G, nu_clean, w, opt.max_iterations);
    if (candidate.value > best.value) best = std::move(candidate);
  }
  best.value = std::max(best.value, Scalar(0));
  return best;
}

template <typename Scalar>
Scalar rate_function(const MatrixX<Scalar>& G, const VectorX<Scalar>& nu, const RateFunctionOptions& opt = {}) {
  return rate_function_argmax(G, nu, opt).value;
}

// Stationary distribution of an irreducible generator (left null vector).
template <typename Scalar>
VectorX<Scalar> stationary_distribution(const MatrixX<Scalar>& G) {
  const Eigen::Index n = G.rows();
  MatrixX<Scalar> system(n + 1, n);
  system.topRows(n) = G.transpose();
  system.row(n).setOnes();
  VectorX<Scalar> rhs = VectorX<Scalar>::Zero(n + 1);
  rhs(n) = 1;
  return system.colPivHouseholderQr().solve(rhs);
}

}  // namespace mtbp
