#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <random>

#include "mtbp/linalg.hpp"

using namespace mtbp;

namespace {

// Principal eigen-triple of [[a, b], [c, d]] with b, c > 0, normalized like perron_eigen.
struct Oracle2 {
  double lambda;
  Vector pi, h;
};

Oracle2 oracle2(const Matrix& A) {
  const double a = A(0, 0), b = A(0, 1), c = A(1, 0), d = A(1, 1);
  const double lambda = 0.5 * (a + d) + std::sqrt(0.25 * (a - d) * (a - d) + b * c);
  Vector h(2), pi(2);
  h << b, lambda - a;
  pi << c, lambda - a;
  pi /= pi.sum();
  h /= pi.dot(h);
  return {lambda, pi, h};
}

Matrix random_generator(Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.1, 2.0);
  Matrix G(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) G(i, j) = i == j ? 0.0 : unif(rng);
    G(i, i) = -G.row(i).sum();
  }
  return G;
}

Vector random_simplex(Eigen::Index n, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(1.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v / v.sum();
}

double objective(const Matrix& G, const Vector& nu, const Vector& v) {
  return -(nu.array() * (G * v).array() / v.array()).sum();
}

}  // namespace

TEST_SUITE("linalg") {
  TEST_CASE("perron matches the analytic 2x2 eigen-triple") {
    Matrix A(2, 2);
    A << 0, 0.5, 1, 0;
    const auto p = perron_eigen(A);
    CHECK(p.lambda == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(p.left[0] == doctest::Approx(0.585786437626905).epsilon(1e-10));
    CHECK(p.left[1] == doctest::Approx(0.414213562373095).epsilon(1e-10));
    CHECK(p.right[0] == doctest::Approx(0.853553390593274).epsilon(1e-10));
    CHECK(p.right[1] == doctest::Approx(1.207106781186548).epsilon(1e-10));
    CHECK(p.residual < 1e-10);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> off(0.05, 3.0), diag(-3.0, 3.0);
    for (int k = 0; k < 200; ++k) {
      Matrix B(2, 2);
      B << diag(rng), off(rng), off(rng), diag(rng);
      const auto q = perron_eigen(B);
      const auto o = oracle2(B);
      CHECK(q.lambda == doctest::Approx(o.lambda).epsilon(1e-9));
      CHECK((q.left - o.pi).cwiseAbs().maxCoeff() < 1e-9);
      CHECK((q.right - o.h).cwiseAbs().maxCoeff() < 1e-9 * o.h.cwiseAbs().maxCoeff());
    }
  }

  TEST_CASE("perron works in extended precision") {
    Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> A(2, 2);
    A << 0, 0.5L, 1, 0;
    const auto p = perron_eigen(A);
    CHECK(std::abs(p.lambda - std::sqrt(0.5L)) < 1e-13L);
  }

  TEST_CASE("perron handles a zero matrix and rejects bad input") {
    const auto p = perron_eigen(Matrix::Zero(1, 1));
    CHECK(p.lambda == 0.0);
    CHECK(p.left[0] == 1.0);
    CHECK_THROWS_AS(perron_eigen(Matrix(2, 3)), SpectralError);
    Matrix reducible(2, 2);
    reducible << 1, 1, 0, 0;
    CHECK_THROWS_AS(perron_eigen(reducible), SpectralError);
  }

  TEST_CASE("matrix exponential of the two-type example") {
    Matrix A(2, 2);
    A << 0, 0.5, 1, 0;
    const Matrix E = matrix_exponential(A, 1.0);
    // A^2 = I/2 gives e^A = cosh(s) I + sinh(s)/s A with s = sqrt(1/2).
    const double s = std::sqrt(0.5);
    const Matrix closed = std::cosh(s) * Matrix::Identity(2, 2) + std::sinh(s) / s * A;
    CHECK((E - closed).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(E(0, 0) == doctest::Approx(1.2605918).epsilon(1e-7));
    CHECK(E(0, 1) == doctest::Approx(0.5427208).epsilon(1e-7));
    CHECK(E(1, 0) == doctest::Approx(1.0854416).epsilon(1e-7));
    Vector h(2);
    h << 0.853553390593274, 1.207106781186548;
    CHECK(E.row(0).dot(h) == doctest::Approx(1.7311044).epsilon(1e-7));
  }

  TEST_CASE("matrix exponential at t = 0 is exactly the identity") {
    std::mt19937_64 rng(5);
    const Matrix A = Matrix::Random(4, 4);
    CHECK(matrix_exponential(A, 0.0) == Matrix::Identity(4, 4));
    CHECK_THROWS_AS(matrix_exponential(A, -1.0), std::invalid_argument);
  }

  TEST_CASE("matrix exponential agrees with Eigen's Pade implementation") {
    std::srand(17);
    for (int k = 0; k < 100; ++k) {
      const Eigen::Index n = 1 + k % 5;
      const double t = 0.1 * (1 + k % 30);
      const Matrix A = Matrix::Random(n, n);
      const Matrix ours = matrix_exponential(A, t);
      const Matrix ref = (t * A).exp();
      const double scale = ref.cwiseAbs().maxCoeff();
      CHECK((ours - ref).cwiseAbs().maxCoeff() <= 1e-10 * scale);
    }
  }

  TEST_CASE("eigenvectors are invariant under the exponential") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> unif(0.0, 1.5);
    for (int k = 0; k < 20; ++k) {
      const Eigen::Index n = 2 + k % 3;
      Matrix A(n, n);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) A(i, j) = i == j ? unif(rng) - 1.0 : unif(rng) + 0.1;
      const auto p = perron_eigen(A);
      for (double t : {0.5, 1.0, 2.0}) {
        const Matrix E = matrix_exponential(A, t);
        const double g = std::exp(p.lambda * t);
        CHECK(((E * p.right) - g * p.right).cwiseAbs().maxCoeff() < 1e-8 * g * p.right.maxCoeff());
        CHECK(((p.left.transpose() * E).transpose() - g * p.left).cwiseAbs().maxCoeff() < 1e-8 * g);
      }
    }
  }

  TEST_CASE("simplex projection and total variation") {
    Vector y(3);
    y << 0.8, 0.6, -0.3;
    const Vector p = project_to_simplex<double>(y);
    CHECK(on_simplex<double>(p));
    CHECK(p[0] == doctest::Approx(0.6));
    CHECK(p[1] == doctest::Approx(0.4));
    CHECK(p[2] == 0.0);
    Vector q(3);
    q << 0.2, 0.3, 0.5;
    CHECK(project_to_simplex<double>(q).isApprox(q));
    CHECK(tv_distance<double>(p, q) == doctest::Approx(0.5));
  }

  TEST_CASE("two-state rate function matches its closed form") {
    Matrix G(2, 2);
    const double s = std::sqrt(0.5);
    G << -s, s, s, -s;
    Vector nu(2);
    nu << 0.7, 0.3;
    CHECK(rate_function<double>(G, nu) == doctest::Approx(0.059033).epsilon(1e-6 / 0.059033));

    std::mt19937_64 rng(21);
    for (int k = 0; k < 200; ++k) {
      const Matrix Q = random_generator(2, rng);
      const Vector v = random_simplex(2, rng);
      const double closed = std::pow(std::sqrt(v[0] * Q(0, 1)) - std::sqrt(v[1] * Q(1, 0)), 2);
      CHECK(rate_function<double>(Q, v) == doctest::Approx(closed).epsilon(1e-8).scale(1.0));
    }
  }

  TEST_CASE("three-state rate function agrees with a grid search over v") {
    std::mt19937_64 rng(23);
    for (int k = 0; k < 5; ++k) {
      const Matrix G = random_generator(3, rng);
      const Vector nu = random_simplex(3, rng);
      const double value = rate_function<double>(G, nu);
      double grid = -1e300;
      Vector v(3);
      v[0] = 1.0;
      for (double a = -6.0; a <= 6.0; a += 0.02) {
        for (double b = -6.0; b <= 6.0; b += 0.02) {
          v[1] = std::exp(a);
          v[2] = std::exp(b);
          grid = std::max(grid, objective(G, nu, v));
        }
      }
      CHECK(value >= grid - 1e-9);
      CHECK(value == doctest::Approx(grid).epsilon(1e-3).scale(1.0));
    }
  }

  TEST_CASE("rate function vanishes exactly at the stationary law") {
    std::mt19937_64 rng(29);
    for (int k = 0; k < 50; ++k) {
      const Matrix G = random_generator(2 + k % 3, rng);
      const Vector st = stationary_distribution<double>(G);
      CHECK((st.transpose() * G).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(rate_function<double>(G, st) < 1e-8);
      const Vector nu = random_simplex(G.rows(), rng);
      if (tv_distance<double>(nu, st) > 0.05) CHECK(rate_function<double>(G, nu) > 1e-8);
    }
    CHECK(rate_function<double>(Matrix::Zero(1, 1), Vector::Ones(1)) == 0.0);
  }

  TEST_CASE("rate function is convex along segments") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
      const Matrix G = random_generator(3, rng);
      const Vector a = random_simplex(3, rng), b = random_simplex(3, rng);
      const double w = unif(rng);
      const Vector mid = w * a + (1 - w) * b;
      const double lhs = rate_function<double>(G, mid);
      const double rhs = w * rate_function<double>(G, a) + (1 - w) * rate_function<double>(G, b);
      CHECK(lhs <= rhs + 1e-8);
      CHECK(lhs >= 0.0);
    }
  }

  TEST_CASE("rate function rejects invalid arguments") {
    Matrix G(2, 2);
    G << -1, 1, 1, -1;
    Vector bad(2);
    bad << 0.7, 0.4;
    CHECK_THROWS_AS(rate_function<double>(G, bad), std::invalid_argument);
    Matrix not_generator(2, 2);
    not_generator << -1, 2, 1, -1;
    Vector nu(2);
    nu << 0.5, 0.5;
    CHECK_THROWS_AS(rate_function<double>(not_generator, nu), std::invalid_argument);
    CHECK_THROWS_AS(rate_function<double>(G, Vector::Ones(3) / 3.0), std::invalid_argument);
  }
}
