#include <doctest.h>

#include <random>

#include "mtbp/spectral.hpp"
#include "support.hpp"

using namespace mtbp;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

const OffspringAtom* find_atom(const OffspringLaw& law, std::vector<int> counts) {
  for (const auto& a : law.atoms)
    if (a.counts == counts) return &a;
  return nullptr;
}

std::vector<BranchingModel> irreducible_models(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<BranchingModel> out;
  while (static_cast<int>(out.size()) < count) {
    auto m = test::random_model(2 + out.size() % 3, rng, 0.3);
    if (validate_model(m).ok()) out.push_back(std::move(m));
  }
  return out;
}

}  // namespace

TEST_SUITE("spectral") {
  TEST_CASE("Perron data of the reference models") {
    const auto s1 = spectral_data(test::load("m1"));
    CHECK(std::abs(s1.lambda - 1.0) < 1e-12);
    CHECK(std::abs(s1.pi[0] - 1.0) < 1e-12);
    CHECK(std::abs(s1.h[0] - 1.0) < 1e-12);
    CHECK(std::abs(s1.alpha[0] - 1.0) < 1e-12);

    const auto s2 = spectral_data(test::load("m2"));
    CHECK(std::abs(s2.lambda - std::sqrt(0.5)) < 1e-9);
    CHECK(std::abs(s2.pi[0] - 0.585786437626905) < 1e-9);
    CHECK(std::abs(s2.h[1] - 1.207106781186548) < 1e-9);
    CHECK(std::abs(s2.alpha[0] - 0.5) < 1e-9);
    CHECK(std::abs(s2.alpha[1] - 0.5) < 1e-9);

    const auto s3 = spectral_data(test::load("m3"));
    CHECK(std::abs(s3.lambda - 0.5) < 1e-12);
  }

  TEST_CASE("normalization and eigen-relations on random models") {
    for (const auto& m : irreducible_models(100, 41)) {
      const auto s = spectral_data(m);
      const Matrix A = mean_data(m).A;
      CHECK(std::abs(s.pi.sum() - 1.0) < 1e-12);
      CHECK(std::abs(s.pi.dot(s.h) - 1.0) < 1e-12);
      CHECK(std::abs(s.alpha.sum() - 1.0) < 1e-12);
      CHECK((s.alpha - s.pi.cwiseProduct(s.h)).cwiseAbs().maxCoeff() == 0.0);
      CHECK((s.pi.array() > 0).all());
      CHECK((s.h.array() > 0).all());
      CHECK(s.residual < 1e-10);
      CHECK(((A * s.h) - s.lambda * s.h).cwiseAbs().maxCoeff() < 1e-9 * (1 + std::abs(s.lambda)) * s.h.maxCoeff());
    }
  }

  TEST_CASE("retrospective generator: both forms agree and alpha is stationary") {
    std::vector<BranchingModel> models{test::load("m1"), test::load("m2"), test::load("m3")};
    for (auto& m : irreducible_models(50, 43)) models.push_back(std::move(m));
    for (const auto& m : models) {
      const auto s = spectral_data(m);
      const auto chain = retrospective_generator(m, s);
      const Matrix conj = conjugated_generator(mean_data(m), s);
      CHECK(max_abs(chain.G - conj) < 1e-12 * std::max(1.0, max_abs(conj)));
      CHECK((s.alpha.transpose() * chain.G).cwiseAbs().maxCoeff() < 1e-10);
      // Row sums only vanish up to the eigen-residual, which round-off keeps near 1e-12.
      CHECK(chain.G.rowwise().sum().cwiseAbs().maxCoeff() < 1e-11 * std::max(1.0, max_abs(chain.G)));
      CHECK((chain.jump_probs.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-11);
      CHECK((chain.holding_rates - (m.split_rates.array() + s.lambda).matrix()).cwiseAbs().maxCoeff() < 1e-15);
    }
  }

  TEST_CASE("retrospective chain of the two-type model") {
    const auto m = test::load("m2");
    const auto s = spectral_data(m);
    const auto chain = retrospective_generator(m, s);
    const double r = std::sqrt(0.5);
    CHECK(chain.G(0, 0) == doctest::Approx(-r).epsilon(1e-9));
    CHECK(chain.G(0, 1) == doctest::Approx(r).epsilon(1e-9));
    CHECK(chain.G(1, 0) == doctest::Approx(r).epsilon(1e-9));
    CHECK(chain.holding_rates[0] == doctest::Approx(1 + r).epsilon(1e-9));
    CHECK(chain.jump_probs(0, 0) == doctest::Approx(0.585786).epsilon(1e-6));
    CHECK(chain.jump_probs(0, 1) == doctest::Approx(0.414214).epsilon(1e-6));
    // Merging self-jumps leaves exit rate (a_1 + lambda)(1 - p_11).
    CHECK(chain.holding_rates[0] * (1 - chain.jump_probs(0, 0)) == doctest::Approx(r).epsilon(1e-9));

    const auto one = retrospective_generator(test::load("m1"), spectral_data(test::load("m1")));
    CHECK(one.G(0, 0) == doctest::Approx(0.0).scale(1.0));
    CHECK(one.holding_rates[0] == doctest::Approx(2.0));
    CHECK(retrospective_generator(test::load("m3"), spectral_data(test::load("m3"))).holding_rates[0] ==
          doctest::Approx(1.5));
  }

  TEST_CASE("time reversal and mutation-only generator") {
    std::vector<BranchingModel> models{test::load("m1"), test::load("m2"), test::load("m3")};
    for (auto& m : irreducible_models(50, 47)) models.push_back(std::move(m));
    for (const auto& m : models) {
      const auto s = spectral_data(m);
      const auto mean = mean_data(m);
      const auto chain = retrospective_generator(m, s);
      const auto d = derived_generators(m, s);
      CHECK(max_abs(d.G_rev - reversed_from_chain(chain.G, s.alpha)) < 1e-12 * std::max(1.0, max_abs(d.G_rev)));
      CHECK((s.alpha.transpose() * d.G_rev).cwiseAbs().maxCoeff() < 1e-10);
      CHECK(d.G_tilde.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, max_abs(d.G_tilde)));
      Matrix recomposed = d.G_tilde;
      recomposed.diagonal() += mean.r;
      CHECK(max_abs(recomposed - mean.A) < 1e-12 * std::max(1.0, max_abs(mean.A)));
    }
    const auto m2 = test::load("m2");
    const auto s2 = spectral_data(m2);
    const auto d2 = derived_generators(m2, s2);
    CHECK(max_abs(d2.G_rev - retrospective_generator(m2, s2).G) < 1e-9);
    Matrix expected(2, 2);
    expected << -0.5, 0.5, 1, -1;
    CHECK(max_abs(d2.G_tilde - expected) < 1e-15);
    CHECK(derived_generators(test::load("m1"), spectral_data(test::load("m1"))).G_tilde(0, 0) == 0.0);
  }

  TEST_CASE("biased offspring laws") {
    const auto m2 = test::load("m2");
    const auto b2 = biased_laws(m2, spectral_data(m2));
    CHECK(find_atom(b2.p_hat[0], {2, 0})->prob == doctest::Approx(0.585786).epsilon(1e-6));
    CHECK(find_atom(b2.p_hat[0], {0, 1})->prob == doctest::Approx(0.414214).epsilon(1e-6));
    CHECK(find_atom(b2.p_hat[1], {1, 1})->prob == doctest::Approx(1.0));

    const auto m1 = test::load("m1");
    const auto b1 = biased_laws(m1, spectral_data(m1));
    CHECK(b1.c[0] == doctest::Approx(2.0));
    CHECK(find_atom(b1.p_hat[0], {2})->prob == doctest::Approx(1.0));

    const auto m3 = test::load("m3");
    const auto b3 = biased_laws(m3, spectral_data(m3));
    CHECK(find_atom(b3.p_hat[0], {0}) == nullptr);
    CHECK(find_atom(b3.p_hat[0], {2})->prob == doctest::Approx(1.0));
    CHECK(find_atom(b3.p_tilde[0], {2})->prob == doctest::Approx(1.0));
  }

  TEST_CASE("biased laws are normalized and single-type variants coincide") {
    std::vector<BranchingModel> models{test::load("m3")};
    for (auto& m : irreducible_models(50, 53)) models.push_back(std::move(m));
    for (const auto& m : models) {
      const auto b = biased_laws(m, spectral_data(m));
      for (std::size_t i = 0; i < m.num_types(); ++i) {
        double hat = 0.0, tilde = 0.0;
        for (const auto& a : b.p_hat[i].atoms) {
          hat += a.prob;
          CHECK(a.total() > 0);
        }
        for (const auto& a : b.p_tilde[i].atoms) tilde += a.prob;
        CHECK(std::abs(hat - 1.0) < 1e-11);
        CHECK(std::abs(tilde - 1.0) < 1e-12);
        CHECK(b.c[static_cast<Eigen::Index>(i)] > 0.0);
      }
    }
    const auto m3 = test::load("m3");
    const auto b3 = biased_laws(m3, spectral_data(m3));
    CHECK(b3.c[0] == doctest::Approx(mean_data(m3).row_means[0]));
  }

  TEST_CASE("size-biased law rates") {
    const auto m2 = test::load("m2");
    const auto s2 = spectral_data(m2);
    const auto h = size_biased_law(m2, s2, BiasVariant::h_biased);
    CHECK(h.trunk_rates[0] == doctest::Approx(1 + s2.lambda).epsilon(1e-12));
    CHECK(h.trunk_rates[1] == doctest::Approx(1 + s2.lambda).epsilon(1e-12));
    const auto u = size_biased_law(m2, s2, BiasVariant::uniform);
    CHECK(u.trunk_rates[0] == doctest::Approx(1.5));
    CHECK(u.trunk_rates[1] == doctest::Approx(2.0));
  }

  TEST_CASE("rate function wrapper on the retrospective chain") {
    const auto m2 = test::load("m2");
    const auto chain = retrospective_generator(m2, spectral_data(m2));
    Vector nu(2);
    nu << 0.7, 0.3;
    CHECK(std::abs(rate_function(chain.G, nu) - 0.059033) < 1e-6);
    nu << 0.5, 0.5;
    CHECK(rate_function(chain.G, nu) < 1e-10);
  }

  TEST_CASE("variational principle") {
    const auto m2 = test::load("m2");
    const auto s2 = spectral_data(m2);
    const auto d = derived_generators(m2, s2);
    Vector half(2);
    half << 0.5, 0.5;
    CHECK(half.dot(mean_data(m2).r) - rate_function(d.G_tilde, half) == doctest::Approx(0.707107).epsilon(1e-6));

    std::vector<BranchingModel> models{test::load("m1"), m2, test::load("m3")};
    for (auto& m : irreducible_models(12, 59)) models.push_back(std::move(m));
    for (const auto& m : models) {
      const auto s = spectral_data(m);
      const auto v = variational_lambda(m, s);
      CHECK(std::abs(v.value - s.lambda) < 1e-6);
      CHECK(tv_distance<double>(v.argmax, s.alpha) < 1e-4);
    }
  }
}
