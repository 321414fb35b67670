#include <doctest.h>

#include "mtbp/biased_sim.hpp"
#include "mtbp/estimators.hpp"
#include "mtbp/linalg.hpp"
#include "support.hpp"

using namespace mtbp;

namespace {

BiasedTree biased_for(const BranchingModel& m, BiasVariant v, double horizon, std::uint64_t k,
                      std::size_t cap = kDefaultCap) {
  Engine rng = substream(kDefaultSeed, k, StreamTag::trunk);
  return simulate_biased_tree(m, spectral_data(m), v, TypeIndex(0), horizon, cap, rng);
}

std::size_t descendants_alive(const FamilyTree& tree, Id root, double t) {
  std::size_t count = 0;
  std::vector<Id> stack{root};
  while (!stack.empty()) {
    const Id y = stack.back();
    stack.pop_back();
    const auto& ind = tree[y];
    if (ind.alive_at(t)) {
      ++count;
    } else if (ind.fate == Fate::split && ind.end <= t) {
      for (Id c = ind.first_child; c < ind.first_child + ind.num_children; ++c) stack.push_back(c);
    }
  }
  return count;
}

}  // namespace

TEST_SUITE("biased") {
  TEST_CASE("trunk is a root-to-boundary path that never dies") {
    for (const char* name : {"m1", "m2", "m3"}) {
      const auto m = test::load(name);
      for (auto v : {BiasVariant::h_biased, BiasVariant::uniform}) {
        for (std::uint64_t k = 0; k < 100; ++k) {
          CAPTURE(name);
          const auto b = biased_for(m, v, 3.0, k);
          REQUIRE_FALSE(b.tree.capped());
          REQUIRE(!b.trunk_ids.empty());
          CHECK(b.trunk_ids.front() == 0);
          for (std::size_t n = 1; n < b.trunk_ids.size(); ++n) CHECK(b.tree[b.trunk_ids[n]].parent == b.trunk_ids[n - 1]);
          for (Id id : b.trunk_ids) CHECK(b.tree[id].fate != Fate::dead);
          const auto& last = b.tree[b.trunk_ids.back()];
          CHECK(last.fate == Fate::boundary);
          CHECK(last.end == 3.0);
          CHECK_FALSE(b.tree.extinct_at.has_value());

          const auto path = b.trunk_path();
          double total = 0.0;
          for (const auto& s : path.segments) total += s.sojourn;
          CHECK(total == doctest::Approx(3.0).epsilon(1e-12));
          CHECK(path.segments.size() == b.trunk_ids.size());
        }
      }
    }
  }

  TEST_CASE("zero horizon trunk") {
    const auto b = biased_for(test::load("m2"), BiasVariant::h_biased, 0.0, 1);
    CHECK(b.trunk_path().segments.empty());
    CHECK(b.trunk_path().total == 0.0);
    Engine rng(1);
    const auto chain = jump_chain(retrospective_generator(test::load("m2"), spectral_data(test::load("m2"))));
    CHECK(simulate_trunk(chain, TypeIndex(0), 0.0, rng).segments.empty());
  }

  TEST_CASE("single-type trunk splits at rate a + lambda") {
    const auto m = test::load("m1");
    const BiasedSimulator sim(m, size_biased_law(m, spectral_data(m), BiasVariant::h_biased));
    std::vector<std::optional<double>> gaps;
    Engine rng = substream(3, 0, StreamTag::trunk);
    while (gaps.size() < 20000) {
      const auto path = sim.simulate_spine(TypeIndex(0), 50.0, rng);
      for (std::size_t i = 0; i + 1 < path.segments.size(); ++i) gaps.push_back(path.segments[i].sojourn);
    }
    const auto est = summarize(gaps);
    CHECK(std::abs(est.mean - 0.5) < 4 * est.std_error);
    CHECK(est.std_error * std::sqrt(double(est.n)) == doctest::Approx(0.5).epsilon(0.03));

    const auto b = biased_for(m, BiasVariant::h_biased, 2.0, 4);
    for (std::size_t n = 0; n + 1 < b.trunk_ids.size(); ++n) CHECK(b.tree[b.trunk_ids[n]].num_children == 2);
  }

  TEST_CASE("h-biased trunk offspring and successor choice") {
    const auto m = test::load("m2");
    std::size_t type1_splits = 0, double_one = 0, wrong_successor = 0;
    for (std::uint64_t k = 0; k < 3000; ++k) {
      const auto b = biased_for(m, BiasVariant::h_biased, 3.0, k);
      for (std::size_t n = 0; n + 1 < b.trunk_ids.size(); ++n) {
        const auto& ind = b.tree[b.trunk_ids[n]];
        if (ind.type != TypeIndex(0)) continue;
        ++type1_splits;
        if (ind.num_children == 2) {
          ++double_one;
          if (b.tree[b.trunk_ids[n + 1]].type != TypeIndex(0)) ++wrong_successor;
        }
      }
    }
    const double p = double(double_one) / double(type1_splits);
    const double se = std::sqrt(p * (1 - p) / double(type1_splits));
    CHECK(std::abs(p - 0.585786) < 4 * se);
    CHECK(wrong_successor == 0);
  }

  TEST_CASE("bushes follow the forward law") {
    const auto m = test::load("m2");
    const double target = matrix_exponential(mean_data(m).A, 1.0).row(0).sum();
    std::vector<std::optional<double>> sizes;
    for (std::uint64_t k = 0; sizes.size() < 4000; ++k) {
      const auto b = biased_for(m, BiasVariant::h_biased, 3.0, k);
      for (std::size_t n = 0; n + 1 < b.trunk_ids.size(); ++n) {
        const auto& ind = b.tree[b.trunk_ids[n]];
        if (ind.end > 2.0) break;
        for (Id c = ind.first_child; c < ind.first_child + ind.num_children; ++c) {
          if (c == b.trunk_ids[n + 1] || b.tree[c].type != TypeIndex(0)) continue;
          sizes.push_back(double(descendants_alive(b.tree, c, ind.end + 1.0)));
        }
      }
    }
    const auto est = summarize(sizes);
    CHECK(std::abs(est.mean - target) < 4 * est.std_error);
  }

  TEST_CASE("jump chains") {
    const auto m = test::load("m2");
    const auto u = uniform_jump_chain(m);
    CHECK(u.holding_rates[0] == doctest::Approx(1.5));
    CHECK(u.holding_rates[1] == doctest::Approx(2.0));
    CHECK(u.jump_probs(0, 0) == doctest::Approx(2.0 / 3.0));
    CHECK(u.jump_probs(1, 1) == doctest::Approx(0.5));
    CHECK((u.jump_probs.rowwise().sum().array() - 1).abs().maxCoeff() < 1e-15);
  }

  TEST_CASE("marginal trunk sojourns and merged exit rates") {
    const auto m = test::load("m2");
    const auto s = spectral_data(m);
    const auto chain = jump_chain(retrospective_generator(m, s));
    Engine rng = substream(5, 0, StreamTag::trunk);
    PathStatistics raw(2), merged(2);
    while (raw.exits.sum() < 2e5) {
      const auto path = simulate_trunk(chain, TypeIndex(0), 1000.0, rng);
      raw += path_statistics(path, 2);
      merged += path_statistics(coalesce(path), 2);
    }
    const Vector mean_sojourn = raw.holding.cwiseQuotient(raw.exits);
    CHECK(mean_sojourn[0] == doctest::Approx(0.585786).epsilon(0.01));
    CHECK(mean_sojourn[1] == doctest::Approx(0.585786).epsilon(0.01));
    CHECK(merged.exit_rates()[0] == doctest::Approx(std::sqrt(0.5)).epsilon(0.01));
  }

  TEST_CASE("uniform-successor spine has the mutation-only generator") {
    const auto m = test::load("m2");
    const auto s = spectral_data(m);
    const BiasedSimulator sim(m, size_biased_law(m, s, BiasVariant::uniform));
    const Matrix Gt = derived_generators(m, s).G_tilde;
    Engine rng = substream(6, 0, StreamTag::trunk);
    PathStatistics merged(2);
    for (int k = 0; k < 100; ++k) merged += path_statistics(coalesce(sim.simulate_spine(TypeIndex(0), 1000.0, rng)), 2);
    CHECK(merged.exit_rates()[0] == doctest::Approx(-Gt(0, 0)).epsilon(0.02));
    CHECK(merged.exit_rates()[1] == doctest::Approx(-Gt(1, 1)).epsilon(0.02));
    const Vector occupation = merged.holding / merged.holding.sum();
    CHECK(tv_distance<double>(occupation, stationary_distribution<double>(Gt)) < 0.01);
  }

  TEST_CASE("mutation chain") {
    Engine rng(9);
    const auto one = simulate_mutation_chain(Matrix::Zero(1, 1), TypeIndex(0), 5.0, rng);
    REQUIRE(one.segments.size() == 1);
    CHECK(one.segments[0].sojourn == 5.0);

    const auto m = test::load("m2");
    const auto s = spectral_data(m);
    const auto G = retrospective_generator(m, s).G;
    const auto path = simulate_mutation_chain(G, TypeIndex(0), 1e4, rng);
    CHECK(tv_distance<double>(trunk_occupation(path, 2), s.alpha) < 0.01);
    for (std::size_t i = 0; i + 1 < path.segments.size(); ++i) CHECK(path.segments[i].type != path.segments[i + 1].type);
    const auto rev = simulate_mutation_chain(derived_generators(m, s).G_rev, TypeIndex(1), 1e4, rng);
    CHECK(tv_distance<double>(trunk_occupation(rev, 2), s.alpha) < 0.01);
  }

  TEST_CASE("general weight vectors") {
    const auto m = test::load("m2");
    Vector gamma(2);
    gamma << 1.0, 3.0;
    const auto law = size_biased_law(m, gamma);
    for (const auto& l : law.laws) {
      double total = 0.0;
      for (const auto& a : l.atoms) total += a.prob;
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
    // a_1 <m_1, gamma> / gamma_1 = 1 * (1 + 1.5) / 1.
    CHECK(law.trunk_rates[0] == doctest::Approx(2.5));
    const BiasedSimulator sim(m, law);
    Engine rng(3);
    const auto b = sim.simulate(TypeIndex(0), 2.0, kDefaultCap, rng);
    CHECK(b.trunk_ids.front() == 0);
  }

  TEST_CASE("biased trees are reproducible and respect the cap") {
    const auto m = test::load("m1");
    const auto a = biased_for(m, BiasVariant::h_biased, 3.0, 5);
    const auto b = biased_for(m, BiasVariant::h_biased, 3.0, 5);
    CHECK(a.trunk_ids == b.trunk_ids);
    CHECK(a.tree.size() == b.tree.size());
    const auto capped = biased_for(m, BiasVariant::h_biased, 30.0, 5, 100);
    CHECK(capped.tree.capped());
  }
}
