#include <doctest.h>

#include <sstream>

#include "mtbp/tree_io.hpp"
#include "support.hpp"

using namespace mtbp;

namespace {

void check_same(const FamilyTree& a, const FamilyTree& b) {
  CHECK(a.horizon == b.horizon);
  CHECK(a.root_type == b.root_type);
  CHECK(a.num_types == b.num_types);
  CHECK(a.extinct_at == b.extinct_at);
  CHECK(a.capped_at == b.capped_at);
  REQUIRE(a.size() == b.size());
  for (Id id = 0; id < a.size(); ++id) {
    CHECK(a[id].parent == b[id].parent);
    CHECK(a[id].type == b[id].type);
    CHECK(a[id].birth == b[id].birth);
    CHECK(a[id].end == b[id].end);
    CHECK(a[id].fate == b[id].fate);
    if (a[id].fate == Fate::split) {
      CHECK(a[id].first_child == b[id].first_child);
      CHECK(a[id].num_children == b[id].num_children);
    }
  }
}

}  // namespace

TEST_SUITE("tree_io") {
  TEST_CASE("forward trees round trip losslessly") {
    for (const char* name : {"m2", "m3"}) {
      const auto m = test::load(name);
      for (std::uint64_t k = 0; k < 20; ++k) {
        Engine rng = substream(1, k, StreamTag::forward);
        const auto tree = simulate(m, TypeIndex(0), 3.0, k % 2 ? 15 : kDefaultCap, rng);
        std::stringstream ss;
        write_tree(ss, tree);
        check_same(tree, read_tree(ss));
      }
    }
  }

  TEST_CASE("biased trees keep their trunk") {
    const auto m = test::load("m2");
    Engine rng(4);
    const auto b = simulate_biased_tree(m, spectral_data(m), BiasVariant::h_biased, TypeIndex(1), 2.0, kDefaultCap, rng);
    std::stringstream ss;
    write_tree(ss, b);
    CHECK(ss.str().find("\nT:") != std::string::npos);
    const auto back = read_biased_tree(ss);
    check_same(b.tree, back.tree);
    CHECK(back.trunk_ids == b.trunk_ids);
  }

  TEST_CASE("dump format") {
    FamilyTree t;
    t.num_types = 1;
    t.horizon = 1.0;
    t.individuals = {Individual{kNoParent, TypeIndex(0), 0.0, 0.5, Fate::split, 1, 2},
                     Individual{0, TypeIndex(0), 0.5, 1.0, Fate::boundary, 0, 0},
                     Individual{0, TypeIndex(0), 0.5, 0.75, Fate::dead, 0, 0}};
    std::ostringstream os;
    write_tree(os, t);
    CHECK(os.str() ==
          "# horizon=1 root=0 types=1 extinct_at=- capped_at=-\n"
          "0 - 0 0 0.5 S:1,2\n"
          "1 0 0 0.5 1 B\n"
          "2 0 0 0.5 0.75 D\n");
  }

  TEST_CASE("malformed dumps are rejected") {
    std::istringstream empty("");
    CHECK_THROWS_AS(read_tree(empty), QueryError);
    std::istringstream no_header("0 - 0 0 1 B\n");
    CHECK_THROWS_AS(read_tree(no_header), QueryError);
    std::istringstream bad_fate("# horizon=1 root=0 types=1\n0 - 0 0 1 X\n");
    CHECK_THROWS_AS(read_tree(bad_fate), QueryError);
    std::istringstream gap("# horizon=1 root=0 types=1\n0 - 0 0 0.5 S:1,3\n");
    CHECK_THROWS_AS(read_tree(gap), QueryError);
  }
}
