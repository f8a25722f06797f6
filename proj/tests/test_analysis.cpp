#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace pfn;
using pfn_test::chain3;
using pfn_test::cyclic3;
using pfn_test::cyclic4;
using pfn_test::make_process;
using pfn_test::twisted4;

TEST_CASE("can_signal reads the component tables") {
  const ProcessTable w = cyclic4();
  CHECK(can_signal(w, 0, 1)); // vary x_1 at x_3 = x_4 = 0
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 4; ++i)
      if (i != j) CHECK(can_signal(w, j, i)); // complete digraph

  const ProcessTable oneway = make_process(
      ProcessShape::binary(2),
      {[](const StateTuple&) { return 0; }, [](const StateTuple& x) { return x[0]; }});
  CHECK(can_signal(oneway, 0, 1));
  CHECK_FALSE(can_signal(oneway, 1, 0));
  CHECK_THROWS_AS(can_signal(oneway, 1, 1), ShapeError);
}

TEST_CASE("signalling digraph has no self-loops") {
  std::mt19937 rng(3);
  for (int n = 2; n <= 4; ++n)
    for (int trial = 0; trial < 50; ++trial) {
      const SignallingDigraph g = signalling_digraph(pfn_test::random_binary_process(n, rng));
      for (auto [from, to] : g.edges) CHECK(from != to);
    }
}

TEST_CASE("conditional signalling reproduces the quadripartite switching pattern") {
  const ProcessTable w = cyclic4();
  // Pair {3,4} (indices 2,3), frozen regions 1,2 in rank order.
  CHECK(conditional_signalling(w, 2, 3, {0, 0}) == std::make_pair(2, 3));
  CHECK(conditional_signalling(w, 2, 3, {0, 1}) == std::make_pair(3, 2));
  CHECK(conditional_signalling(w, 2, 3, {1, 0}) == SignalDirection{});
  CHECK(conditional_signalling(w, 2, 3, {1, 1}) == SignalDirection{});
  CHECK_THROWS_AS(conditional_signalling(w, 2, 3, {0, 0, 0}), ShapeError);
}

TEST_CASE("two freezes of one pair can share a direction only in the twisted process") {
  const ProcessTable t = twisted4();
  // Pair {1,4} (indices 0,3): freezing (x_2,x_3) to (1,0) and (1,1) both
  // leave region 4 signalling to region 1.
  CHECK(conditional_signalling(t, 0, 3, {1, 0}) == std::make_pair(3, 0));
  CHECK(conditional_signalling(t, 0, 3, {1, 1}) == std::make_pair(3, 0));

  // The cyclic process never repeats a direction across the freezes of any
  // single pair.
  const ProcessTable c = cyclic4();
  for (int l = 0; l < 4; ++l)
    for (int j = l + 1; j < 4; ++j) {
      std::map<std::pair<int, int>, int> seen;
      for (const auto& row : signalling_table(c, l, j).rows)
        if (row.direction) ++seen[*row.direction];
      for (const auto& [direction, count] : seen) CHECK(count == 1);
    }
}

TEST_CASE("signalling tables enumerate freezes in rank order") {
  const ProcessTable w = cyclic4();
  const ConditionalSignallingTable table = signalling_table(w, 2, 3);
  REQUIRE(table.rows.size() == 4);
  CHECK(table.frozen_regions == std::vector<int>{0, 1});
  CHECK(table.rows[0].freeze == StateTuple{0, 0});
  CHECK(table.rows[1].freeze == StateTuple{0, 1});
  CHECK(table.rows[2].freeze == StateTuple{1, 0});
  CHECK(table.rows[3].freeze == StateTuple{1, 1});
  CHECK(table.rows[0].restriction_l == std::vector<int>{0, 0}); // a_3 = 0
  CHECK(table.rows[0].restriction_j == std::vector<int>{0, 1}); // a_4 = x_3
  CHECK(table.rows[1].restriction_l == std::vector<int>{1, 0}); // a_3 = x_4 + 1
  CHECK(table.rows[1].restriction_j == std::vector<int>{0, 0});

  // Pair {1,2} shows the same four-row pattern, as the cyclic relabelling
  // promises.
  const ConditionalSignallingTable mirrored = signalling_table(w, 0, 1);
  REQUIRE(mirrored.rows.size() == 4);
  CHECK(mirrored.rows[0].direction == std::make_pair(0, 1));
  CHECK(mirrored.rows[1].direction == std::make_pair(1, 0));
  CHECK_FALSE(mirrored.rows[2].direction.has_value());
  CHECK_FALSE(mirrored.rows[3].direction.has_value());

  // All-constant process: every row silent.
  const ProcessTable silent = make_process(ProcessShape::binary(3),
                                           {[](const StateTuple&) { return 1; },
                                            [](const StateTuple&) { return 0; },
                                            [](const StateTuple&) { return 1; }});
  for (const auto& row : signalling_table(silent, 0, 2).rows)
    CHECK_FALSE(row.direction.has_value());
}

TEST_CASE("two-way signalling raises an integrity error") {
  const ProcessTable broken = make_process(
      ProcessShape::binary(3),
      {
          [](const StateTuple& x) { return x[1]; },
          [](const StateTuple& x) { return x[0]; },
          [](const StateTuple&) { return 0; },
      });
  CHECK_THROWS_AS(conditional_signalling(broken, 0, 1, {0}), IntegrityError);
}

TEST_CASE("can_signal equals the union of table tags") {
  std::mt19937 rng(5);
  int valid_seen = 0;
  while (valid_seen < 20) {
    const ProcessTable w = pfn_test::random_binary_process(3, rng);
    if (!pairwise_validate(w).valid) continue;
    ++valid_seen;
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i) {
        if (i == j) continue;
        bool tagged = false;
        for (const auto& row : signalling_table(w, std::min(i, j), std::max(i, j)).rows)
          if (row.direction && row.direction->first == j && row.direction->second == i)
            tagged = true;
        CHECK(can_signal(w, j, i) == tagged);
      }
  }
}

TEST_CASE("causal diagnosis of the ordered chain") {
  const CausalDiagnosis d = causal_diagnosis(chain3());
  REQUIRE(d.fixed_order.has_value());
  CHECK(*d.fixed_order == std::vector<int>{0, 1, 2});
  CHECK(d.dynamically_causal);
  CHECK_FALSE(d.genuinely_non_causal);
  CHECK(d.first_regions == std::vector<int>{0});
  CHECK(d.last_regions == std::vector<int>{2});
}

TEST_CASE("causal diagnosis of the non-causal processes") {
  for (const ProcessTable& w : {cyclic4(), twisted4(), cyclic3()}) {
    const CausalDiagnosis d = causal_diagnosis(w);
    CHECK_FALSE(d.fixed_order.has_value());
    CHECK_FALSE(d.dynamically_causal);
    CHECK(d.first_regions.empty());
    CHECK(d.last_regions.empty());
    CHECK(d.genuinely_non_causal);
  }
  CHECK_THROWS_AS(causal_diagnosis(pfn_test::twoway2()), InvalidProcessError);
}

TEST_CASE("acyclic signalling implies dynamical causality (sampled N=3)") {
  std::mt19937 rng(9);
  int seen = 0;
  while (seen < 30) {
    const ProcessTable w = pfn_test::random_binary_process(3, rng);
    if (!pairwise_validate(w).valid) continue;
    ++seen;
    const CausalDiagnosis d = causal_diagnosis(w);
    if (d.fixed_order) CHECK(d.dynamically_causal);
    if (d.genuinely_non_causal) {
      CHECK_FALSE(d.dynamically_causal);
      CHECK(d.first_regions.empty());
      CHECK(d.last_regions.empty());
    }
  }
}
