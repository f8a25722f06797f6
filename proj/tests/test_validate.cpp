#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace pfn;
using pfn_test::chain3;
using pfn_test::cyclic3;
using pfn_test::cyclic4;
using pfn_test::make_process;
using pfn_test::twisted4;
using pfn_test::twoway2;

namespace {

ProcessTable binary_from_id(int n, std::uint32_t id) {
  PackedProcess p;
  p.n = n;
  for (int i = 0; i < n; ++i)
    p.comp[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(id >> (8 * (n - 1 - i)));
  return unpack(p);
}

bool witness_checks_out(const ProcessTable& w, const Verdict& v) {
  if (v.valid) return !v.witness.has_value();
  if (!v.witness) return false;
  const auto& witness = *v.witness;
  // Every listed point really is a fixed point, all distinct, and the count
  // differs from one (an empty list must mean there is no fixed point).
  for (const auto& fp : witness.fixed_points)
    if (loop_map(w, witness.operations, fp) != fp) return false;
  for (std::size_t i = 0; i < witness.fixed_points.size(); ++i)
    for (std::size_t k = i + 1; k < witness.fixed_points.size(); ++k)
      if (witness.fixed_points[i] == witness.fixed_points[k]) return false;
  if (witness.fixed_points.empty())
    return fixed_points(w, witness.operations).empty();
  return witness.fixed_points.size() >= 2;
}

} // namespace

TEST_CASE("single-region processes are the constants") {
  const ProcessTable zero(ProcessShape::binary(1), {{0}});
  const ProcessTable one(ProcessShape::binary(1), {{1}});
  CHECK(check_single_region(zero).valid);
  CHECK(check_single_region(one).valid);
  CHECK_THROWS_AS(check_single_region(twoway2()), ShapeError);
}

TEST_CASE("bipartite characterization") {
  const ProcessTable oneway = make_process(
      ProcessShape::binary(2),
      {[](const StateTuple&) { return 0; }, [](const StateTuple& x) { return x[0]; }});
  CHECK(check_bipartite(oneway).valid);

  const ProcessTable constants = make_process(
      ProcessShape::binary(2),
      {[](const StateTuple&) { return 1; }, [](const StateTuple&) { return 0; }});
  CHECK(check_bipartite(constants).valid);

  const Verdict bad = check_bipartite(twoway2());
  CHECK_FALSE(bad.valid);
  REQUIRE(bad.witness.has_value());
  CHECK(witness_checks_out(twoway2(), bad));
}

TEST_CASE("output_reduce freezes one region") {
  const ProcessTable w = cyclic4();
  // x_1 = 0 then x_2 = 0 leaves a_3 = 0 and a_4 = x_3.
  const ReducedProcess first = output_reduce(w, 0, 0);
  const ReducedProcess then = output_reduce(first.table, 0, 0); // region 2 is index 0 now
  REQUIRE(then.table.regions() == 2);
  CHECK(then.table.component(0).values == std::vector<int>{0, 0}); // a_3
  CHECK(then.table.component(1).values == std::vector<int>{0, 1}); // a_4 = x_3

  // x_1 = 1, x_2 = 0: nothing left.
  const ReducedProcess other = output_reduce(output_reduce(w, 0, 1).table, 0, 0);
  CHECK(other.table.component(0).values == std::vector<int>{0, 0});
  CHECK(other.table.component(1).values == std::vector<int>{0, 0});

  CHECK_THROWS_AS(output_reduce(w, 4, 0), ShapeError);
  CHECK_THROWS_AS(output_reduce(w, 0, 2), ShapeError);
}

TEST_CASE("freezing distinct regions commutes") {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const ProcessTable w = pfn_test::random_binary_process(4, rng);
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j)
        for (int vi = 0; vi < 2; ++vi)
          for (int vj = 0; vj < 2; ++vj) {
            // Freeze i then j, and j then i; j's index drops by one after
            // removing i < j.
            const auto a = output_reduce(output_reduce(w, i, vi).table, j - 1, vj).table;
            const auto b = output_reduce(output_reduce(w, j, vj).table, i, vi).table;
            REQUIRE(a == b);
          }
  }
}

TEST_CASE("operation_reduce hard-wires one region") {
  const ProcessTable w = cyclic4();
  const ReducedProcess reduced = operation_reduce(w, 0, {0, {0, 0}});
  // Substituting x_1 = 0: a_2 = 0, a_3 = x_2 (x_4+1), a_4 = x_3 (x_2+1).
  const ProcessTable expected = make_process(
      ProcessShape::binary(3),
      {
          [](const StateTuple&) { return 0; },
          [](const StateTuple& x) { return x[0] & (x[2] ^ 1); }, // x_2 (x_4+1)
          [](const StateTuple& x) { return x[1] & (x[0] ^ 1); }, // x_3 (x_2+1)
      });
  CHECK(reduced.table == expected);

  // Tripartite cyclic process with f_3 = const 0: a_1 = 0, a_2 = x_1.
  const ReducedProcess pair = operation_reduce(cyclic3(), 2, {2, {0, 0}});
  CHECK(pair.table.component(0).values == std::vector<int>{0, 0});
  CHECK(pair.table.component(1).values == std::vector<int>{0, 1});
  CHECK(check_bipartite(pair.table).valid);

  CHECK_THROWS_AS(operation_reduce(w, 0, {1, {0, 0}}), ShapeError);
  CHECK_THROWS_AS(operation_reduce(w, 0, {0, {0, 0, 0}}), ShapeError);
}

TEST_CASE("operation_reduce rejects reductions that read their own output") {
  // a_1 = x_3, a_3 = x_1: hard-wiring region 1 with the identity makes the
  // third region's input equal to its own output.
  const ProcessTable w = make_process(
      ProcessShape::binary(3),
      {
          [](const StateTuple& x) { return x[2]; },
          [](const StateTuple&) { return 0; },
          [](const StateTuple& x) { return x[0]; },
      });
  CHECK_THROWS_AS(operation_reduce(w, 0, {0, {0, 1}}), ReductionError);
  // Constant insertions stay representable even here.
  CHECK_NOTHROW(operation_reduce(w, 0, {0, {0, 0}}));
}

TEST_CASE("reduction order commutes: operation after output = output after operation") {
  std::mt19937 rng(31);
  const std::vector<int> f1_tables[] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const ProcessTable w = pfn_test::random_binary_process(4, rng);
    const auto raw = pfn_test::raw_from(w);
    for (int i = 1; i < 4; ++i)
      for (int x_i = 0; x_i < 2; ++x_i)
        for (const auto& f1 : f1_tables) {
          // Raw route A: fix x_i, then hard-wire region 1.
          const auto raw_a =
              pfn_test::raw_operation_reduce(pfn_test::raw_output_reduce(raw, i, x_i), 0, f1);
          // Raw route B: hard-wire region 1, then fix x_i.
          const auto raw_b =
              pfn_test::raw_output_reduce(pfn_test::raw_operation_reduce(raw, 0, f1), i, x_i);
          // The two composites agree pointwise on every assignment.
          std::vector<int> sizes(2, 2);
          StateTuple digits(2, 0);
          do {
            std::map<int, int> outputs;
            for (std::size_t p = 0; p < raw_a.labels.size(); ++p)
              outputs[raw_a.labels[p]] = digits[p];
            for (int label : raw_a.labels)
              REQUIRE(raw_a.eval(label, outputs) == raw_b.eval(label, outputs));
          } while (detail::next_tuple(digits, sizes));

          // When both table-level routes are representable they agree too,
          // and match the raw composite.
          try {
            const auto table_a =
                operation_reduce(output_reduce(w, i, x_i).table, 0, {0, f1}).table;
            const auto table_b =
                output_reduce(operation_reduce(w, 0, {0, f1}).table, i - 1, x_i).table;
            REQUIRE(table_a == table_b);
            REQUIRE(pfn_test::table_matches_raw(table_a, raw_a, w.shape()));
            ++checked;
          } catch (const ReductionError&) {
            // Not representable as a table; the raw comparison above already
            // covered the identity.
          }
        }
  }
  CHECK(checked > 100);
}

TEST_CASE("brute force validates the stock processes") {
  const Verdict v10 = brute_force_validate(cyclic4());
  CHECK(v10.valid);
  CHECK(v10.method == Method::brute);
  CHECK(brute_force_validate(twisted4()).valid);
  CHECK(brute_force_validate(chain3()).valid);
  CHECK(brute_force_validate(cyclic3()).valid);
}

TEST_CASE("brute force witness is the first offending tuple") {
  const Verdict v = brute_force_validate(twoway2());
  REQUIRE_FALSE(v.valid);
  REQUIRE(v.witness.has_value());
  // First failure in lexicographic order: both regions apply the identity,
  // leaving the two histories (0,0) and (1,1).
  CHECK(v.witness->operations.operations[0].values == std::vector<int>{0, 1});
  CHECK(v.witness->operations.operations[1].values == std::vector<int>{0, 1});
  REQUIRE(v.witness->fixed_points.size() == 2);
  CHECK(v.witness->fixed_points[0] == StateTuple{0, 0});
  CHECK(v.witness->fixed_points[1] == StateTuple{1, 1});
  CHECK(witness_checks_out(twoway2(), v));
}

TEST_CASE("brute force refuses oversized searches") {
  // 4 regions with |A| = |X| = 4: 4^16 operation tuples.
  std::vector<std::vector<int>> comps(4, std::vector<int>(64, 0));
  const ProcessTable big(ProcessShape({4, 4, 4, 4}, {4, 4, 4, 4}), comps);
  CHECK_THROWS_AS(brute_force_validate(big), BoundError);
  CHECK_NOTHROW(pairwise_validate(big));
}

TEST_CASE("pairwise validates and pinpoints failures") {
  CHECK(pairwise_validate(cyclic4()).valid);
  CHECK(pairwise_validate(twisted4()).valid);
  CHECK(pairwise_validate(cyclic3()).valid);

  // Replacing a_3 by the parity x_2 + x_4 breaks the one-way rule: the
  // freeze x_1=0, x_2=0 of pair {3,4} is two-way, though the first failure
  // in scan order is pair {2,3} at freeze x_1=1, x_4=0.
  const ProcessTable broken = make_process(
      ProcessShape::binary(4),
      {
          [](const StateTuple& x) { return x[3] & (x[1] ^ 1) & (x[2] ^ 1); },
          [](const StateTuple& x) { return x[0] & (x[3] ^ 1) & (x[2] ^ 1); },
          [](const StateTuple& x) { return x[1] ^ x[3]; },
          [](const StateTuple& x) { return x[2] & (x[1] ^ 1) & (x[0] ^ 1); },
      });
  const auto both_vary = [&](int l, int j, const StateTuple& freeze) {
    std::vector<int> frozen_regions;
    for (int m = 0; m < 4; ++m)
      if (m != l && m != j) frozen_regions.push_back(m);
    return !detail::is_constant(
               detail::component_restriction(broken, l, j, frozen_regions, freeze)) &&
           !detail::is_constant(
               detail::component_restriction(broken, j, l, frozen_regions, freeze));
  };
  CHECK(both_vary(2, 3, {0, 0}));
  const Verdict v = pairwise_validate(broken);
  REQUIRE_FALSE(v.valid);
  REQUIRE(v.witness.has_value());
  REQUIRE(v.witness->pair.has_value());
  CHECK(v.witness->pair->region_l == 1);
  CHECK(v.witness->pair->region_j == 2);
  CHECK(v.witness->pair->frozen_values == StateTuple{1, 0});
  CHECK(witness_checks_out(broken, v));
}

TEST_CASE("recursive validator") {
  CHECK(recursive_validate(cyclic4()).valid);
  CHECK(recursive_validate(chain3()).valid);
  const Verdict v = recursive_validate(twoway2());
  CHECK_FALSE(v.valid);
  CHECK(witness_checks_out(twoway2(), v));

  // A quadripartite failure produces a witness in the original index space.
  const ProcessTable broken = make_process(
      ProcessShape::binary(4),
      {
          [](const StateTuple& x) { return x[1]; },
          [](const StateTuple& x) { return x[0]; },
          [](const StateTuple&) { return 0; },
          [](const StateTuple&) { return 0; },
      });
  const Verdict v4 = recursive_validate(broken);
  REQUIRE_FALSE(v4.valid);
  CHECK(witness_checks_out(broken, v4));
}

TEST_CASE("all three oracles agree on every tripartite binary table") {
  int naive_checked = 0;
  for (std::uint32_t id = 0; id < (1u << 12); ++id) {
    const ProcessTable w = binary_from_id(3, id);
    const Verdict brute = brute_force_validate(w);
    const Verdict pairwise = pairwise_validate(w);
    const Verdict recursive = recursive_validate(w);
    REQUIRE(brute.valid == pairwise.valid);
    REQUIRE(brute.valid == recursive.valid);
    if (!brute.valid) {
      REQUIRE(witness_checks_out(w, brute));
      REQUIRE(witness_checks_out(w, pairwise));
      REQUIRE(witness_checks_out(w, recursive));
    }
    // Spot-check against the naive fixed-point oracle.
    if (id % 64 == 0) {
      REQUIRE(pfn_test::naive_valid(w) == brute.valid);
      ++naive_checked;
    }
  }
  CHECK(naive_checked == 64);
}

TEST_CASE("packed and generic brute-force routes match") {
  for (std::uint32_t id = 0; id < (1u << 12); ++id) {
    const ProcessTable w = binary_from_id(3, id);
    const Verdict packed = detail::brute_packed(w, default_brute_bound);
    const Verdict generic = detail::brute_generic(w, default_brute_bound);
    REQUIRE(packed.valid == generic.valid);
    if (!packed.valid) {
      REQUIRE(packed.witness->operations == generic.witness->operations);
      REQUIRE(packed.witness->fixed_points == generic.witness->fixed_points);
    }
  }
  std::mt19937 rng(41);
  for (int trial = 0; trial < 500; ++trial) {
    const ProcessTable w = pfn_test::random_binary_process(4, rng);
    const Verdict packed = detail::brute_packed(w, default_brute_bound);
    const Verdict generic = detail::brute_generic(w, default_brute_bound);
    REQUIRE(packed.valid == generic.valid);
    if (!packed.valid)
      REQUIRE(packed.witness->operations == generic.witness->operations);
  }
}

TEST_CASE("brute and pairwise agree on sampled quadripartite tables") {
  std::mt19937 rng(43);
  for (int trial = 0; trial < 3000; ++trial) {
    const ProcessTable w = pfn_test::random_binary_process(4, rng);
    REQUIRE(brute_force_validate(w).valid == pairwise_validate(w).valid);
  }
}

TEST_CASE("unique fixed point satisfies the consistency equation") {
  const ProcessTable w = cyclic4();
  std::vector<int> op_sizes(8, 2);
  std::vector<int> digits(8, 0);
  do {
    OperationTuple f;
    for (int i = 0; i < 4; ++i)
      f.operations.push_back({i,
                              {digits[static_cast<std::size_t>(2 * i)],
                               digits[static_cast<std::size_t>(2 * i + 1)]}});
    const StateTuple a = simulate(w, f);
    CHECK(pfn::apply(w, pfn::outputs(f, a)) == a);
  } while (detail::next_tuple(digits, op_sizes));
}

TEST_CASE("simulate rejects non-unique histories and oversized scans") {
  OperationTuple identity;
  identity.operations = {{0, {0, 1}}, {1, {0, 1}}};
  CHECK_THROWS_AS(simulate(twoway2(), identity), InvalidProcessError);
  CHECK(fixed_points(twoway2(), identity).size() == 2);

  std::vector<std::vector<int>> comps(2, std::vector<int>(4000, 0));
  const ProcessTable wide(ProcessShape({4000, 4000}, {4000, 4000}), comps);
  OperationTuple f;
  f.operations = {{0, std::vector<int>(4000, 0)}, {1, std::vector<int>(4000, 0)}};
  CHECK_THROWS_AS(fixed_points(wide, f), BoundError);
}

TEST_CASE("hard-wiring any operation preserves validity (exhaustive N=3)") {
  const std::vector<int> ops[] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  for (std::uint32_t id = 0; id < (1u << 12); ++id) {
    const ProcessTable w = binary_from_id(3, id);
    if (!brute_force_validate(w).valid) continue;
    for (int i = 0; i < 3; ++i)
      for (const auto& f : ops) {
        ReducedProcess reduced = operation_reduce(w, i, {i, f}); // must not throw
        REQUIRE(check_bipartite(reduced.table).valid);
      }
  }
}

TEST_CASE("validity of all reductions over one region implies validity (exhaustive N=3)") {
  const std::vector<int> ops[] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  int promoted = 0;
  for (std::uint32_t id = 0; id < (1u << 12); ++id) {
    const ProcessTable w = binary_from_id(3, id);
    for (int i = 0; i < 3; ++i) {
      bool all_valid = true;
      for (const auto& f : ops) {
        try {
          if (!check_bipartite(operation_reduce(w, i, {i, f}).table).valid) {
            all_valid = false;
            break;
          }
        } catch (const ReductionError&) {
          all_valid = false;
          break;
        }
      }
      if (all_valid) {
        REQUIRE(brute_force_validate(w).valid);
        ++promoted;
      }
    }
  }
  CHECK(promoted > 0);
}
