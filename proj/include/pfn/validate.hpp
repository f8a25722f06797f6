// validate.hpp -- decide whether a candidate table is a valid process
// function (unique fixed point of w o f for every operation tuple) via three
// independent routes, and build the reduced processes used along the way.

#pragma once

#include <algorithm>
#include <optional>
#include <utility>
#include <variant>

#include "pfn/core.hpp"

namespace pfn {

inline constexpr std::uint64_t default_brute_bound = 10'000'000;

/// Raised by operation_reduce when the reduced component of some region
/// would depend on that region's own output.  This can only happen when the
/// original table is not a valid process function; valid tables always
/// reduce cleanly.
class ReductionError : public Error {
public:
  using Error::Error;
};

enum class Method { direct, brute, pairwise, recursive };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::direct: return "direct";
    case Method::brute: return "brute";
    case Method::pairwise: return "pairwise";
    case Method::recursive: return "recursive";
  }
  return "?";
}

/// Details of a failed pairwise restriction: with the other regions pinned
/// (either to fixed outputs or to hard-wired operations), both regions of
/// the pair can still signal to each other.
struct PairFailure {
  int region_l = 0;
  int region_j = 0;
  std::vector<int> frozen_regions; // ascending; complement of {l, j}
  StateTuple frozen_values;        // one output value per frozen region...
  std::vector<LocalOperationTable> frozen_operations; // ...or one operation each
  std::vector<int> restriction_l;  // a_l as a function of x_j
  std::vector<int> restriction_j;  // a_j as a function of x_l
};

/// An operation tuple under which the loop map has a fixed-point count
/// different from one, together with fixed points that demonstrate it.
/// Brute-force witnesses list every fixed point (possibly none); witnesses
/// built from a pair failure list two distinct ones.
struct Witness {
  OperationTuple operations;
  std::vector<StateTuple> fixed_points;
  std::optional<PairFailure> pair;
};

struct Verdict {
  bool valid = false;
  Method method = Method::direct;
  std::optional<Witness> witness; // present iff invalid
};

/// All fixed points of a |-> w(f(a)), in ascending rank order of a.
inline std::vector<StateTuple> fixed_points(const ProcessTable& w, const OperationTuple& f,
                                            std::uint64_t scan_bound = default_brute_bound) {
  check_compatible(w.shape(), f);
  const std::uint64_t total = w.shape().input_states();
  if (total > scan_bound)
    throw BoundError("fixed_points: input state space " + std::to_string(total) +
                     " exceeds bound " + std::to_string(scan_bound));
  std::vector<StateTuple> found;
  StateTuple a(static_cast<std::size_t>(w.regions()), 0);
  do {
    if (loop_map(w, f, a) == a) found.push_back(a);
  } while (detail::next_tuple(a, w.shape().in_sizes));
  return found;
}

/// Number of operation tuples, saturating at 2^64-1.
inline std::uint64_t operation_tuple_count(const ProcessShape& shape) {
  constexpr std::uint64_t cap = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t total = 1;
  for (int i = 0; i < shape.regions(); ++i) {
    const auto base = static_cast<std::uint64_t>(shape.out_sizes[static_cast<std::size_t>(i)]);
    for (int k = 0; k < shape.in_sizes[static_cast<std::size_t>(i)]; ++k) {
      if (total > cap / base) return cap;
      total *= base;
    }
  }
  return total;
}

namespace detail {

// Restriction of component `comp` to a single varying output coordinate:
// every region other than `comp` and `vary` is frozen to the given values
// (listed in ascending region order).  Returns a_comp as a table over X_vary.
inline std::vector<int> component_restriction(const ProcessTable& w, int comp, int vary,
                                              const std::vector<int>& frozen_regions,
                                              const StateTuple& frozen_values) {
  const auto& out_sizes = w.shape().out_sizes;
  StateTuple x(static_cast<std::size_t>(w.regions()), 0);
  for (std::size_t k = 0; k < frozen_regions.size(); ++k)
    x[static_cast<std::size_t>(frozen_regions[k])] = frozen_values[k];
  std::vector<int> restriction;
  const int vary_size = out_sizes[static_cast<std::size_t>(vary)];
  restriction.reserve(static_cast<std::size_t>(vary_size));
  for (int v = 0; v < vary_size; ++v) {
    x[static_cast<std::size_t>(vary)] = v;
    restriction.push_back(w.input(comp, x));
  }
  return restriction;
}

inline bool is_constant(const std::vector<int>& values) {
  for (int v : values)
    if (v != values.front()) return false;
  return true;
}

// Builds the grandfather-style witness for a two-way signalling pair: with
// every other region pinned to its frozen output, region l copies "did I see
// the first of the two inputs?" towards j and vice versa, which forces two
// distinct consistent histories.
inline Witness make_pair_witness(const ProcessTable& w, int l, int j,
                                 const std::vector<int>& frozen_regions,
                                 const StateTuple& frozen_values,
                                 const std::vector<int>& restriction_l,
                                 const std::vector<int>& restriction_j) {
  const int n = w.regions();
  const auto& shape = w.shape();

  // First pair of j-outputs that moves a_l, and of l-outputs that moves a_j.
  auto first_divergence = [](const std::vector<int>& r) {
    for (std::size_t v = 1; v < r.size(); ++v)
      if (r[v] != r[0]) return std::pair<int, int>(0, static_cast<int>(v));
    throw IntegrityError("make_pair_witness: restriction is constant");
  };
  const auto [xj0, xj1] = first_divergence(restriction_l);
  const auto [xl0, xl1] = first_divergence(restriction_j);
  const int al0 = restriction_l[static_cast<std::size_t>(xj0)];
  const int aj0 = restriction_j[static_cast<std::size_t>(xl0)];

  OperationTuple f;
  f.operations.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    auto& op = f.operations[static_cast<std::size_t>(k)];
    op.region = k;
    const auto in_size = static_cast<std::size_t>(shape.in_sizes[static_cast<std::size_t>(k)]);
    op.values.assign(in_size, 0);
  }
  for (std::size_t k = 0; k < frozen_regions.size(); ++k) {
    auto& op = f.operations[static_cast<std::size_t>(frozen_regions[k])];
    std::fill(op.values.begin(), op.values.end(), frozen_values[k]);
  }
  auto& fl = f.operations[static_cast<std::size_t>(l)];
  for (std::size_t a = 0; a < fl.values.size(); ++a)
    fl.values[a] = (static_cast<int>(a) == al0) ? xl0 : xl1;
  auto& fj = f.operations[static_cast<std::size_t>(j)];
  for (std::size_t a = 0; a < fj.values.size(); ++a)
    fj.values[a] = (static_cast<int>(a) == aj0) ? xj0 : xj1;

  // The two histories: outputs are fully determined in each branch.
  auto history = [&](int xl, int xj) {
    StateTuple x(static_cast<std::size_t>(n), 0);
    for (std::size_t k = 0; k < frozen_regions.size(); ++k)
      x[static_cast<std::size_t>(frozen_regions[k])] = frozen_values[k];
    x[static_cast<std::size_t>(l)] = xl;
    x[static_cast<std::size_t>(j)] = xj;
    return pfn::apply(w, x);
  };

  Witness witness;
  witness.operations = std::move(f);
  witness.fixed_points.push_back(history(xl0, xj0));
  witness.fixed_points.push_back(history(xl1, xj1));
  witness.pair =
      PairFailure{l, j, frozen_regions, frozen_values, {}, restriction_l, restriction_j};
  return witness;
}

// Witness for a pair failure reached through hard-wired operations on the
// complement: the witness tuple carries those operations verbatim, and the
// fixed points come from a direct scan.
inline Witness make_operational_pair_witness(const ProcessTable& w, int l, int j,
                                             const std::vector<int>& frozen_regions,
                                             std::vector<LocalOperationTable> frozen_operations,
                                             const std::vector<int>& restriction_l,
                                             const std::vector<int>& restriction_j,
                                             std::uint64_t scan_bound) {
  const int n = w.regions();
  auto first_divergence = [](const std::vector<int>& r) {
    for (std::size_t v = 1; v < r.size(); ++v)
      if (r[v] != r[0]) return std::pair<int, int>(0, static_cast<int>(v));
    throw IntegrityError("make_operational_pair_witness: restriction is constant");
  };
  const auto [xj0, xj1] = first_divergence(restriction_l);
  const auto [xl0, xl1] = first_divergence(restriction_j);
  const int al0 = restriction_l[static_cast<std::size_t>(xj0)];
  const int aj0 = restriction_j[static_cast<std::size_t>(xl0)];

  OperationTuple f;
  f.operations.resize(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < frozen_regions.size(); ++k)
    f.operations[static_cast<std::size_t>(frozen_regions[k])] = frozen_operations[k];
  auto& fl = f.operations[static_cast<std::size_t>(l)];
  fl.region = l;
  fl.values.resize(static_cast<std::size_t>(w.shape().in_sizes[static_cast<std::size_t>(l)]));
  for (std::size_t a = 0; a < fl.values.size(); ++a)
    fl.values[a] = (static_cast<int>(a) == al0) ? xl0 : xl1;
  auto& fj = f.operations[static_cast<std::size_t>(j)];
  fj.region = j;
  fj.values.resize(static_cast<std::size_t>(w.shape().in_sizes[static_cast<std::size_t>(j)]));
  for (std::size_t a = 0; a < fj.values.size(); ++a)
    fj.values[a] = (static_cast<int>(a) == aj0) ? xj0 : xj1;

  Witness witness;
  witness.fixed_points = fixed_points(w, f, scan_bound);
  witness.operations = std::move(f);
  witness.pair = PairFailure{l,
                             j,
                             frozen_regions,
                             {},
                             std::move(frozen_operations),
                             restriction_l,
                             restriction_j};
  return witness;
}

} // namespace detail

/// N = 1: a single-region table is a one-entry component, hence constant,
/// hence always a valid process function.
inline Verdict check_single_region(const ProcessTable& w) {
  if (w.regions() != 1)
    throw ShapeError("check_single_region: table has " + std::to_string(w.regions()) +
                     " regions");
  return Verdict{true, Method::direct, std::nullopt};
}

/// N = 2: valid exactly when at least one of the two components is constant
/// (one-way signalling at most).
inline Verdict check_bipartite(const ProcessTable& w) {
  if (w.regions() != 2)
    throw ShapeError("check_bipartite: table has " + std::to_string(w.regions()) + " regions");
  const auto& r0 = w.component(0).values; // a_1 as a function of x_2
  const auto& r1 = w.component(1).values; // a_2 as a function of x_1
  if (detail::is_constant(r0) || detail::is_constant(r1))
    return Verdict{true, Method::direct, std::nullopt};
  Verdict verdict{false, Method::direct,
                  detail::make_pair_witness(w, 0, 1, {}, {}, r0, r1)};
  return verdict;
}

/// The (N-1)-region process left after removing one region, together with a
/// record of how the removal was done: by fixing the region's output value,
/// or by hard-wiring a local operation into it.
struct ReducedProcess {
  ProcessTable table;
  int removed_region = 0;
  std::variant<int, LocalOperationTable> removal;
};

/// Fix region i's output to the value x_i and restrict every remaining
/// component accordingly.
inline ReducedProcess output_reduce(const ProcessTable& w, int i, int x_i) {
  const int n = w.regions();
  if (n < 2) throw ShapeError("output_reduce: needs at least two regions");
  if (i < 0 || i >= n) throw ShapeError("output_reduce: region index out of range");
  if (x_i < 0 || x_i >= w.shape().out_sizes[static_cast<std::size_t>(i)])
    throw ShapeError("output_reduce: output value out of range");

  ProcessShape reduced(detail::erase_at(w.shape().in_sizes, i),
                       detail::erase_at(w.shape().out_sizes, i));
  std::vector<std::vector<int>> comps;
  comps.reserve(static_cast<std::size_t>(n - 1));
  StateTuple x(static_cast<std::size_t>(n), 0);
  x[static_cast<std::size_t>(i)] = x_i;
  for (int j = 0; j < n; ++j) {
    if (j == i) continue;
    // Enumerate the reduced domain (all regions but i and j) in rank order.
    std::vector<int> rest_regions;
    std::vector<int> rest_sizes;
    for (int m = 0; m < n; ++m)
      if (m != i && m != j) {
        rest_regions.push_back(m);
        rest_sizes.push_back(w.shape().out_sizes[static_cast<std::size_t>(m)]);
      }
    std::vector<int> vals;
    vals.reserve(static_cast<std::size_t>(ProcessTable::domain_size_for(reduced,
                 j < i ? j : j - 1)));
    StateTuple rest(rest_regions.size(), 0);
    do {
      for (std::size_t k = 0; k < rest_regions.size(); ++k)
        x[static_cast<std::size_t>(rest_regions[k])] = rest[k];
      vals.push_back(w.input(j, x));
    } while (detail::next_tuple(rest, rest_sizes));
    comps.push_back(std::move(vals));
  }
  return ReducedProcess{ProcessTable(std::move(reduced), std::move(comps)), i, x_i};
}

namespace detail {

// Result of attempting an operation reduction.  On failure, records where
// a region's own output leaked into its reduced input: the component, the
// assignment of the other remaining regions' outputs, the two offending
// values of the region's own output, and the two inputs they produce.
struct ReductionOutcome {
  std::optional<ProcessTable> table;
  int dep_region = -1;  // index in the parent table
  StateTuple dep_rest;  // outputs of parent regions != i, != dep_region, ascending
  int dep_xj0 = 0;
  int dep_xj1 = 0;
  int dep_a0 = 0;
  int dep_a1 = 0;
};

inline ReductionOutcome try_operation_reduce(const ProcessTable& w, int i,
                                             const LocalOperationTable& f_i) {
  const int n = w.regions();
  if (n < 2) throw ShapeError("operation_reduce: needs at least two regions");
  if (i < 0 || i >= n) throw ShapeError("operation_reduce: region index out of range");
  if (f_i.region != i) throw ShapeError("operation_reduce: operation is for another region");
  if (f_i.values.size() !=
      static_cast<std::size_t>(w.shape().in_sizes[static_cast<std::size_t>(i)]))
    throw ShapeError("operation_reduce: operation table has wrong length");
  for (int v : f_i.values)
    if (v < 0 || v >= w.shape().out_sizes[static_cast<std::size_t>(i)])
      throw ShapeError("operation_reduce: operation value out of range");

  ProcessShape reduced(detail::erase_at(w.shape().in_sizes, i),
                       detail::erase_at(w.shape().out_sizes, i));
  std::vector<std::vector<int>> comps;
  comps.reserve(static_cast<std::size_t>(n - 1));
  StateTuple x(static_cast<std::size_t>(n), 0);
  for (int j = 0; j < n; ++j) {
    if (j == i) continue;
    std::vector<int> rest_regions;
    std::vector<int> rest_sizes;
    for (int m = 0; m < n; ++m)
      if (m != i && m != j) {
        rest_regions.push_back(m);
        rest_sizes.push_back(w.shape().out_sizes[static_cast<std::size_t>(m)]);
      }
    const int j_size = w.shape().out_sizes[static_cast<std::size_t>(j)];
    std::vector<int> vals;
    StateTuple rest(rest_regions.size(), 0);
    do {
      for (std::size_t k = 0; k < rest_regions.size(); ++k)
        x[static_cast<std::size_t>(rest_regions[k])] = rest[k];
      // Evaluate over every value of x_j; the region's own output must not
      // leak into its reduced input.
      int agreed = -1;
      for (int xj = 0; xj < j_size; ++xj) {
        x[static_cast<std::size_t>(j)] = xj;
        const int wi = w.input(i, x);
        x[static_cast<std::size_t>(i)] = f_i.values[static_cast<std::size_t>(wi)];
        const int val = w.input(j, x);
        if (xj == 0) {
          agreed = val;
        } else if (val != agreed) {
          ReductionOutcome fail;
          fail.dep_region = j;
          fail.dep_rest = rest;
          fail.dep_xj0 = 0;
          fail.dep_xj1 = xj;
          fail.dep_a0 = agreed;
          fail.dep_a1 = val;
          return fail;
        }
      }
      vals.push_back(agreed);
    } while (detail::next_tuple(rest, rest_sizes));
    comps.push_back(std::move(vals));
  }
  ReductionOutcome ok;
  ok.table = ProcessTable(std::move(reduced), std::move(comps));
  return ok;
}

} // namespace detail

/// Hard-wire the local operation f_i into region i: the remaining regions
/// see x_i = f_i(w_i(x-without-i)).  Throws ReductionError if some remaining
/// component would end up depending on its own output, which can only happen
/// for tables that are not process functions.
inline ReducedProcess operation_reduce(const ProcessTable& w, int i,
                                       const LocalOperationTable& f_i) {
  detail::ReductionOutcome outcome = detail::try_operation_reduce(w, i, f_i);
  if (!outcome.table)
    throw ReductionError("operation_reduce: component " + std::to_string(outcome.dep_region + 1) +
                         " of the reduction depends on its own output; the original"
                         " table is not a process function");
  return ReducedProcess{std::move(*outcome.table), i, f_i};
}

namespace detail {

// Shared skeleton for both brute-force routes: enumerate operation tuples in
// lexicographic order of their concatenated tables; the first tuple whose
// loop map does not have exactly one fixed point decides the verdict.
inline Verdict brute_generic(const ProcessTable& w, std::uint64_t bound) {
  const std::uint64_t tuples = operation_tuple_count(w.shape());
  if (tuples > bound)
    throw BoundError("brute_force_validate: " + std::to_string(tuples) +
                     " operation tuples exceed bound " + std::to_string(bound) +
                     "; use pairwise_validate");
  if (w.shape().input_states() > bound)
    throw BoundError("brute_force_validate: " + std::to_string(w.shape().input_states()) +
                     " input states exceed bound " + std::to_string(bound) +
                     "; use pairwise_validate");
  const int n = w.regions();
  const auto& shape = w.shape();

  OperationTuple f;
  f.operations.resize(static_cast<std::size_t>(n));
  std::vector<int> digit_sizes;
  for (int i = 0; i < n; ++i) {
    auto& op = f.operations[static_cast<std::size_t>(i)];
    op.region = i;
    op.values.assign(static_cast<std::size_t>(shape.in_sizes[static_cast<std::size_t>(i)]), 0);
    for (int k = 0; k < shape.in_sizes[static_cast<std::size_t>(i)]; ++k)
      digit_sizes.push_back(shape.out_sizes[static_cast<std::size_t>(i)]);
  }
  std::vector<int> digits(digit_sizes.size(), 0);

  const std::uint64_t states = shape.input_states();
  do {
    std::size_t d = 0;
    for (int i = 0; i < n; ++i)
      for (auto& v : f.operations[static_cast<std::size_t>(i)].values) v = digits[d++];

    StateTuple a(static_cast<std::size_t>(n), 0);
    std::uint64_t count = 0;
    for (std::uint64_t r = 0; r < states; ++r) {
      if (pfn::apply(w, pfn::outputs(f, a)) == a && ++count > 1) break;
      detail::next_tuple(a, shape.in_sizes);
    }
    if (count != 1) {
      Witness witness;
      witness.operations = f;
      witness.fixed_points = fixed_points(w, f, bound);
      return Verdict{false, Method::brute, std::move(witness)};
    }
  } while (detail::next_tuple(digits, digit_sizes));
  return Verdict{true, Method::brute, std::nullopt};
}

// Same search, same order, on the packed representation.
inline Verdict brute_packed(const ProcessTable& w, std::uint64_t bound) {
  const std::uint64_t tuples = operation_tuple_count(w.shape());
  if (tuples > bound)
    throw BoundError("brute_force_validate: " + std::to_string(tuples) +
                     " operation tuples exceed bound " + std::to_string(bound) +
                     "; use pairwise_validate");
  const PackedProcess p = pack(w);
  const int n = p.n;
  const unsigned states = 1u << n;

  // Process action precomputed over all output masks.
  std::array<std::uint8_t, 16> image{};
  for (unsigned x = 0; x < states; ++x)
    image[x] = static_cast<std::uint8_t>(packed_apply(p, x));

  PackedOps f;
  f.n = n;
  const auto total = static_cast<std::uint32_t>(tuples);
  for (std::uint32_t id = 0; id < total; ++id) {
    for (int i = 0; i < n; ++i)
      f.op[static_cast<std::size_t>(i)] =
          static_cast<std::uint8_t>((id >> (2 * (n - 1 - i))) & 3u);
    unsigned count = 0;
    for (unsigned a = 0; a < states; ++a) {
      if (image[packed_outputs(f, a, n)] == a && ++count > 1) break;
    }
    if (count != 1) {
      OperationTuple ops;
      ops.operations.resize(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        auto& op = ops.operations[static_cast<std::size_t>(i)];
        op.region = i;
        op.values = {(f.op[static_cast<std::size_t>(i)] >> 1) & 1,
                     f.op[static_cast<std::size_t>(i)] & 1};
      }
      Witness witness;
      witness.fixed_points = fixed_points(w, ops);
      witness.operations = std::move(ops);
      return Verdict{false, Method::brute, std::move(witness)};
    }
  }
  return Verdict{true, Method::brute, std::nullopt};
}

} // namespace detail

/// Exhaustive check of the defining condition: every operation tuple must
/// leave exactly one fixed point.  Refuses when the operation-tuple space
/// exceeds `bound`; the witness of an invalid table is the lexicographically
/// first offending tuple together with all of its fixed points.
inline Verdict brute_force_validate(const ProcessTable& w,
                                    std::uint64_t bound = default_brute_bound) {
  if (packable(w.shape())) return detail::brute_packed(w, bound);
  return detail::brute_generic(w, bound);
}

namespace detail {

// Witness for an own-output leak along a chain of hard-wired operations:
// with the other remaining regions pinned to the outputs where the leak
// showed, sending the leaking region's input back through an anti-copy
// closes a loop with no consistent history at all.
inline Witness make_dependence_witness(
    const ProcessTable& w, const std::vector<std::pair<int, LocalOperationTable>>& chain,
    const std::vector<int>& rest_regions, const StateTuple& rest_values, int dep_region,
    int xj0, int xj1, int a0, int a1) {
  const int n = w.regions();
  OperationTuple f;
  f.operations.resize(static_cast<std::size_t>(n));
  for (const auto& [region, op] : chain) {
    f.operations[static_cast<std::size_t>(region)] = op;
    f.operations[static_cast<std::size_t>(region)].region = region;
  }
  for (std::size_t k = 0; k < rest_regions.size(); ++k) {
    auto& op = f.operations[static_cast<std::size_t>(rest_regions[k])];
    op.region = rest_regions[k];
    op.values.assign(
        static_cast<std::size_t>(w.shape().in_sizes[static_cast<std::size_t>(rest_regions[k])]),
        rest_values[k]);
  }
  auto& fd = f.operations[static_cast<std::size_t>(dep_region)];
  fd.region = dep_region;
  fd.values.resize(
      static_cast<std::size_t>(w.shape().in_sizes[static_cast<std::size_t>(dep_region)]));
  for (std::size_t a = 0; a < fd.values.size(); ++a)
    fd.values[a] = (static_cast<int>(a) == a0) ? xj1 : xj0;
  (void)a1;

  Witness witness;
  witness.operations = std::move(f);
  // No fixed point exists under this tuple; an empty list is the claim.
  return witness;
}

// Saturating product of operation counts over a subset of regions.
inline std::uint64_t subset_operation_count(const ProcessShape& shape,
                                            const std::vector<int>& regions) {
  constexpr std::uint64_t cap = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t total = 1;
  for (int r : regions) {
    const auto base = static_cast<std::uint64_t>(shape.out_sizes[static_cast<std::size_t>(r)]);
    for (int k = 0; k < shape.in_sizes[static_cast<std::size_t>(r)]; ++k) {
      if (base != 0 && total > cap / base) return cap;
      total *= base;
    }
  }
  return total;
}

} // namespace detail

/// Pairwise criterion.  A fast screen checks that, for every pair of
/// regions and every assignment of the other regions' outputs, at most one
/// direction of signalling survives; this is necessary but not sufficient
/// (output freezes are exactly the constant operations, and feedback through
/// non-constant operations can hide a causal loop: the three-region copy
/// cycle a_1 = x_2, a_2 = x_3, a_3 = x_1 passes every output freeze yet has
/// two consistent histories under identity operations).  The screen is
/// therefore completed by hard-wiring every combination of operations on the
/// complement of each pair and re-checking the surviving pair, which is
/// exact.
inline Verdict pairwise_validate(const ProcessTable& w,
                                 std::uint64_t bound = default_brute_bound) {
  const int n = w.regions();
  if (n == 1) {
    Verdict v = check_single_region(w);
    v.method = Method::pairwise;
    return v;
  }
  if (n == 2) {
    Verdict v = check_bipartite(w);
    v.method = Method::pairwise;
    return v;
  }

  // Screen: output freezes, pairs in lexicographic order, freezes in rank
  // order, first failure wins.
  for (int l = 0; l < n; ++l) {
    for (int j = l + 1; j < n; ++j) {
      std::vector<int> frozen_regions;
      std::vector<int> frozen_sizes;
      for (int m = 0; m < n; ++m)
        if (m != l && m != j) {
          frozen_regions.push_back(m);
          frozen_sizes.push_back(w.shape().out_sizes[static_cast<std::size_t>(m)]);
        }
      StateTuple freeze(frozen_regions.size(), 0);
      do {
        const auto rl = detail::component_restriction(w, l, j, frozen_regions, freeze);
        const auto rj = detail::component_restriction(w, j, l, frozen_regions, freeze);
        if (!detail::is_constant(rl) && !detail::is_constant(rj)) {
          Verdict verdict{false, Method::pairwise,
                          detail::make_pair_witness(w, l, j, frozen_regions, freeze, rl, rj)};
          return verdict;
        }
      } while (detail::next_tuple(freeze, frozen_sizes));
    }
  }

  // Completion: hard-wired operations on the complement of each pair.
  for (int l = 0; l < n; ++l) {
    for (int j = l + 1; j < n; ++j) {
      std::vector<int> complement;
      for (int m = 0; m < n; ++m)
        if (m != l && m != j) complement.push_back(m);
      const std::uint64_t combos = detail::subset_operation_count(w.shape(), complement);
      if (combos > bound)
        throw BoundError("pairwise_validate: " + std::to_string(combos) +
                         " operation assignments on the complement of a pair exceed bound " +
                         std::to_string(bound));

      std::vector<int> digit_sizes;
      for (int r : complement)
        for (int k = 0; k < w.shape().in_sizes[static_cast<std::size_t>(r)]; ++k)
          digit_sizes.push_back(w.shape().out_sizes[static_cast<std::size_t>(r)]);
      std::vector<int> digits(digit_sizes.size(), 0);
      do {
        // Assemble this assignment's operations, then reduce regions in
        // ascending order.
        std::vector<std::pair<int, LocalOperationTable>> chain;
        std::size_t d = 0;
        for (int r : complement) {
          LocalOperationTable op;
          op.region = r;
          for (int k = 0; k < w.shape().in_sizes[static_cast<std::size_t>(r)]; ++k)
            op.values.push_back(digits[d++]);
          chain.emplace_back(r, std::move(op));
        }

        ProcessTable current = w;
        std::vector<int> labels(static_cast<std::size_t>(n));
        for (int m = 0; m < n; ++m) labels[static_cast<std::size_t>(m)] = m;
        bool failed = false;
        for (const auto& [region, op] : chain) {
          const int local = static_cast<int>(
              std::find(labels.begin(), labels.end(), region) - labels.begin());
          LocalOperationTable local_op = op;
          local_op.region = local;
          detail::ReductionOutcome outcome =
              detail::try_operation_reduce(current, local, local_op);
          if (!outcome.table) {
            // Translate the leak back to original labels: dep_region and
            // dep_rest are indexed in the table the reduction was applied to.
            const int dep = labels[static_cast<std::size_t>(outcome.dep_region)];
            std::vector<int> rest_regions;
            for (std::size_t m = 0; m < labels.size(); ++m)
              if (static_cast<int>(m) != local && static_cast<int>(m) != outcome.dep_region)
                rest_regions.push_back(labels[m]);
            std::vector<std::pair<int, LocalOperationTable>> applied(
                chain.begin(),
                chain.begin() + (std::find_if(chain.begin(), chain.end(),
                                              [&](const auto& e) { return e.first == region; }) -
                                 chain.begin()) +
                    1);
            Witness witness = detail::make_dependence_witness(
                w, applied, rest_regions, outcome.dep_rest, dep, outcome.dep_xj0,
                outcome.dep_xj1, outcome.dep_a0, outcome.dep_a1);
            return Verdict{false, Method::pairwise, std::move(witness)};
          }
          current = std::move(*outcome.table);
          labels.erase(labels.begin() + local);
        }

        const auto& r0 = current.component(0).values; // region l
        const auto& r1 = current.component(1).values; // region j
        if (!detail::is_constant(r0) && !detail::is_constant(r1)) {
          std::vector<LocalOperationTable> frozen_ops;
          std::vector<int> frozen_regions;
          for (auto& [region, op] : chain) {
            frozen_regions.push_back(region);
            frozen_ops.push_back(op);
            frozen_ops.back().region = region;
          }
          Witness witness = detail::make_operational_pair_witness(
              w, l, j, frozen_regions, std::move(frozen_ops), r0, r1, bound);
          return Verdict{false, Method::pairwise, std::move(witness)};
        }
      } while (detail::next_tuple(digits, digit_sizes));
    }
  }
  return Verdict{true, Method::pairwise, std::nullopt};
}

namespace detail {

inline bool recursive_validate_impl(const ProcessTable& w, const ProcessTable& original,
                                    const std::vector<int>& labels,
                                    std::vector<std::pair<int, LocalOperationTable>>& chain,
                                    std::uint64_t bound, Verdict& failure) {
  const int n = w.regions();
  if (n == 1) return true;
  if (n == 2) {
    const auto& r0 = w.component(0).values;
    const auto& r1 = w.component(1).values;
    if (is_constant(r0) || is_constant(r1)) return true;
    std::vector<std::pair<int, LocalOperationTable>> sorted = chain;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<int> frozen_regions;
    std::vector<LocalOperationTable> frozen_ops;
    for (auto& [region, op] : sorted) {
      frozen_regions.push_back(region);
      frozen_ops.push_back(op);
      frozen_ops.back().region = region;
    }
    failure = Verdict{false, Method::recursive,
                      make_operational_pair_witness(original, labels[0], labels[1],
                                                    frozen_regions, std::move(frozen_ops), r0,
                                                    r1, bound)};
    return false;
  }
  for (int i = 0; i < n; ++i) {
    std::vector<int> digit_sizes(
        static_cast<std::size_t>(w.shape().in_sizes[static_cast<std::size_t>(i)]),
        w.shape().out_sizes[static_cast<std::size_t>(i)]);
    std::vector<int> digits(digit_sizes.size(), 0);
    do {
      LocalOperationTable op;
      op.region = i;
      op.values = digits;
      ReductionOutcome outcome = try_operation_reduce(w, i, op);
      const int original_region = labels[static_cast<std::size_t>(i)];
      if (!outcome.table) {
        const int dep = labels[static_cast<std::size_t>(outcome.dep_region)];
        std::vector<int> rest_regions;
        for (std::size_t m = 0; m < labels.size(); ++m)
          if (static_cast<int>(m) != i && static_cast<int>(m) != outcome.dep_region)
            rest_regions.push_back(labels[m]);
        auto applied = chain;
        applied.emplace_back(original_region, op);
        applied.back().second.region = original_region;
        failure = Verdict{false, Method::recursive,
                          make_dependence_witness(original, applied, rest_regions,
                                                  outcome.dep_rest, dep, outcome.dep_xj0,
                                                  outcome.dep_xj1, outcome.dep_a0,
                                                  outcome.dep_a1)};
        return false;
      }
      chain.emplace_back(original_region, op);
      chain.back().second.region = original_region;
      const auto child_labels = erase_at(labels, i);
      const bool ok = recursive_validate_impl(*outcome.table, original, child_labels, chain,
                                              bound, failure);
      chain.pop_back();
      if (!ok) return false;
    } while (next_tuple(digits, digit_sizes));
  }
  return true;
}

} // namespace detail

/// Top-down criterion: valid iff, for each region, hard-wiring every local
/// operation leaves a valid process on the remaining regions, grounding out
/// in the single-region and bipartite characterizations.  Reductions by a
/// fixed output value are the special case of constant operations and do not
/// suffice on their own (see pairwise_validate).
inline Verdict recursive_validate(const ProcessTable& w,
                                  std::uint64_t bound = default_brute_bound) {
  const int n = w.regions();
  if (n == 1) {
    Verdict v = check_single_region(w);
    v.method = Method::recursive;
    return v;
  }
  if (n == 2) {
    Verdict v = check_bipartite(w);
    v.method = Method::recursive;
    return v;
  }
  if (operation_tuple_count(w.shape()) > bound)
    throw BoundError("recursive_validate: " +
                     std::to_string(operation_tuple_count(w.shape())) +
                     " operation combinations exceed bound " + std::to_string(bound));
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i;
  std::vector<std::pair<int, LocalOperationTable>> chain;
  Verdict failure;
  if (detail::recursive_validate_impl(w, w, labels, chain, bound, failure)) {
    return Verdict{true, Method::recursive, std::nullopt};
  }
  return failure;
}

// ---------------------------------------------------------------------------
// Packed exact validity for uniform binary shapes (N <= 4): valid iff every
// hard-wiring of region 0 reduces to a valid process on the rest.  This is
// the allocation-free route the enumerator uses to confirm candidates that
// survive the pairwise masks.
// ---------------------------------------------------------------------------

namespace detail {

inline bool packed_reduce_region0(const PackedProcess& p, int op_id, PackedProcess& out) {
  const int n = p.n;
  const int m = 1 << (n - 1);
  const int m2 = 1 << (n - 2);
  out.n = n - 1;
  for (int j = 1; j < n; ++j) {
    std::uint8_t bits = 0;
    const int right = n - 1 - j; // variable slots right of region j among 1..n-1
    for (int t2 = 0; t2 < m2; ++t2) {
      int agreed = -1;
      for (int xj = 0; xj < 2; ++xj) {
        const unsigned t_full = (((static_cast<unsigned>(t2) >> right) << (right + 1)) |
                                 (static_cast<unsigned>(xj) << right) |
                                 (static_cast<unsigned>(t2) & ((1u << right) - 1u)));
        const int v0 = (p.comp[0] >> (m - 1 - static_cast<int>(t_full))) & 1;
        const int x0 = (op_id >> (1 - v0)) & 1;
        const unsigned tj = (static_cast<unsigned>(x0) << (n - 2)) | static_cast<unsigned>(t2);
        const int val =
            (p.comp[static_cast<std::size_t>(j)] >> (m - 1 - static_cast<int>(tj))) & 1;
        if (xj == 0)
          agreed = val;
        else if (val != agreed)
          return false; // own-output leak: not a process function
      }
      bits |= static_cast<std::uint8_t>(agreed << (m2 - 1 - t2));
    }
    out.comp[static_cast<std::size_t>(j - 1)] = bits;
  }
  return true;
}

inline bool packed_exact_valid(const PackedProcess& p) {
  if (p.n == 1) return true;
  if (p.n == 2) {
    auto constant = [](std::uint8_t c) { return c == 0 || c == 3; };
    return constant(p.comp[0]) || constant(p.comp[1]);
  }
  for (int op = 0; op < 4; ++op) {
    PackedProcess reduced;
    if (!packed_reduce_region0(p, op, reduced)) return false;
    if (!packed_exact_valid(reduced)) return false;
  }
  return true;
}

} // namespace detail

/// The unique consistent history for a valid process under the operations f.
/// Throws InvalidProcessError when the fixed point is not unique.
inline StateTuple simulate(const ProcessTable& w, const OperationTuple& f,
                           std::uint64_t scan_bound = default_brute_bound) {
  auto fps = fixed_points(w, f, scan_bound);
  if (fps.size() != 1) {
    std::string msg = "simulate: " + std::to_string(fps.size()) +
                      " fixed points under the given operations; not a process function";
    throw InvalidProcessError(msg);
  }
  return std::move(fps.front());
}

} // namespace pfn
