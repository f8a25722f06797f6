// analysis.hpp -- signalling relations, conditional signalling tables in the
// style of "fix all outputs but two, read off the direction", and causal
// order diagnosis for valid process functions.

#pragma once

#include <map>
#include <string>
#include <unordered_map>

#include "pfn/validate.hpp"

namespace pfn {

/// True iff some change of region j's output changes region i's input.
inline bool can_signal(const ProcessTable& w, int j, int i) {
  const int n = w.regions();
  if (i < 0 || i >= n || j < 0 || j >= n)
    throw ShapeError("can_signal: region index out of range");
  if (i == j)
    throw ShapeError("can_signal: a region's input never depends on its own output");
  std::vector<int> frozen_regions;
  std::vector<int> frozen_sizes;
  for (int m = 0; m < n; ++m)
    if (m != i && m != j) {
      frozen_regions.push_back(m);
      frozen_sizes.push_back(w.shape().out_sizes[static_cast<std::size_t>(m)]);
    }
  StateTuple freeze(frozen_regions.size(), 0);
  do {
    if (!detail::is_constant(detail::component_restriction(w, i, j, frozen_regions, freeze)))
      return true;
  } while (detail::next_tuple(freeze, frozen_sizes));
  return false;
}

/// Ordered edges (j -> i): "j can signal to i".  Self-loops are impossible
/// by construction of the tables.
struct SignallingDigraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges; // sorted

  bool has_edge(int from, int to) const {
    return std::binary_search(edges.begin(), edges.end(), std::make_pair(from, to));
  }
};

inline SignallingDigraph signalling_digraph(const ProcessTable& w) {
  SignallingDigraph g;
  g.n = w.regions();
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i)
      if (i != j && can_signal(w, j, i)) g.edges.emplace_back(j, i);
  return g;
}

/// Direction of signalling surviving one particular freeze, or nothing.
using SignalDirection = std::optional<std::pair<int, int>>; // (from, to)

/// With every region outside {l, j} frozen to the given outputs, at most one
/// direction of signalling may survive for a valid process; finding both is
/// an integrity failure of whoever claimed the table valid.
inline SignalDirection conditional_signalling(const ProcessTable& w, int l, int j,
                                              const StateTuple& freeze) {
  const int n = w.regions();
  if (l == j || l < 0 || j < 0 || l >= n || j >= n)
    throw ShapeError("conditional_signalling: bad region pair");
  std::vector<int> frozen_regions;
  for (int m = 0; m < n; ++m)
    if (m != l && m != j) frozen_regions.push_back(m);
  if (freeze.size() != frozen_regions.size())
    throw ShapeError("conditional_signalling: freeze must cover exactly the other regions");
  const auto rl = detail::component_restriction(w, l, j, frozen_regions, freeze);
  const auto rj = detail::component_restriction(w, j, l, frozen_regions, freeze);
  const bool j_to_l = !detail::is_constant(rl);
  const bool l_to_j = !detail::is_constant(rj);
  if (j_to_l && l_to_j)
    throw IntegrityError("conditional_signalling: two-way signalling between regions " +
                         std::to_string(l + 1) + " and " + std::to_string(j + 1) +
                         " on a table claimed to be a process function");
  if (j_to_l) return std::make_pair(j, l);
  if (l_to_j) return std::make_pair(l, j);
  return std::nullopt;
}

struct ConditionalSignallingRow {
  StateTuple freeze;              // outputs of the frozen regions, ascending
  std::vector<int> restriction_l; // a_l over X_j
  std::vector<int> restriction_j; // a_j over X_l
  SignalDirection direction;
};

/// One row per assignment of the frozen regions' outputs, in rank order.
struct ConditionalSignallingTable {
  int region_l = 0;
  int region_j = 0;
  std::vector<int> frozen_regions;
  std::vector<ConditionalSignallingRow> rows;
};

inline ConditionalSignallingTable signalling_table(const ProcessTable& w, int l, int j) {
  const int n = w.regions();
  if (n < 3) throw ShapeError("signalling_table: needs at least three regions");
  if (l > j) std::swap(l, j);
  if (l == j || l < 0 || j >= n) throw ShapeError("signalling_table: bad region pair");
  ConditionalSignallingTable table;
  table.region_l = l;
  table.region_j = j;
  std::vector<int> frozen_sizes;
  for (int m = 0; m < n; ++m)
    if (m != l && m != j) {
      table.frozen_regions.push_back(m);
      frozen_sizes.push_back(w.shape().out_sizes[static_cast<std::size_t>(m)]);
    }
  StateTuple freeze(table.frozen_regions.size(), 0);
  do {
    ConditionalSignallingRow row;
    row.freeze = freeze;
    row.restriction_l = detail::component_restriction(w, l, j, table.frozen_regions, freeze);
    row.restriction_j = detail::component_restriction(w, j, l, table.frozen_regions, freeze);
    row.direction = conditional_signalling(w, l, j, freeze);
    table.rows.push_back(std::move(row));
  } while (detail::next_tuple(freeze, frozen_sizes));
  return table;
}

/// How compatible with causal order a valid process is.
///
///  - fixed_order: a topological order of the signalling digraph, when one
///    exists (inputs depend only on strictly earlier outputs).
///  - dynamically_causal: some region goes first (its input is constant) and,
///    whatever operation it applies, the remaining process is again
///    dynamically causal; the order may depend on earlier operations.
///  - genuinely_non_causal: no dynamical order and no region is globally
///    first (no in-edges) or globally last (no out-edges).
struct CausalDiagnosis {
  std::optional<std::vector<int>> fixed_order;
  bool dynamically_causal = false;
  std::vector<int> first_regions;
  std::vector<int> last_regions;
  bool genuinely_non_causal = false;
};

namespace detail {

inline std::optional<std::vector<int>> topological_order(const SignallingDigraph& g) {
  std::vector<int> indegree(static_cast<std::size_t>(g.n), 0);
  for (auto [from, to] : g.edges) {
    (void)from;
    ++indegree[static_cast<std::size_t>(to)];
  }
  std::vector<int> order;
  std::vector<bool> placed(static_cast<std::size_t>(g.n), false);
  for (int step = 0; step < g.n; ++step) {
    int next = -1;
    for (int v = 0; v < g.n; ++v)
      if (!placed[static_cast<std::size_t>(v)] && indegree[static_cast<std::size_t>(v)] == 0) {
        next = v;
        break;
      }
    if (next < 0) return std::nullopt; // cycle
    placed[static_cast<std::size_t>(next)] = true;
    order.push_back(next);
    for (auto [from, to] : g.edges)
      if (from == next && !placed[static_cast<std::size_t>(to)])
        --indegree[static_cast<std::size_t>(to)];
  }
  return order;
}

// A region with a constant component admits only |X_i| distinct hard-wired
// reductions (the operation only matters through the value it sends), so
// "for every local operation" collapses to "for every output value".
inline bool dynamically_causal_impl(const ProcessTable& w,
                                    std::unordered_map<std::string, bool>& memo) {
  if (w.regions() == 1) return true;
  const std::string key = serialize_body(w);
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  bool result = false;
  for (int i = 0; i < w.regions() && !result; ++i) {
    if (!is_constant(w.component(i).values)) continue;
    bool all_children = true;
    for (int v = 0; v < w.shape().out_sizes[static_cast<std::size_t>(i)]; ++v) {
      if (!dynamically_causal_impl(output_reduce(w, i, v).table, memo)) {
        all_children = false;
        break;
      }
    }
    result = all_children;
  }
  memo.emplace(key, result);
  return result;
}

} // namespace detail

inline bool dynamically_causal(const ProcessTable& w) {
  std::unordered_map<std::string, bool> memo;
  return detail::dynamically_causal_impl(w, memo);
}

/// Full causal-structure report for a valid process function.  Rejects
/// invalid tables.
inline CausalDiagnosis causal_diagnosis(const ProcessTable& w) {
  if (!pairwise_validate(w).valid)
    throw InvalidProcessError("causal_diagnosis: table is not a valid process function");
  CausalDiagnosis d;
  const SignallingDigraph g = signalling_digraph(w);
  d.fixed_order = detail::topological_order(g);
  d.dynamically_causal = dynamically_causal(w);
  std::vector<bool> has_in(static_cast<std::size_t>(g.n), false);
  std::vector<bool> has_out(static_cast<std::size_t>(g.n), false);
  for (auto [from, to] : g.edges) {
    has_out[static_cast<std::size_t>(from)] = true;
    has_in[static_cast<std::size_t>(to)] = true;
  }
  for (int v = 0; v < g.n; ++v) {
    if (!has_in[static_cast<std::size_t>(v)]) d.first_regions.push_back(v);
    if (!has_out[static_cast<std::size_t>(v)]) d.last_regions.push_back(v);
  }
  d.genuinely_non_causal =
      !d.dynamically_causal && d.first_regions.empty() && d.last_regions.empty();
  return d;
}

} // namespace pfn
