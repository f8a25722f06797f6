// Shared fixtures and independent oracles for the test suites.  The oracles
// here deliberately re-derive everything from first principles (their own
// index math, their own fixed-point loops) so they can cross-check the
// library rather than echo it.

#pragma once

#include <functional>
#include <map>
#include <random>

#include "pfn/io.hpp"

namespace pfn_test {

using pfn::ProcessShape;
using pfn::ProcessTable;
using pfn::StateTuple;

using ComponentFn = std::function<int(const StateTuple& x)>;

/// Expand per-component formulas into tables.  Each formula sees the full
/// output tuple; its own region's slot is filled with 0 and must be ignored.
inline ProcessTable make_process(const ProcessShape& shape,
                                 const std::vector<ComponentFn>& formulas) {
  const int n = shape.regions();
  std::vector<std::vector<int>> comps;
  for (int i = 0; i < n; ++i) {
    std::vector<int> others;
    std::vector<int> sizes;
    for (int j = 0; j < n; ++j)
      if (j != i) {
        others.push_back(j);
        sizes.push_back(shape.out_sizes[static_cast<std::size_t>(j)]);
      }
    std::vector<int> vals;
    StateTuple digits(others.size(), 0);
    StateTuple x(static_cast<std::size_t>(n), 0);
    do {
      for (std::size_t k = 0; k < others.size(); ++k)
        x[static_cast<std::size_t>(others[k])] = digits[k];
      vals.push_back(formulas[static_cast<std::size_t>(i)](x));
    } while (pfn::detail::next_tuple(digits, sizes));
    comps.push_back(std::move(vals));
  }
  return ProcessTable(shape, comps);
}

// The four stock processes, expanded from their defining formulas.  Tests
// compare these against the shipped .pfn files, so the files cannot drift.

inline ProcessTable cyclic4() {
  return make_process(ProcessShape::binary(4),
                      {
                          [](const StateTuple& x) { return x[3] & (x[1] ^ 1) & (x[2] ^ 1); },
                          [](const StateTuple& x) { return x[0] & (x[3] ^ 1) & (x[2] ^ 1); },
                          [](const StateTuple& x) { return x[1] & (x[0] ^ 1) & (x[3] ^ 1); },
                          [](const StateTuple& x) { return x[2] & (x[1] ^ 1) & (x[0] ^ 1); },
                      });
}

inline ProcessTable twisted4() {
  return make_process(
      ProcessShape::binary(4),
      {
          [](const StateTuple& x) { return x[1] & (x[2] ^ x[3]); },
          [](const StateTuple& x) { return x[2] & ((x[3] & (x[0] ^ 1)) ^ 1); },
          [](const StateTuple& x) { return x[3] & (x[0] ^ 1) & (x[1] ^ 1); },
          [](const StateTuple& x) { return x[0] & (x[1] ^ 1) & (x[2] ^ 1); },
      });
}

inline ProcessTable cyclic3() {
  return make_process(ProcessShape::binary(3),
                      {
                          [](const StateTuple& x) { return x[2] & (x[1] ^ 1); },
                          [](const StateTuple& x) { return x[0] & (x[2] ^ 1); },
                          [](const StateTuple& x) { return x[1] & (x[0] ^ 1); },
                      });
}

inline ProcessTable chain3() {
  return make_process(ProcessShape::binary(3),
                      {
                          [](const StateTuple&) { return 0; },
                          [](const StateTuple& x) { return x[0]; },
                          [](const StateTuple& x) { return x[0] ^ x[1]; },
                      });
}

inline ProcessTable twoway2() {
  return make_process(ProcessShape::binary(2),
                      {
                          [](const StateTuple& x) { return x[1]; },
                          [](const StateTuple& x) { return x[0]; },
                      });
}

inline std::string data_path(const std::string& name) {
  return std::string(PFN_DATA_DIR) + "/" + name;
}

inline std::string golden_path(const std::string& name) {
  return std::string(PFN_GOLDEN_DIR) + "/" + name;
}

inline ProcessTable load_data(const std::string& name) {
  return pfn::parse_pfn(pfn::read_file(data_path(name)), name).table;
}

/// Literal fixed-point validator: for every operation tuple, count the
/// consistent histories; valid means the count is always exactly one.
/// Independent of pfn::validate.
inline bool naive_valid(const ProcessTable& w) {
  const int n = w.regions();
  const auto& in = w.shape().in_sizes;
  const auto& out = w.shape().out_sizes;

  auto component_value = [&](int i, const StateTuple& x) {
    long long idx = 0;
    for (int j = 0; j < n; ++j)
      if (j != i) idx = idx * out[static_cast<std::size_t>(j)] + x[static_cast<std::size_t>(j)];
    return w.component(i).values[static_cast<std::size_t>(idx)];
  };

  // Operation tuples as concatenated digit vectors.
  std::vector<int> digit_sizes;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < in[static_cast<std::size_t>(i)]; ++k)
      digit_sizes.push_back(out[static_cast<std::size_t>(i)]);
  std::vector<int> op(digit_sizes.size(), 0);

  for (;;) {
    int fixed = 0;
    StateTuple a(static_cast<std::size_t>(n), 0);
    for (;;) {
      StateTuple x(static_cast<std::size_t>(n), 0);
      std::size_t base = 0;
      for (int i = 0; i < n; ++i) {
        x[static_cast<std::size_t>(i)] = op[base + static_cast<std::size_t>(a[static_cast<std::size_t>(i)])];
        base += static_cast<std::size_t>(in[static_cast<std::size_t>(i)]);
      }
      bool is_fixed = true;
      for (int i = 0; i < n; ++i)
        if (component_value(i, x) != a[static_cast<std::size_t>(i)]) {
          is_fixed = false;
          break;
        }
      if (is_fixed) ++fixed;
      if (!pfn::detail::next_tuple(a, in)) break;
    }
    if (fixed != 1) return false;
    if (!pfn::detail::next_tuple(op, digit_sizes)) break;
  }
  return true;
}

/// Reduced functions evaluated directly from their definitions, with
/// original region labels kept throughout.  Used to check the library's
/// table-level reductions pointwise, including reductions that are not
/// own-output independent (which the table representation cannot hold).
struct RawProcess {
  std::vector<int> labels; // ascending original labels
  std::function<int(int label, const std::map<int, int>& outputs)> eval;
};

inline RawProcess raw_from(const ProcessTable& w) {
  RawProcess raw;
  for (int i = 0; i < w.regions(); ++i) raw.labels.push_back(i);
  raw.eval = [w](int label, const std::map<int, int>& outputs) {
    StateTuple x(static_cast<std::size_t>(w.regions()), 0);
    for (const auto& [r, v] : outputs) x[static_cast<std::size_t>(r)] = v;
    return w.input(label, x);
  };
  return raw;
}

inline RawProcess raw_output_reduce(const RawProcess& base, int label, int value) {
  RawProcess raw;
  for (int l : base.labels)
    if (l != label) raw.labels.push_back(l);
  raw.eval = [base, label, value](int j, const std::map<int, int>& outputs) {
    auto inner = outputs;
    inner[label] = value;
    return base.eval(j, inner);
  };
  return raw;
}

inline RawProcess raw_operation_reduce(const RawProcess& base, int label, std::vector<int> f) {
  RawProcess raw;
  for (int l : base.labels)
    if (l != label) raw.labels.push_back(l);
  raw.eval = [base, label, f](int j, const std::map<int, int>& outputs) {
    auto inner = outputs;
    inner[label] = 0;
    const int v = base.eval(label, inner);
    inner[label] = f[static_cast<std::size_t>(v)];
    return base.eval(j, inner);
  };
  return raw;
}

/// Pointwise comparison of a reduced table against a raw reduced function
/// over every assignment of the remaining outputs (including each
/// component's own, which the raw side is free to inspect).
inline bool table_matches_raw(const ProcessTable& table, const RawProcess& raw,
                              const ProcessShape& original) {
  const int n = static_cast<int>(raw.labels.size());
  if (table.regions() != n) return false;
  std::vector<int> sizes;
  for (int l : raw.labels)
    sizes.push_back(original.out_sizes[static_cast<std::size_t>(l)]);
  StateTuple digits(static_cast<std::size_t>(n), 0);
  do {
    std::map<int, int> outputs;
    for (int p = 0; p < n; ++p)
      outputs[raw.labels[static_cast<std::size_t>(p)]] = digits[static_cast<std::size_t>(p)];
    for (int p = 0; p < n; ++p) {
      if (table.input(p, digits) != raw.eval(raw.labels[static_cast<std::size_t>(p)], outputs))
        return false;
    }
  } while (pfn::detail::next_tuple(digits, sizes));
  return true;
}

inline ProcessTable random_binary_process(int n, std::mt19937& rng) {
  std::uniform_int_distribution<int> coin(0, 1);
  std::vector<std::vector<int>> comps;
  for (int i = 0; i < n; ++i) {
    std::vector<int> vals(static_cast<std::size_t>(1) << (n - 1));
    for (auto& v : vals) v = coin(rng);
    comps.push_back(std::move(vals));
  }
  return ProcessTable(ProcessShape::binary(n), comps);
}

inline pfn::RelabellingElement random_relabelling(const ProcessShape& shape, std::mt19937& rng) {
  auto g = pfn::RelabellingElement::identity(shape);
  // Shuffle parties until the arrangement preserves alphabet sizes (one try
  // suffices for uniform shapes).
  for (;;) {
    std::shuffle(g.party_perm.begin(), g.party_perm.end(), rng);
    bool ok = true;
    for (std::size_t k = 0; k < g.party_perm.size(); ++k) {
      const auto old = static_cast<std::size_t>(g.party_perm[k]);
      ok = ok && shape.in_sizes[old] == shape.in_sizes[k] &&
           shape.out_sizes[old] == shape.out_sizes[k];
    }
    if (ok) break;
  }
  for (auto& m : g.in_maps) std::shuffle(m.begin(), m.end(), rng);
  for (auto& m : g.out_maps) std::shuffle(m.begin(), m.end(), rng);
  return g;
}

inline pfn::OperationTuple random_operations(const ProcessShape& shape, std::mt19937& rng) {
  pfn::OperationTuple f;
  for (int i = 0; i < shape.regions(); ++i) {
    pfn::LocalOperationTable op;
    op.region = i;
    std::uniform_int_distribution<int> pick(0, shape.out_sizes[static_cast<std::size_t>(i)] - 1);
    for (int a = 0; a < shape.in_sizes[static_cast<std::size_t>(i)]; ++a)
      op.values.push_back(pick(rng));
    f.operations.push_back(std::move(op));
  }
  return f;
}

} // namespace pfn_test
