// core.hpp -- finite-alphabet process tables and their pure evaluation.
//
// A process on N regions maps the outputs x = (x_1,...,x_N) of all regions
// to the inputs a = (a_1,...,a_N), with the defining restriction that the
// input of a region never depends on that region's own output.  The
// representation enforces this structurally: component i is a truth table
// indexed by the outputs of every region except i.

#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pfn {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed states, mismatched shapes, out-of-range digits.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// A requested exhaustive computation exceeds its configured bound.
/// Callers must switch to a cheaper route; nothing is sampled silently.
class BoundError : public Error {
public:
  using Error::Error;
};

/// An internal cross-check failed (e.g. two oracles disagree, or a table
/// that was claimed valid shows two-way conditional signalling).
class IntegrityError : public Error {
public:
  using Error::Error;
};

/// A table is not a valid process function where one was required.
class InvalidProcessError : public Error {
public:
  using Error::Error;
};

/// One digit per position, digit k in position i satisfying 0 <= k < size_i
/// for whichever alphabet sequence the tuple ranges over.
using StateTuple = std::vector<int>;

namespace detail {

inline std::uint64_t checked_product(std::span<const int> sizes, const char* what) {
  std::uint64_t p = 1;
  for (int s : sizes) {
    if (s < 1)
      throw ShapeError(std::string(what) + ": alphabet sizes must be >= 1");
    if (p > std::numeric_limits<std::uint64_t>::max() / static_cast<std::uint64_t>(s))
      throw ShapeError(std::string(what) + ": state count overflows");
    p *= static_cast<std::uint64_t>(s);
  }
  return p;
}

inline std::vector<int> erase_at(std::vector<int> v, int i) {
  v.erase(v.begin() + i);
  return v;
}

inline std::vector<int> insert_at(std::vector<int> v, int i, int value) {
  v.insert(v.begin() + i, value);
  return v;
}

// Odometer increment over mixed-radix digits, last digit fastest, so
// successive states enumerate ranks 0,1,2,...  Returns false on wrap.
inline bool next_tuple(std::vector<int>& digits, std::span<const int> sizes) {
  for (int i = static_cast<int>(digits.size()) - 1; i >= 0; --i) {
    if (++digits[static_cast<std::size_t>(i)] < sizes[static_cast<std::size_t>(i)])
      return true;
    digits[static_cast<std::size_t>(i)] = 0;
  }
  return false;
}

} // namespace detail

/// Number of regions plus the per-region input (past-boundary) and output
/// (future-boundary) alphabet sizes.
struct ProcessShape {
  std::vector<int> in_sizes;  // |A_i|
  std::vector<int> out_sizes; // |X_i|

  ProcessShape() = default;

  ProcessShape(std::vector<int> in, std::vector<int> out)
      : in_sizes(std::move(in)), out_sizes(std::move(out)) {
    if (in_sizes.empty() || in_sizes.size() != out_sizes.size())
      throw ShapeError("shape: need one input and one output alphabet per region");
    detail::checked_product(in_sizes, "shape inputs");
    detail::checked_product(out_sizes, "shape outputs");
  }

  static ProcessShape binary(int n_regions) {
    if (n_regions < 1)
      throw ShapeError("shape: need at least one region");
    return ProcessShape(std::vector<int>(static_cast<std::size_t>(n_regions), 2),
                        std::vector<int>(static_cast<std::size_t>(n_regions), 2));
  }

  int regions() const { return static_cast<int>(in_sizes.size()); }

  bool is_binary() const {
    for (int s : in_sizes)
      if (s != 2) return false;
    for (int s : out_sizes)
      if (s != 2) return false;
    return true;
  }

  std::uint64_t input_states() const { return detail::checked_product(in_sizes, "inputs"); }
  std::uint64_t output_states() const { return detail::checked_product(out_sizes, "outputs"); }

  friend bool operator==(const ProcessShape&, const ProcessShape&) = default;
};

/// Mixed-radix rank of a digit tuple: ascending position index, leftmost
/// digit most significant.  Bijective onto [0, prod(sizes)).
inline std::uint64_t rank(std::span<const int> digits, std::span<const int> sizes) {
  if (digits.size() != sizes.size())
    throw ShapeError("rank: tuple length does not match alphabet count");
  std::uint64_t r = 0;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (digits[i] < 0 || digits[i] >= sizes[i])
      throw ShapeError("rank: digit " + std::to_string(digits[i]) + " out of range [0," +
                       std::to_string(sizes[i]) + ") at position " + std::to_string(i));
    r = r * static_cast<std::uint64_t>(sizes[i]) + static_cast<std::uint64_t>(digits[i]);
  }
  return r;
}

inline std::uint64_t rank(const StateTuple& digits, const std::vector<int>& sizes) {
  return rank(std::span<const int>(digits), std::span<const int>(sizes));
}

/// Inverse of rank.
inline StateTuple unrank(std::uint64_t r, std::span<const int> sizes) {
  std::uint64_t total = detail::checked_product(sizes, "unrank");
  if (r >= total)
    throw ShapeError("unrank: rank " + std::to_string(r) + " out of range");
  StateTuple digits(sizes.size(), 0);
  for (std::size_t i = sizes.size(); i-- > 0;) {
    auto s = static_cast<std::uint64_t>(sizes[i]);
    digits[i] = static_cast<int>(r % s);
    r /= s;
  }
  return digits;
}

inline StateTuple unrank(std::uint64_t r, const std::vector<int>& sizes) {
  return unrank(r, std::span<const int>(sizes));
}

/// Truth table of one process component: the input fed to `region` for every
/// combination of the other regions' outputs, indexed by the mixed-radix rank
/// of x-without-region (ascending region index, leftmost most significant).
struct ComponentTable {
  int region = 0;
  std::vector<int> values;

  friend bool operator==(const ComponentTable&, const ComponentTable&) = default;
};

/// A candidate process function w as N component tables.  Region i's own
/// output is excluded from component i's index space, so self-dependence is
/// unrepresentable.  Whether the table is a *valid* process function (unique
/// fixed point for every operation tuple) is decided by the validators, not
/// by this type.
class ProcessTable {
public:
  ProcessTable() = default;

  ProcessTable(ProcessShape shape, std::vector<std::vector<int>> component_values)
      : shape_(std::move(shape)) {
    const int n = shape_.regions();
    if (static_cast<int>(component_values.size()) != n)
      throw ShapeError("process: need exactly one component per region");
    components_.reserve(component_values.size());
    for (int i = 0; i < n; ++i) {
      auto& vals = component_values[static_cast<std::size_t>(i)];
      const std::uint64_t want = domain_size_for(shape_, i);
      if (vals.size() != want)
        throw ShapeError("process: component " + std::to_string(i + 1) + " has " +
                         std::to_string(vals.size()) + " entries, expected " +
                         std::to_string(want));
      const int limit = shape_.in_sizes[static_cast<std::size_t>(i)];
      for (int v : vals)
        if (v < 0 || v >= limit)
          throw ShapeError("process: component " + std::to_string(i + 1) + " value " +
                           std::to_string(v) + " out of range [0," + std::to_string(limit) + ")");
      components_.push_back(ComponentTable{i, std::move(vals)});
    }
  }

  const ProcessShape& shape() const { return shape_; }
  int regions() const { return shape_.regions(); }
  const std::vector<ComponentTable>& components() const { return components_; }
  const ComponentTable& component(int i) const {
    return components_.at(static_cast<std::size_t>(i));
  }

  /// Entry count of component i: prod over j != i of |X_j|.
  static std::uint64_t domain_size_for(const ProcessShape& shape, int i) {
    std::uint64_t p = 1;
    for (int j = 0; j < shape.regions(); ++j)
      if (j != i) p *= static_cast<std::uint64_t>(shape.out_sizes[static_cast<std::size_t>(j)]);
    return p;
  }

  /// a_i for a full output assignment x; x_i is ignored by construction.
  int input(int i, const StateTuple& x) const {
    const int n = regions();
    if (static_cast<int>(x.size()) != n)
      throw ShapeError("input: output tuple length does not match region count");
    std::uint64_t r = 0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const int s = shape_.out_sizes[static_cast<std::size_t>(j)];
      const int d = x[static_cast<std::size_t>(j)];
      if (d < 0 || d >= s)
        throw ShapeError("input: output digit out of range at region " + std::to_string(j + 1));
      r = r * static_cast<std::uint64_t>(s) + static_cast<std::uint64_t>(d);
    }
    return components_[static_cast<std::size_t>(i)].values[r];
  }

  friend bool operator==(const ProcessTable&, const ProcessTable&) = default;

private:
  ProcessShape shape_;
  std::vector<ComponentTable> components_;
};

/// w: X -> A, componentwise.
inline StateTuple apply(const ProcessTable& w, const StateTuple& x) {
  const int n = w.regions();
  StateTuple a(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i)
    a[static_cast<std::size_t>(i)] = w.input(i, x);
  return a;
}

/// One local operation f_i: A_i -> X_i as a lookup table over A_i.
struct LocalOperationTable {
  int region = 0;
  std::vector<int> values;

  friend bool operator==(const LocalOperationTable&, const LocalOperationTable&) = default;
};

/// One local operation per region.
struct OperationTuple {
  std::vector<LocalOperationTable> operations;

  friend bool operator==(const OperationTuple&, const OperationTuple&) = default;
};

inline void check_compatible(const ProcessShape& shape, const OperationTuple& f) {
  const int n = shape.regions();
  if (static_cast<int>(f.operations.size()) != n)
    throw ShapeError("operations: need exactly one local operation per region");
  for (int i = 0; i < n; ++i) {
    const auto& op = f.operations[static_cast<std::size_t>(i)];
    if (op.region != i)
      throw ShapeError("operations: region indices must be 0..N-1 in order");
    if (op.values.size() != static_cast<std::size_t>(shape.in_sizes[static_cast<std::size_t>(i)]))
      throw ShapeError("operations: table for region " + std::to_string(i + 1) +
                       " has wrong length");
    for (int v : op.values)
      if (v < 0 || v >= shape.out_sizes[static_cast<std::size_t>(i)])
        throw ShapeError("operations: value out of range for region " + std::to_string(i + 1));
  }
}

/// x = f(a), componentwise.
inline StateTuple outputs(const OperationTuple& f, const StateTuple& a) {
  StateTuple x(a.size(), 0);
  for (std::size_t i = 0; i < a.size(); ++i)
    x[i] = f.operations[i].values[static_cast<std::size_t>(a[i])];
  return x;
}

/// One round of the self-consistency loop: (w o f)(a) = w(f(a)).
/// A history a is consistent exactly when it is a fixed point of this map.
inline StateTuple loop_map(const ProcessTable& w, const OperationTuple& f, const StateTuple& a) {
  check_compatible(w.shape(), f);
  if (a.size() != static_cast<std::size_t>(w.regions()))
    throw ShapeError("loop_map: state length does not match region count");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] < 0 || a[i] >= w.shape().in_sizes[i])
      throw ShapeError("loop_map: input digit out of range at region " + std::to_string(i + 1));
  return pfn::apply(w, pfn::outputs(f, a));
}

/// Deterministic text encoding of a table: shape header plus the component
/// tables in rank order.  This is the byte representation shared by the
/// `.pfn` file body and by canonical keys, so it must never change shape.
inline std::string serialize_body(const ProcessTable& w) {
  std::string out;
  const int n = w.regions();
  out += "parties " + std::to_string(n) + "\n";
  out += "in";
  for (int s : w.shape().in_sizes) out += " " + std::to_string(s);
  out += "\nout";
  for (int s : w.shape().out_sizes) out += " " + std::to_string(s);
  out += "\n";
  for (int i = 0; i < n; ++i) {
    out += "w " + std::to_string(i + 1) + " :";
    for (int v : w.component(i).values) out += " " + std::to_string(v);
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Packed representation for uniform binary shapes, N <= 4.
//
// Component i has M = 2^(N-1) binary entries; entry t (the rank of
// x-without-i) is stored at bit (M-1-t), so integer order on the packed
// component equals lexicographic order on its value sequence.  State tuples
// pack the same way: region i's digit at bit (N-1-i).
// ---------------------------------------------------------------------------

struct PackedProcess {
  static constexpr int max_regions = 4;

  int n = 0;
  std::array<std::uint8_t, 4> comp{};

  int table_bits() const { return 1 << (n - 1); }

  /// Components concatenated, component 0 most significant.
  std::uint32_t key() const {
    std::uint32_t k = 0;
    for (int i = 0; i < n; ++i)
      k = (k << 8) | comp[static_cast<std::size_t>(i)];
    return k;
  }

  friend bool operator==(const PackedProcess&, const PackedProcess&) = default;
};

inline bool packable(const ProcessShape& shape) {
  return shape.is_binary() && shape.regions() <= PackedProcess::max_regions;
}

inline PackedProcess pack(const ProcessTable& w) {
  if (!packable(w.shape()))
    throw ShapeError("pack: only uniform binary shapes with at most 4 regions");
  PackedProcess p;
  p.n = w.regions();
  const int m = p.table_bits();
  for (int i = 0; i < p.n; ++i) {
    std::uint8_t bits = 0;
    const auto& vals = w.component(i).values;
    for (int t = 0; t < m; ++t)
      bits |= static_cast<std::uint8_t>(vals[static_cast<std::size_t>(t)] << (m - 1 - t));
    p.comp[static_cast<std::size_t>(i)] = bits;
  }
  return p;
}

inline ProcessTable unpack(const PackedProcess& p) {
  const int m = p.table_bits();
  std::vector<std::vector<int>> comps;
  comps.reserve(static_cast<std::size_t>(p.n));
  for (int i = 0; i < p.n; ++i) {
    std::vector<int> vals(static_cast<std::size_t>(m), 0);
    for (int t = 0; t < m; ++t)
      vals[static_cast<std::size_t>(t)] = (p.comp[static_cast<std::size_t>(i)] >> (m - 1 - t)) & 1;
    comps.push_back(std::move(vals));
  }
  return ProcessTable(ProcessShape::binary(p.n), std::move(comps));
}

/// Drop region i's bit from an n-bit output mask, keeping region 0 most
/// significant; the result is the rank of x-without-i.
inline unsigned drop_bit(unsigned x_mask, int n, int i) {
  const unsigned low = x_mask & ((1u << (n - 1 - i)) - 1u);
  const unsigned high = (x_mask >> (n - i)) << (n - 1 - i);
  return high | low;
}

inline int packed_input(const PackedProcess& p, int i, unsigned x_mask) {
  const int m = p.table_bits();
  const unsigned t = drop_bit(x_mask, p.n, i);
  return (p.comp[static_cast<std::size_t>(i)] >> (m - 1 - static_cast<int>(t))) & 1;
}

inline unsigned packed_apply(const PackedProcess& p, unsigned x_mask) {
  unsigned a = 0;
  for (int i = 0; i < p.n; ++i)
    a |= static_cast<unsigned>(packed_input(p, i, x_mask)) << (p.n - 1 - i);
  return a;
}

/// Binary operation tuple, one id in [0,4) per region:
/// f_i(a) = (id >> (1-a)) & 1, so ascending ids enumerate the four tables
/// const0, identity, negation, const1 in lexicographic table order.
struct PackedOps {
  int n = 0;
  std::array<std::uint8_t, 4> op{};
};

inline unsigned packed_outputs(const PackedOps& f, unsigned a_mask, int n) {
  unsigned x = 0;
  for (int i = 0; i < n; ++i) {
    const unsigned a_i = (a_mask >> (n - 1 - i)) & 1u;
    const unsigned x_i = (f.op[static_cast<std::size_t>(i)] >> (1u - a_i)) & 1u;
    x |= x_i << (n - 1 - i);
  }
  return x;
}

inline unsigned packed_loop(const PackedProcess& p, const PackedOps& f, unsigned a_mask) {
  return packed_apply(p, packed_outputs(f, a_mask, p.n));
}

} // namespace pfn
