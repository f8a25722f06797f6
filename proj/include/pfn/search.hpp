// search.hpp -- exhaustive enumeration of all valid binary N-partite process
// functions (N <= 4).  Every valid tuple keeps each pair of components at
// most one-way signalling under every freeze of the other outputs, so the
// bulk of the space is discarded by intersecting per-pair compatibility
// bitmasks.  The freeze condition is necessary but not sufficient (causal
// copy cycles slip through it), so each surviving tuple is confirmed by the
// exact operational reduction check before being emitted.

#pragma once

#include <bit>
#include <functional>

#include "pfn/equivalence.hpp"

namespace pfn {

inline constexpr int max_search_regions = 4;

namespace detail {

inline void require_searchable(const ProcessShape& shape) {
  if (!shape.is_binary())
    throw BoundError("search: only uniform binary shapes are supported");
  if (shape.regions() > max_search_regions)
    throw BoundError("search: at most " + std::to_string(max_search_regions) + " regions");
}

} // namespace detail

/// Membership mask over (candidate component for l) x (candidate component
/// for j): bit set iff every freeze of the remaining regions' outputs leaves
/// the restricted pair at most one-way signalling.
struct PairCompatibilityRelation {
  int region_l = 0;
  int region_j = 0;
  int l_count = 0;
  int j_count = 0;
  int words_per_row = 0;
  std::vector<std::uint64_t> bits;

  bool compatible(int u, int v) const {
    return (bits[static_cast<std::size_t>(u) * static_cast<std::size_t>(words_per_row) +
                 static_cast<std::size_t>(v >> 6)] >>
            (v & 63)) &
           1u;
  }

  std::span<const std::uint64_t> row(int u) const {
    return {bits.data() + static_cast<std::size_t>(u) * static_cast<std::size_t>(words_per_row),
            static_cast<std::size_t>(words_per_row)};
  }
};

inline PairCompatibilityRelation pair_compatibility(const ProcessShape& shape, int l, int j) {
  detail::require_searchable(shape);
  const int n = shape.regions();
  if (l == j || l < 0 || j < 0 || l >= n || j >= n)
    throw ShapeError("pair_compatibility: bad region pair");

  const int m = 1 << (n - 1);        // entries per component table
  const int candidates = 1 << m;     // binary tables over n-1 regions
  const int freezes = 1 << (n - 2 < 0 ? 0 : n - 2);

  // Entry index of component `comp` for a given freeze of the regions
  // outside {l, j} and a given value of the varying region.
  auto entry_index = [&](int comp, int vary, unsigned freeze, int vary_value) {
    StateTuple x(static_cast<std::size_t>(n), 0);
    int bit = n - 3;
    for (int r = 0; r < n; ++r) {
      if (r == l || r == j) continue;
      x[static_cast<std::size_t>(r)] = static_cast<int>((freeze >> bit) & 1u);
      --bit;
    }
    x[static_cast<std::size_t>(vary)] = vary_value;
    unsigned t = 0;
    for (int r = 0; r < n; ++r)
      if (r != comp) t = (t << 1) | static_cast<unsigned>(x[static_cast<std::size_t>(r)]);
    return t;
  };

  // For each freeze, the two table positions each side reads while the other
  // side's output sweeps {0,1}.
  std::vector<std::array<unsigned, 2>> l_slots(static_cast<std::size_t>(freezes));
  std::vector<std::array<unsigned, 2>> j_slots(static_cast<std::size_t>(freezes));
  for (int z = 0; z < freezes; ++z) {
    for (int v = 0; v < 2; ++v) {
      l_slots[static_cast<std::size_t>(z)][static_cast<std::size_t>(v)] =
          entry_index(l, j, static_cast<unsigned>(z), v);
      j_slots[static_cast<std::size_t>(z)][static_cast<std::size_t>(v)] =
          entry_index(j, l, static_cast<unsigned>(z), v);
    }
  }

  auto bit_of = [&](int table, unsigned t) { return (table >> (m - 1 - static_cast<int>(t))) & 1; };

  PairCompatibilityRelation rel;
  rel.region_l = l;
  rel.region_j = j;
  rel.l_count = candidates;
  rel.j_count = candidates;
  rel.words_per_row = (candidates + 63) / 64;
  rel.bits.assign(static_cast<std::size_t>(candidates) *
                      static_cast<std::size_t>(rel.words_per_row),
                  0);
  for (int u = 0; u < candidates; ++u) {
    for (int v = 0; v < candidates; ++v) {
      bool ok = true;
      for (int z = 0; z < freezes && ok; ++z) {
        const bool u_const = bit_of(u, l_slots[static_cast<std::size_t>(z)][0]) ==
                             bit_of(u, l_slots[static_cast<std::size_t>(z)][1]);
        const bool v_const = bit_of(v, j_slots[static_cast<std::size_t>(z)][0]) ==
                             bit_of(v, j_slots[static_cast<std::size_t>(z)][1]);
        ok = u_const || v_const;
      }
      if (ok)
        rel.bits[static_cast<std::size_t>(u) * static_cast<std::size_t>(rel.words_per_row) +
                 static_cast<std::size_t>(v >> 6)] |= 1ull << (v & 63);
    }
  }
  return rel;
}

enum class EmitMode { count, tables, keys };

/// Work order for one enumeration run.  Shards partition the candidate
/// tables of region 1 round-robin; their emissions are disjoint and their
/// union is the full valid set.
struct SearchPlan {
  ProcessShape shape;
  int shard_count = 1;
  int shard_index = 0;
  EmitMode emit = EmitMode::count;
};

struct SearchStats {
  std::uint64_t emitted = 0;
};

using EmitFn = std::function<void(const PackedProcess&)>;
using ProgressFn = std::function<void(int shard, double percent, std::uint64_t found)>;

namespace detail {

struct CandidateSet {
  std::array<std::uint64_t, 4> words{};

  static CandidateSet all(int count) {
    CandidateSet s;
    for (int b = 0; b < count; ++b) s.words[static_cast<std::size_t>(b >> 6)] |= 1ull << (b & 63);
    return s;
  }

  void intersect(std::span<const std::uint64_t> row) {
    for (std::size_t k = 0; k < row.size(); ++k) words[k] &= row[k];
    for (std::size_t k = row.size(); k < words.size(); ++k) words[k] = 0;
  }

  int popcount(int word_count) const {
    int c = 0;
    for (int k = 0; k < word_count; ++k)
      c += std::popcount(words[static_cast<std::size_t>(k)]);
    return c;
  }
};

} // namespace detail

/// Depth-first enumeration over regions, intersecting pair-compatibility
/// rows; emission order within a shard is lexicographic by component tables.
/// Pass a null emit to count without materializing.
inline SearchStats enumerate_processes(const SearchPlan& plan, const EmitFn& emit = {},
                                       const ProgressFn& progress = {}) {
  detail::require_searchable(plan.shape);
  if (plan.shard_count < 1 || plan.shard_index < 0 || plan.shard_index >= plan.shard_count)
    throw ShapeError("search: shard index must lie in [0, shard_count)");
  const int n = plan.shape.regions();
  const int m = 1 << (n - 1);
  const int candidates = 1 << m;
  const int words = (candidates + 63) / 64;

  SearchStats stats;
  if (n == 1) {
    // No pairs to constrain: both constants are valid.
    for (int c = 0; c < candidates; ++c) {
      if (c % plan.shard_count != plan.shard_index) continue;
      ++stats.emitted;
      if (emit) {
        PackedProcess p;
        p.n = 1;
        p.comp[0] = static_cast<std::uint8_t>(c);
        emit(p);
      }
    }
    if (progress) progress(plan.shard_index, 100.0, stats.emitted);
    return stats;
  }

  std::vector<std::vector<PairCompatibilityRelation>> masks(static_cast<std::size_t>(n));
  for (int l = 0; l < n; ++l) {
    masks[static_cast<std::size_t>(l)].resize(static_cast<std::size_t>(n));
    for (int j = l + 1; j < n; ++j)
      masks[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)] =
          pair_compatibility(plan.shape, l, j);
  }

  PackedProcess current;
  current.n = n;
  // sets[depth][k]: candidates still open for region k after fixing 0..depth-1.
  std::vector<std::vector<detail::CandidateSet>> sets(
      static_cast<std::size_t>(n + 1),
      std::vector<detail::CandidateSet>(static_cast<std::size_t>(n),
                                        detail::CandidateSet::all(candidates)));

  auto descend = [&](auto&& self, int depth) -> void {
    const auto& open = sets[static_cast<std::size_t>(depth)][static_cast<std::size_t>(depth)];
    for (int c = 0; c < candidates; ++c) {
      if (depth == 0 && c % plan.shard_count != plan.shard_index) continue;
      if (!((open.words[static_cast<std::size_t>(c >> 6)] >> (c & 63)) & 1u)) continue;
      current.comp[static_cast<std::size_t>(depth)] = static_cast<std::uint8_t>(c);
      if (depth + 1 == n) {
        if (!detail::packed_exact_valid(current)) continue;
        ++stats.emitted;
        if (emit) emit(current);
        continue;
      }
      bool alive = true;
      for (int k = depth + 1; k < n; ++k) {
        auto& next = sets[static_cast<std::size_t>(depth + 1)][static_cast<std::size_t>(k)];
        next = sets[static_cast<std::size_t>(depth)][static_cast<std::size_t>(k)];
        next.intersect(
            masks[static_cast<std::size_t>(depth)][static_cast<std::size_t>(k)].row(c));
        if (next.popcount(words) == 0) {
          alive = false;
          break;
        }
      }
      if (alive) self(self, depth + 1);
      if (depth == 0 && progress)
        progress(plan.shard_index, 100.0 * (c + 1) / candidates, stats.emitted);
    }
  };
  descend(descend, 0);
  if (progress) progress(plan.shard_index, 100.0, stats.emitted);
  return stats;
}

inline std::uint64_t count_processes(const SearchPlan& plan) {
  return enumerate_processes(plan).emitted;
}

// ---------------------------------------------------------------------------
// Fast classification of enumeration streams.
//
// Canonicalizing every emission from scratch would redo the full orbit per
// table.  Instead, the first member of each orbit that shows up pays for one
// orbit expansion; every later member is a single hash lookup.
// ---------------------------------------------------------------------------

namespace detail {

// Insert-only open-addressing map from packed process key to class index.
class PackedKeyMap {
public:
  PackedKeyMap() { rehash(1u << 16); }

  // Returns the class index, or UINT32_MAX when absent.
  std::uint32_t find(std::uint32_t key) const {
    std::size_t i = slot(key);
    while (slots_[i] != kEmpty) {
      if (static_cast<std::uint32_t>(slots_[i] >> 32) == key)
        return static_cast<std::uint32_t>(slots_[i]);
      i = (i + 1) & mask_;
    }
    return UINT32_MAX;
  }

  void insert(std::uint32_t key, std::uint32_t value) {
    if ((size_ + 1) * 10 >= capacity_ * 7) rehash(capacity_ * 2);
    std::size_t i = slot(key);
    while (slots_[i] != kEmpty) {
      if (static_cast<std::uint32_t>(slots_[i] >> 32) == key) return; // first wins
      i = (i + 1) & mask_;
    }
    slots_[i] = (static_cast<std::uint64_t>(key) << 32) | value;
    ++size_;
  }

  std::size_t size() const { return size_; }

private:
  static constexpr std::uint64_t kEmpty = ~0ull;

  std::size_t slot(std::uint32_t key) const {
    std::uint64_t h = key;
    h *= 0x9e3779b97f4a7c15ull;
    h ^= h >> 29;
    return static_cast<std::size_t>(h) & mask_;
  }

  void rehash(std::size_t capacity) {
    std::vector<std::uint64_t> old = std::move(slots_);
    capacity_ = capacity;
    mask_ = capacity - 1;
    slots_.assign(capacity, kEmpty);
    size_ = 0;
    for (std::uint64_t s : old)
      if (s != kEmpty) insert(static_cast<std::uint32_t>(s >> 32),
                              static_cast<std::uint32_t>(s));
  }

  std::vector<std::uint64_t> slots_;
  std::size_t capacity_ = 0;
  std::size_t mask_ = 0;
  std::size_t size_ = 0;
};

// Relabelling element specialized to uniform binary shapes: a party
// permutation plus one input-flip and one output-flip bit per (old) region.
struct PackedRelabelling {
  std::array<int, 4> perm{};
  unsigned in_flips = 0;  // bit i: negate old region i's input value
  unsigned out_flips = 0; // bit i: negate old region i's output variable
};

inline PackedProcess packed_relabel(const PackedProcess& p, const PackedRelabelling& g) {
  const int n = p.n;
  const int m = p.table_bits();
  std::array<int, 4> inv_perm{}; // old region -> new region
  for (int q = 0; q < n; ++q)
    inv_perm[static_cast<std::size_t>(g.perm[static_cast<std::size_t>(q)])] = q;
  // Variable layout: position of region r in the ascending list skipping s.
  auto var_pos = [](int r, int s) { return r < s ? r : r - 1; };
  PackedProcess out;
  out.n = n;
  for (int k = 0; k < n; ++k) {
    const int old = g.perm[static_cast<std::size_t>(k)];
    const std::uint8_t tt = p.comp[static_cast<std::size_t>(old)];
    std::uint8_t result = 0;
    for (int t_new = 0; t_new < m; ++t_new) {
      unsigned t_old = 0;
      for (int r = 0; r < n; ++r) { // r: old region index, skip `old`
        if (r == old) continue;
        const int nk = inv_perm[static_cast<std::size_t>(r)];
        unsigned bit =
            (static_cast<unsigned>(t_new) >> (m == 1 ? 0 : (n - 2 - var_pos(nk, k)))) & 1u;
        if ((g.out_flips >> r) & 1u) bit ^= 1u;
        t_old = (t_old << 1) | bit;
      }
      unsigned value = (tt >> (m - 1 - static_cast<int>(t_old))) & 1u;
      if ((g.in_flips >> old) & 1u) value ^= 1u;
      result |= static_cast<std::uint8_t>(value << (m - 1 - t_new));
    }
    out.comp[static_cast<std::size_t>(k)] = result;
  }
  return out;
}

inline std::vector<PackedRelabelling> packed_group(int n) {
  std::vector<PackedRelabelling> group;
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  do {
    for (unsigned in_flips = 0; in_flips < (1u << n); ++in_flips)
      for (unsigned out_flips = 0; out_flips < (1u << n); ++out_flips) {
        PackedRelabelling g;
        for (int i = 0; i < n; ++i) g.perm[static_cast<std::size_t>(i)] = perm[static_cast<std::size_t>(i)];
        g.in_flips = in_flips;
        g.out_flips = out_flips;
        group.push_back(g);
      }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return group;
}

} // namespace detail

/// Streaming classifier for packed binary emissions; equivalent to the
/// generic ClassifyAccumulator but amortizes orbit work across the stream.
class PackedClassifyAccumulator {
public:
  explicit PackedClassifyAccumulator(const ProcessShape& shape) {
    detail::require_searchable(shape);
    n_ = shape.regions();
    group_ = detail::packed_group(n_);
  }

  void add(const PackedProcess& p) {
    if (p.n != n_) throw ShapeError("classify: mixed region counts in one stream");
    const std::uint32_t key = p.key();
    std::uint32_t idx = members_.find(key);
    if (idx == UINT32_MAX) {
      idx = static_cast<std::uint32_t>(classes_.size());
      std::uint32_t best = key;
      for (const auto& g : group_) {
        const std::uint32_t image = detail::packed_relabel(p, g).key();
        members_.insert(image, idx);
        best = std::min(best, image);
      }
      classes_.push_back(Entry{best, 0});
    }
    ++classes_[idx].count;
  }

  ClassInventory finish() const {
    ClassInventory inv;
    for (const auto& cls : classes_) {
      PackedProcess rep;
      rep.n = n_;
      for (int i = 0; i < n_; ++i)
        rep.comp[static_cast<std::size_t>(i)] =
            static_cast<std::uint8_t>(cls.canonical_key >> (8 * (n_ - 1 - i)));
      ProcessTable table = unpack(rep);
      inv.classes.emplace(serialize_body(table),
                          ClassRecord{table, cls.count, causal_diagnosis(table)});
    }
    return inv;
  }

private:
  struct Entry {
    std::uint32_t canonical_key = 0;
    std::uint64_t count = 0;
  };
  int n_ = 0;
  std::vector<detail::PackedRelabelling> group_;
  detail::PackedKeyMap members_;
  std::vector<Entry> classes_;
};

/// Enumerate and classify in one pass.
inline ClassInventory enumerate_and_classify(const SearchPlan& plan,
                                             const ProgressFn& progress = {}) {
  PackedClassifyAccumulator acc(plan.shape);
  enumerate_processes(plan, [&](const PackedProcess& p) { acc.add(p); }, progress);
  return acc.finish();
}

} // namespace pfn
