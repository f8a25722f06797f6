// equivalence.hpp -- the relabelling group (party permutations plus
// per-party input/output bijections), its action on process tables, exact
// canonical forms by full orbit enumeration, and classification of streams
// of processes into relabelling classes.

#pragma once

#include <algorithm>
#include <map>

#include "pfn/analysis.hpp"

namespace pfn {

inline constexpr std::uint64_t default_group_bound = 10'000'000;

/// One relabelling: new party k takes over old party sigma(k), old party i's
/// input alphabet is rewritten by in_maps[i] and its output alphabet by
/// out_maps[i].  Party permutations must preserve alphabet sizes.
struct RelabellingElement {
  std::vector<int> party_perm;            // new k -> old sigma(k)
  std::vector<std::vector<int>> in_maps;  // indexed by old party
  std::vector<std::vector<int>> out_maps; // indexed by old party

  static RelabellingElement identity(const ProcessShape& shape) {
    RelabellingElement g;
    const int n = shape.regions();
    g.party_perm.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) g.party_perm[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < n; ++i) {
      std::vector<int> in(static_cast<std::size_t>(shape.in_sizes[static_cast<std::size_t>(i)]));
      std::vector<int> out(
          static_cast<std::size_t>(shape.out_sizes[static_cast<std::size_t>(i)]));
      for (std::size_t v = 0; v < in.size(); ++v) in[v] = static_cast<int>(v);
      for (std::size_t v = 0; v < out.size(); ++v) out[v] = static_cast<int>(v);
      g.in_maps.push_back(std::move(in));
      g.out_maps.push_back(std::move(out));
    }
    return g;
  }

  friend bool operator==(const RelabellingElement&, const RelabellingElement&) = default;
};

namespace detail {

inline bool is_permutation(const std::vector<int>& p, std::size_t size) {
  if (p.size() != size) return false;
  std::vector<bool> seen(size, false);
  for (int v : p) {
    if (v < 0 || static_cast<std::size_t>(v) >= size || seen[static_cast<std::size_t>(v)])
      return false;
    seen[static_cast<std::size_t>(v)] = true;
  }
  return true;
}

inline std::vector<int> invert_permutation(const std::vector<int>& p) {
  std::vector<int> inv(p.size(), 0);
  for (std::size_t i = 0; i < p.size(); ++i)
    inv[static_cast<std::size_t>(p[i])] = static_cast<int>(i);
  return inv;
}

inline void check_relabelling(const ProcessShape& shape, const RelabellingElement& g) {
  const int n = shape.regions();
  if (!is_permutation(g.party_perm, static_cast<std::size_t>(n)))
    throw ShapeError("relabelling: party_perm is not a permutation of the regions");
  if (g.in_maps.size() != static_cast<std::size_t>(n) ||
      g.out_maps.size() != static_cast<std::size_t>(n))
    throw ShapeError("relabelling: need one input and one output map per region");
  for (int k = 0; k < n; ++k) {
    const int old = g.party_perm[static_cast<std::size_t>(k)];
    if (shape.in_sizes[static_cast<std::size_t>(old)] !=
            shape.in_sizes[static_cast<std::size_t>(k)] ||
        shape.out_sizes[static_cast<std::size_t>(old)] !=
            shape.out_sizes[static_cast<std::size_t>(k)])
      throw ShapeError("relabelling: party permutation does not preserve alphabet sizes");
  }
  for (int i = 0; i < n; ++i) {
    if (!is_permutation(g.in_maps[static_cast<std::size_t>(i)],
                        static_cast<std::size_t>(shape.in_sizes[static_cast<std::size_t>(i)])))
      throw ShapeError("relabelling: in_map for region " + std::to_string(i + 1) +
                       " is not a bijection");
    if (!is_permutation(g.out_maps[static_cast<std::size_t>(i)],
                        static_cast<std::size_t>(shape.out_sizes[static_cast<std::size_t>(i)])))
      throw ShapeError("relabelling: out_map for region " + std::to_string(i + 1) +
                       " is not a bijection");
  }
}

// Pure party permutation that may rearrange the shape; the backbone of both
// the group action and shape normalization.  new region k = old sigma(k),
// alphabets carried along unchanged.
inline ProcessTable permute_parties(const ProcessTable& w, const std::vector<int>& sigma) {
  const int n = w.regions();
  if (!is_permutation(sigma, static_cast<std::size_t>(n)))
    throw ShapeError("permute_parties: not a permutation");
  std::vector<int> in_sizes(static_cast<std::size_t>(n));
  std::vector<int> out_sizes(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    in_sizes[static_cast<std::size_t>(k)] =
        w.shape().in_sizes[static_cast<std::size_t>(sigma[static_cast<std::size_t>(k)])];
    out_sizes[static_cast<std::size_t>(k)] =
        w.shape().out_sizes[static_cast<std::size_t>(sigma[static_cast<std::size_t>(k)])];
  }
  ProcessShape shape(in_sizes, out_sizes);
  std::vector<std::vector<int>> comps;
  comps.reserve(static_cast<std::size_t>(n));
  StateTuple old_x(static_cast<std::size_t>(n), 0);
  for (int k = 0; k < n; ++k) {
    const int old = sigma[static_cast<std::size_t>(k)];
    std::vector<int> vary_regions; // new indices other than k, ascending
    std::vector<int> vary_sizes;
    for (int m = 0; m < n; ++m)
      if (m != k) {
        vary_regions.push_back(m);
        vary_sizes.push_back(out_sizes[static_cast<std::size_t>(m)]);
      }
    std::vector<int> vals;
    vals.reserve(static_cast<std::size_t>(ProcessTable::domain_size_for(shape, k)));
    StateTuple digits(vary_regions.size(), 0);
    do {
      for (std::size_t p = 0; p < vary_regions.size(); ++p)
        old_x[static_cast<std::size_t>(sigma[static_cast<std::size_t>(vary_regions[p])])] =
            digits[p];
      vals.push_back(w.input(old, old_x));
    } while (next_tuple(digits, vary_sizes));
    comps.push_back(std::move(vals));
  }
  return ProcessTable(std::move(shape), std::move(comps));
}

} // namespace detail

/// Action of g on w.  Operations transform alongside as
/// f'_k = out_map[sigma(k)] o f_{sigma(k)} o in_map[sigma(k)]^{-1}, so a
/// relabelled process run with relabelled operations reproduces the
/// relabelled history.
inline ProcessTable apply_relabelling(const ProcessTable& w, const RelabellingElement& g) {
  detail::check_relabelling(w.shape(), g);
  const int n = w.regions();
  const auto& shape = w.shape();

  std::vector<std::vector<int>> out_inv;
  out_inv.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    out_inv.push_back(detail::invert_permutation(g.out_maps[static_cast<std::size_t>(i)]));

  std::vector<std::vector<int>> comps;
  comps.reserve(static_cast<std::size_t>(n));
  StateTuple old_x(static_cast<std::size_t>(n), 0);
  for (int k = 0; k < n; ++k) {
    const int old = g.party_perm[static_cast<std::size_t>(k)];
    std::vector<int> vary_regions;
    std::vector<int> vary_sizes;
    for (int m = 0; m < n; ++m)
      if (m != k) {
        vary_regions.push_back(m);
        vary_sizes.push_back(shape.out_sizes[static_cast<std::size_t>(m)]);
      }
    const auto& alpha = g.in_maps[static_cast<std::size_t>(old)];
    std::vector<int> vals;
    vals.reserve(static_cast<std::size_t>(ProcessTable::domain_size_for(shape, k)));
    StateTuple digits(vary_regions.size(), 0);
    do {
      for (std::size_t p = 0; p < vary_regions.size(); ++p) {
        const int old_m =
            g.party_perm[static_cast<std::size_t>(vary_regions[p])];
        old_x[static_cast<std::size_t>(old_m)] =
            out_inv[static_cast<std::size_t>(old_m)][static_cast<std::size_t>(digits[p])];
      }
      vals.push_back(alpha[static_cast<std::size_t>(w.input(old, old_x))]);
    } while (detail::next_tuple(digits, vary_sizes));
    comps.push_back(std::move(vals));
  }
  return ProcessTable(shape, std::move(comps));
}

/// compose(g2, g1) acts like g1 followed by g2.
inline RelabellingElement compose(const RelabellingElement& g2, const RelabellingElement& g1) {
  const std::size_t n = g1.party_perm.size();
  if (g2.party_perm.size() != n)
    throw ShapeError("compose: group elements act on different region counts");
  RelabellingElement g;
  g.party_perm.resize(n);
  g.in_maps.resize(n);
  g.out_maps.resize(n);
  const auto sigma1_inv = detail::invert_permutation(g1.party_perm);
  for (std::size_t k = 0; k < n; ++k)
    g.party_perm[k] =
        g1.party_perm[static_cast<std::size_t>(g2.party_perm[k])];
  for (std::size_t q = 0; q < n; ++q) {
    const auto p = static_cast<std::size_t>(sigma1_inv[q]);
    const auto& a1 = g1.in_maps[q];
    const auto& a2 = g2.in_maps[p];
    const auto& x1 = g1.out_maps[q];
    const auto& x2 = g2.out_maps[p];
    std::vector<int> in(a1.size());
    std::vector<int> out(x1.size());
    for (std::size_t v = 0; v < a1.size(); ++v)
      in[v] = a2[static_cast<std::size_t>(a1[v])];
    for (std::size_t v = 0; v < x1.size(); ++v)
      out[v] = x2[static_cast<std::size_t>(x1[v])];
    g.in_maps[q] = std::move(in);
    g.out_maps[q] = std::move(out);
  }
  return g;
}

inline RelabellingElement inverse(const RelabellingElement& g) {
  const std::size_t n = g.party_perm.size();
  RelabellingElement inv;
  inv.party_perm = detail::invert_permutation(g.party_perm);
  inv.in_maps.resize(n);
  inv.out_maps.resize(n);
  for (std::size_t p = 0; p < n; ++p) {
    const auto q = static_cast<std::size_t>(g.party_perm[p]);
    inv.in_maps[p] = detail::invert_permutation(g.in_maps[q]);
    inv.out_maps[p] = detail::invert_permutation(g.out_maps[q]);
  }
  return inv;
}

/// Byte string identifying a relabelling orbit: the serialized body of the
/// lexicographically smallest serialization over the whole orbit.
using CanonicalKey = std::string;

namespace detail {

inline std::uint64_t factorial(int k) {
  std::uint64_t f = 1;
  for (int i = 2; i <= k; ++i) f *= static_cast<std::uint64_t>(i);
  return f;
}

// Regions sorted by (in size, out size, original index); canonical keys of
// processes whose shapes differ only by a rearrangement then live in one
// common arrangement and stay comparable.
inline std::vector<int> shape_sort_permutation(const ProcessShape& shape) {
  std::vector<int> sigma(static_cast<std::size_t>(shape.regions()));
  for (std::size_t i = 0; i < sigma.size(); ++i) sigma[i] = static_cast<int>(i);
  std::stable_sort(sigma.begin(), sigma.end(), [&](int a, int b) {
    const auto ka = std::make_pair(shape.in_sizes[static_cast<std::size_t>(a)],
                                   shape.out_sizes[static_cast<std::size_t>(a)]);
    const auto kb = std::make_pair(shape.in_sizes[static_cast<std::size_t>(b)],
                                   shape.out_sizes[static_cast<std::size_t>(b)]);
    return ka < kb;
  });
  return sigma;
}

inline std::vector<std::vector<int>> all_permutations(int size) {
  std::vector<int> p(static_cast<std::size_t>(size));
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<int>(i);
  std::vector<std::vector<int>> result;
  do {
    result.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return result;
}

inline std::vector<std::vector<int>> shape_preserving_party_perms(const ProcessShape& shape) {
  const int n = shape.regions();
  if (n > 12) throw BoundError("relabelling group: too many regions to enumerate permutations");
  std::vector<std::vector<int>> result;
  for (auto& perm : all_permutations(n)) {
    bool ok = true;
    for (int k = 0; k < n && ok; ++k) {
      const int old = perm[static_cast<std::size_t>(k)];
      ok = shape.in_sizes[static_cast<std::size_t>(old)] ==
               shape.in_sizes[static_cast<std::size_t>(k)] &&
           shape.out_sizes[static_cast<std::size_t>(old)] ==
               shape.out_sizes[static_cast<std::size_t>(k)];
    }
    if (ok) result.push_back(std::move(perm));
  }
  return result;
}

inline std::uint64_t relabelling_group_order(const ProcessShape& shape) {
  std::uint64_t order = static_cast<std::uint64_t>(shape_preserving_party_perms(shape).size());
  for (int s : shape.in_sizes) order *= factorial(s);
  for (int s : shape.out_sizes) order *= factorial(s);
  return order;
}

template <typename Fn>
inline void for_each_group_element(const ProcessShape& shape, Fn&& fn) {
  const int n = shape.regions();
  const auto party_perms = shape_preserving_party_perms(shape);
  std::vector<std::vector<std::vector<int>>> in_choices;
  std::vector<std::vector<std::vector<int>>> out_choices;
  for (int i = 0; i < n; ++i) {
    in_choices.push_back(all_permutations(shape.in_sizes[static_cast<std::size_t>(i)]));
    out_choices.push_back(all_permutations(shape.out_sizes[static_cast<std::size_t>(i)]));
  }
  RelabellingElement g = RelabellingElement::identity(shape);
  std::vector<std::size_t> idx(static_cast<std::size_t>(2 * n), 0);
  for (const auto& perm : party_perms) {
    g.party_perm = perm;
    std::fill(idx.begin(), idx.end(), 0);
    bool more = true;
    while (more) {
      for (int i = 0; i < n; ++i) {
        g.in_maps[static_cast<std::size_t>(i)] =
            in_choices[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
        g.out_maps[static_cast<std::size_t>(i)] =
            out_choices[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(n + i)]];
      }
      fn(g);
      more = false;
      for (std::size_t d = idx.size(); d-- > 0;) {
        const std::size_t limit = d < static_cast<std::size_t>(n)
                                      ? in_choices[d].size()
                                      : out_choices[d - static_cast<std::size_t>(n)].size();
        if (++idx[d] < limit) {
          more = true;
          break;
        }
        idx[d] = 0;
      }
    }
  }
}

} // namespace detail

/// The orbit-minimal representative of w under the relabelling group, after
/// sorting regions into the canonical shape arrangement.  Exact: the whole
/// orbit is enumerated, so the group order must stay within `bound`.
inline ProcessTable canonical_representative(const ProcessTable& w,
                                             std::uint64_t bound = default_group_bound) {
  const ProcessTable sorted =
      detail::permute_parties(w, detail::shape_sort_permutation(w.shape()));
  const std::uint64_t order = detail::relabelling_group_order(sorted.shape());
  if (order > bound)
    throw BoundError("canonical_form: relabelling group order " + std::to_string(order) +
                     " exceeds bound " + std::to_string(bound));
  ProcessTable best = sorted;
  std::string best_key = serialize_body(sorted);
  detail::for_each_group_element(sorted.shape(), [&](const RelabellingElement& g) {
    ProcessTable candidate = apply_relabelling(sorted, g);
    std::string key = serialize_body(candidate);
    if (key < best_key) {
      best_key = std::move(key);
      best = std::move(candidate);
    }
  });
  return best;
}

inline CanonicalKey canonical_form(const ProcessTable& w,
                                   std::uint64_t bound = default_group_bound) {
  return serialize_body(canonical_representative(w, bound));
}

/// Equal canonical keys decide equivalence.  Shapes that cannot be matched
/// by any region rearrangement are simply inequivalent.
inline bool are_equivalent(const ProcessTable& w1, const ProcessTable& w2,
                           std::uint64_t bound = default_group_bound) {
  auto sorted_sizes = [](const ProcessShape& s) {
    std::vector<std::pair<int, int>> z;
    for (int i = 0; i < s.regions(); ++i)
      z.emplace_back(s.in_sizes[static_cast<std::size_t>(i)],
                     s.out_sizes[static_cast<std::size_t>(i)]);
    std::sort(z.begin(), z.end());
    return z;
  };
  if (sorted_sizes(w1.shape()) != sorted_sizes(w2.shape())) return false;
  return canonical_form(w1, bound) == canonical_form(w2, bound);
}

struct ClassRecord {
  ProcessTable representative; // the orbit-minimal table
  std::uint64_t count = 0;     // orbit members encountered in the stream
  CausalDiagnosis diagnosis;
};

/// Catalog of relabelling classes keyed by canonical key.  Merging adds
/// counts, so shard inventories collapse to the same result as one big run.
struct ClassInventory {
  std::map<CanonicalKey, ClassRecord> classes;

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (const auto& [key, record] : classes) t += record.count;
    return t;
  }

  void merge(const ClassInventory& other) {
    for (const auto& [key, record] : other.classes) {
      auto it = classes.find(key);
      if (it == classes.end()) {
        classes.emplace(key, record);
      } else {
        if (!(it->second.representative == record.representative))
          throw IntegrityError("inventory merge: same key, different representatives");
        it->second.count += record.count;
      }
    }
  }
};

/// Streaming classifier; order of adds never changes the final inventory.
class ClassifyAccumulator {
public:
  explicit ClassifyAccumulator(std::uint64_t group_bound = default_group_bound)
      : bound_(group_bound) {}

  void add(const ProcessTable& w) {
    if (!shape_) {
      shape_ = w.shape();
    } else if (!(*shape_ == w.shape())) {
      throw ShapeError("classify: all tables in a stream must share one shape");
    }
    ProcessTable rep = canonical_representative(w, bound_);
    CanonicalKey key = serialize_body(rep);
    auto it = entries_.find(key);
    if (it == entries_.end())
      entries_.emplace(std::move(key), Entry{std::move(rep), 1});
    else
      ++it->second.count;
  }

  ClassInventory finish() const {
    ClassInventory inv;
    for (const auto& [key, entry] : entries_) {
      inv.classes.emplace(
          key, ClassRecord{entry.rep, entry.count, causal_diagnosis(entry.rep)});
    }
    return inv;
  }

private:
  struct Entry {
    ProcessTable rep;
    std::uint64_t count = 0;
  };
  std::uint64_t bound_;
  std::optional<ProcessShape> shape_;
  std::map<CanonicalKey, Entry> entries_;
};

inline ClassInventory classify(const std::vector<ProcessTable>& stream,
                               std::uint64_t group_bound = default_group_bound) {
  ClassifyAccumulator acc(group_bound);
  for (const auto& w : stream) acc.add(w);
  return acc.finish();
}

} // namespace pfn
