#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "qjoint/error.hpp"
#include "qjoint/measurement.hpp"

namespace qjoint {

/// Bijection on {0, ..., s-1}; sigma(k) = mapping()[k].
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<int> mapping) : mapping_(std::move(mapping)) {
    std::vector<int> seen(mapping_.size(), 0);
    for (int v : mapping_) {
      if (v < 0 || static_cast<std::size_t>(v) >= mapping_.size() || seen[static_cast<std::size_t>(v)]++)
        throw Error(ErrorKind::InvalidArgument, "mapping is not a bijection");
    }
  }

  static Permutation identity(std::size_t s) {
    std::vector<int> m(s);
    std::iota(m.begin(), m.end(), 0);
    return Permutation(std::move(m));
  }

  /// From the 1-based one-line notation, e.g. {3, 4, 1, 2}.
  static Permutation from_one_based(std::initializer_list<int> one_line) {
    std::vector<int> m;
    for (int v : one_line) m.push_back(v - 1);
    return Permutation(std::move(m));
  }

  /// All of Sigma_s in lexicographic order, identity first.
  static std::vector<Permutation> all(std::size_t s) {
    std::vector<Permutation> out;
    std::vector<int> m(s);
    std::iota(m.begin(), m.end(), 0);
    do {
      out.emplace_back(m);
    } while (std::next_permutation(m.begin(), m.end()));
    return out;
  }

  std::size_t size() const noexcept { return mapping_.size(); }
  int operator()(std::size_t k) const { return mapping_.at(k); }
  const std::vector<int>& mapping() const noexcept { return mapping_; }
  bool is_identity() const {
    for (std::size_t k = 0; k < mapping_.size(); ++k)
      if (mapping_[k] != static_cast<int>(k)) return false;
    return true;
  }

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<int> mapping_;
};

/// Every non-empty sub-mask of `mask`, in increasing numeric order.
inline std::vector<std::uint32_t> nonempty_submasks(std::uint32_t mask) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t sub = mask; sub != 0; sub = (sub - 1) & mask) out.push_back(sub);
  std::reverse(out.begin(), out.end());
  return out;
}

/// Every sub-mask of `mask` including the empty one, in increasing numeric order.
inline std::vector<std::uint32_t> submasks(std::uint32_t mask) {
  std::vector<std::uint32_t> out{0U};
  const auto rest = nonempty_submasks(mask);
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

using SetPartition = std::vector<IndexSet>;

/// Unordered partitions of `set` into non-empty blocks, blocks sorted by their
/// minimum element. The empty set has exactly one (empty) partition.
inline std::vector<SetPartition> set_partitions(const IndexSet& set) {
  std::vector<SetPartition> out;
  const std::uint32_t mask = set.mask();
  if (mask == 0) {
    out.emplace_back();
    return out;
  }
  const std::uint32_t lowest = mask & (~mask + 1U);
  const std::uint32_t rest = mask & ~lowest;
  for (std::uint32_t companions : submasks(rest)) {
    const IndexSet block = IndexSet::from_mask(lowest | companions);
    for (SetPartition tail : set_partitions(IndexSet::from_mask(rest & ~companions))) {
      tail.insert(tail.begin(), block);
      out.push_back(std::move(tail));
    }
  }
  return out;
}

/// Blocks of `partition` reordered so that position k holds block sigma(k).
inline SetPartition permute_blocks(const SetPartition& partition, const Permutation& sigma) {
  if (sigma.size() != partition.size())
    throw Error(ErrorKind::DimensionMismatch, "permutation size does not match block count");
  SetPartition out;
  out.reserve(partition.size());
  for (std::size_t k = 0; k < partition.size(); ++k) out.push_back(partition[static_cast<std::size_t>(sigma(k))]);
  return out;
}

}  // namespace qjoint
