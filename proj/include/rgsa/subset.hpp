#pragma once

#include <algorithm>
#include <bit>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace rgsa {

/// A subset z of the input indices, stored as a bitmask.
///
/// Indices are zero-based in the API. `label()` prints them one-based
/// (x1, x2, ...), which is how reports and file names refer to inputs.
/// Ordering is canonical: by cardinality first, then by numeric mask.
class SubsetIndex {
 public:
  static constexpr std::size_t max_inputs = 20;

  constexpr SubsetIndex() = default;

  explicit SubsetIndex(std::uint32_t mask) : mask_(mask) {
    if (mask >> max_inputs) {
      throw std::invalid_argument("SubsetIndex: mask exceeds 20 inputs");
    }
  }

  static SubsetIndex of(std::initializer_list<std::size_t> members) {
    std::uint32_t mask = 0;
    for (auto i : members) mask |= bit(i);
    return SubsetIndex(mask);
  }

  static SubsetIndex singleton(std::size_t i) { return SubsetIndex(bit(i)); }

  static SubsetIndex full(std::size_t n) {
    if (n > max_inputs) throw std::invalid_argument("SubsetIndex: n > 20");
    return SubsetIndex((1u << n) - 1u);
  }

  std::uint32_t mask() const { return mask_; }
  std::size_t size() const { return static_cast<std::size_t>(std::popcount(mask_)); }
  bool empty() const { return mask_ == 0; }
  bool contains(std::size_t i) const { return i < max_inputs && ((mask_ >> i) & 1u); }
  bool is_subset_of(SubsetIndex other) const { return (mask_ & ~other.mask_) == 0; }

  SubsetIndex operator|(SubsetIndex o) const { return SubsetIndex(mask_ | o.mask_); }
  SubsetIndex operator&(SubsetIndex o) const { return SubsetIndex(mask_ & o.mask_); }
  SubsetIndex minus(SubsetIndex o) const { return SubsetIndex(mask_ & ~o.mask_); }
  SubsetIndex complement(std::size_t n) const { return full(n).minus(*this); }

  std::vector<std::size_t> members() const {
    std::vector<std::size_t> out;
    out.reserve(size());
    for (std::uint32_t m = mask_; m; m &= m - 1) {
      out.push_back(static_cast<std::size_t>(std::countr_zero(m)));
    }
    return out;
  }

  /// Largest member, zero-based. Requires a non-empty subset.
  std::size_t max_member() const {
    if (empty()) throw std::logic_error("SubsetIndex::max_member on empty set");
    return static_cast<std::size_t>(31 - std::countl_zero(mask_));
  }

  /// One-based member list joined by `sep`, e.g. "1,3". The empty set is "0".
  std::string label(char sep = ',') const {
    if (empty()) return "0";
    std::string out;
    for (auto i : members()) {
      if (!out.empty()) out += sep;
      out += std::to_string(i + 1);
    }
    return out;
  }

  friend bool operator==(SubsetIndex a, SubsetIndex b) { return a.mask_ == b.mask_; }
  friend std::strong_ordering operator<=>(SubsetIndex a, SubsetIndex b) {
    if (auto c = a.size() <=> b.size(); c != 0) return c;
    return a.mask_ <=> b.mask_;
  }

 private:
  static std::uint32_t bit(std::size_t i) {
    if (i >= max_inputs) throw std::invalid_argument("SubsetIndex: index out of range");
    return 1u << i;
  }

  std::uint32_t mask_ = 0;
};

/// All subsets of `z` in canonical order. The empty set and `z` itself are
/// included unless excluded by the flags.
inline std::vector<SubsetIndex> subsets_of(SubsetIndex z, bool include_empty = true,
                                           bool include_self = true) {
  std::vector<SubsetIndex> out;
  const std::uint32_t full = z.mask();
  for (std::uint32_t s = full;; s = (s - 1) & full) {
    if ((s != 0 || include_empty) && (s != full || include_self)) out.emplace_back(s);
    if (s == 0) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Non-empty subsets of {0..n-1} with cardinality at most `max_order`,
/// in canonical order.
inline std::vector<SubsetIndex> all_subsets(std::size_t n, std::size_t max_order) {
  std::vector<SubsetIndex> out;
  const auto full = SubsetIndex::full(n).mask();
  if (max_order >= n) out.reserve(full);
  for (std::uint32_t m = 1; m <= full && m != 0; ++m) {
    SubsetIndex s(m);
    if (s.size() <= max_order) out.push_back(s);
    if (m == full) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace rgsa
