#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "compound/errors.hpp"

namespace compound {

// A frequency multi-index j in Z^d.  Coordinates are reported 1-based in
// support sets so they line up with the serialized structure format.
struct MultiIndex {
  std::vector<int> entries;

  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> e) : entries(std::move(e)) {}

  int dim() const { return static_cast<int>(entries.size()); }

  static MultiIndex zero(int d) { return MultiIndex(std::vector<int>(d, 0)); }

  bool is_zero() const {
    return std::all_of(entries.begin(), entries.end(), [](int e) { return e == 0; });
  }

  int linf() const {
    int m = 0;
    for (int e : entries) m = std::max(m, std::abs(e));
    return m;
  }

  // Sorted 1-based coordinates with a nonzero entry.
  std::vector<int> support() const {
    std::vector<int> s;
    for (int i = 0; i < dim(); ++i)
      if (entries[i] != 0) s.push_back(i + 1);
    return s;
  }

  // supp(j) as a subset test against a sorted 1-based coordinate set.
  bool support_within(const std::vector<int>& coords) const {
    for (int i = 0; i < dim(); ++i) {
      if (entries[i] != 0 && !std::binary_search(coords.begin(), coords.end(), i + 1))
        return false;
    }
    return true;
  }

  auto operator<=>(const MultiIndex&) const = default;  // lexicographic
};

// Rectangular index range |j|_inf <= cutoff, optionally restricted to
// indices supported inside a fixed coordinate set.
struct IndexBox {
  int d = 0;
  int cutoff = 0;
  std::optional<std::vector<int>> restriction;  // sorted 1-based coordinates

  IndexBox(int d_, int cutoff_, std::optional<std::vector<int>> restr = std::nullopt)
      : d(d_), cutoff(cutoff_), restriction(std::move(restr)) {
    if (d < 1) throw ParameterError("index box: dimension must be >= 1, got " + std::to_string(d));
    if (cutoff < 0)
      throw ParameterError("index box: cutoff must be >= 0, got " + std::to_string(cutoff));
    if (restriction) {
      std::vector<int>& v = *restriction;
      std::sort(v.begin(), v.end());
      if (std::adjacent_find(v.begin(), v.end()) != v.end())
        throw ParameterError("index box: restriction has a duplicate coordinate");
      for (int c : v)
        if (c < 1 || c > d)
          throw ParameterError("index box: restriction coordinate " + std::to_string(c) +
                               " outside [1," + std::to_string(d) + "]");
    }
  }
};

// All indices of the box in lexicographic order of the entry vector.
// Count is (2*cutoff+1)^v where v is the number of free coordinates; the
// zero index is always present.
inline std::vector<MultiIndex> enumerate_indices(const IndexBox& box) {
  std::vector<bool> free_coord(box.d, !box.restriction.has_value());
  if (box.restriction)
    for (int c : *box.restriction) free_coord[c - 1] = true;

  std::vector<MultiIndex> out;
  std::vector<int> cur(box.d, 0);
  auto rec = [&](auto&& self, int pos) -> void {
    if (pos == box.d) {
      out.emplace_back(cur);
      return;
    }
    if (!free_coord[pos]) {
      cur[pos] = 0;
      self(self, pos + 1);
      return;
    }
    for (int v = -box.cutoff; v <= box.cutoff; ++v) {
      cur[pos] = v;
      self(self, pos + 1);
    }
    cur[pos] = 0;
  };
  rec(rec, 0);
  return out;
}

inline std::string to_string(const MultiIndex& j) {
  std::string s = "(";
  for (int i = 0; i < j.dim(); ++i) {
    if (i) s += ",";
    s += std::to_string(j.entries[i]);
  }
  return s + ")";
}

}  // namespace compound
