#pragma once
// Content-aware resizing by seam removal and insertion.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "flexdoc/content/raster.hpp"

namespace flexdoc::content {

/// Energy grid, row-major.
struct Energy {
  int width = 0;
  int height = 0;
  std::vector<std::int64_t> e;

  std::int64_t at(int x, int y) const { return e[static_cast<std::size_t>(y) * width + x]; }
  std::int64_t& at(int x, int y) { return e[static_cast<std::size_t>(y) * width + x]; }

  /// The same grid with rows and columns swapped.
  Energy transposed() const {
    Energy t{height, width, std::vector<std::int64_t>(e.size())};
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) t.at(y, x) = at(x, y);
    return t;
  }
};

/// Dual-gradient energy: squared RGB difference of the left/right
/// neighbors plus that of the up/down neighbors, borders replicated.
inline Energy energy_map(const Raster& r) {
  Energy en{r.width, r.height, std::vector<std::int64_t>(static_cast<std::size_t>(r.width) * r.height)};
  auto sq = [](const std::uint8_t* a, const std::uint8_t* b) {
    std::int64_t s = 0;
    for (int c = 0; c < 3; ++c) {
      const std::int64_t d = static_cast<std::int64_t>(a[c]) - b[c];
      s += d * d;
    }
    return s;
  };
  for (int y = 0; y < r.height; ++y)
    for (int x = 0; x < r.width; ++x) {
      const int l = std::max(x - 1, 0), rr = std::min(x + 1, r.width - 1);
      const int u = std::max(y - 1, 0), d = std::min(y + 1, r.height - 1);
      en.at(x, y) = sq(r.px(l, y), r.px(rr, y)) + sq(r.px(x, u), r.px(x, d));
    }
  return en;
}

enum class SeamAxis { vertical, horizontal };

/// A vertical seam has one column index per row; a horizontal seam one row
/// index per column.
struct Seam {
  SeamAxis axis = SeamAxis::vertical;
  std::vector<int> index;
  std::int64_t cost = 0;
  bool operator==(const Seam&) const = default;
};

namespace detail {

/// Minimal vertical seam by dynamic programming.  Ties go to the lower
/// column both when choosing the start and when stepping back.
inline Seam vertical_seam(const Energy& en) {
  const int W = en.width, H = en.height;
  std::vector<std::int64_t> cost(en.e);
  for (int y = 1; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      std::int64_t best = cost[static_cast<std::size_t>(y - 1) * W + x];
      if (x > 0) best = std::min(best, cost[static_cast<std::size_t>(y - 1) * W + x - 1]);
      if (x + 1 < W) best = std::min(best, cost[static_cast<std::size_t>(y - 1) * W + x + 1]);
      cost[static_cast<std::size_t>(y) * W + x] += best;
    }
  Seam s;
  s.index.resize(H);
  const auto* last = cost.data() + static_cast<std::size_t>(H - 1) * W;
  int x = static_cast<int>(std::min_element(last, last + W) - last);
  s.cost = last[x];
  s.index[H - 1] = x;
  for (int y = H - 1; y > 0; --y) {
    const auto* row = cost.data() + static_cast<std::size_t>(y - 1) * W;
    int bx = x;
    if (x > 0 && row[x - 1] <= row[bx]) bx = x - 1;
    if (x + 1 < W && row[x + 1] < row[bx]) bx = x + 1;
    x = bx;
    s.index[y - 1] = x;
  }
  return s;
}

}  // namespace detail

inline Seam min_seam(const Energy& en, SeamAxis axis) {
  if (en.width < 1 || en.height < 1) throw ContentError("min_seam: empty energy grid");
  if (axis == SeamAxis::vertical) return detail::vertical_seam(en);
  Seam s = detail::vertical_seam(en.transposed());
  s.axis = SeamAxis::horizontal;
  return s;
}

namespace detail {

inline Raster transpose(const Raster& r) {
  Raster t(r.height, r.width);
  for (int y = 0; y < r.height; ++y)
    for (int x = 0; x < r.width; ++x) std::copy_n(r.px(x, y), 3, t.px(y, x));
  return t;
}

inline Raster remove_vertical(const Raster& r, const std::vector<int>& seam) {
  Raster out(r.width - 1, r.height);
  for (int y = 0; y < r.height; ++y) {
    const int cut = seam[y];
    const auto* src = r.px(0, y);
    auto* dst = out.px(0, y);
    std::copy_n(src, cut * 3, dst);
    std::copy_n(src + (cut + 1) * 3, (r.width - cut - 1) * 3, dst + cut * 3);
  }
  return out;
}

/// Inserts k vertical seams chosen on the original raster: each selected
/// pixel is followed by the average of itself and its right neighbor.
inline Raster insert_vertical(const Raster& r, int k, std::vector<Seam>& seams, SeamAxis axis) {
  // Find k disjoint seams by successive removal on a working copy, mapping
  // indices back to original columns.
  Raster work = r;
  std::vector<std::vector<int>> cols(r.height);
  for (int y = 0; y < r.height; ++y) {
    cols[y].resize(r.width);
    std::iota(cols[y].begin(), cols[y].end(), 0);
  }
  std::vector<std::vector<int>> chosen;  // original column per row
  for (int i = 0; i < k; ++i) {
    Seam s = detail::vertical_seam(energy_map(work));
    std::vector<int> orig(r.height);
    for (int y = 0; y < r.height; ++y) {
      orig[y] = cols[y][s.index[y]];
      cols[y].erase(cols[y].begin() + s.index[y]);
    }
    chosen.push_back(orig);
    Seam rec{axis, orig, s.cost};
    seams.push_back(std::move(rec));
    if (work.width > 1) work = remove_vertical(work, s.index);
  }
  Raster out(r.width + k, r.height);
  for (int y = 0; y < r.height; ++y) {
    std::vector<int> dup(r.width, 0);
    for (const auto& c : chosen) ++dup[c[y]];
    int ox = 0;
    for (int x = 0; x < r.width; ++x) {
      std::copy_n(r.px(x, y), 3, out.px(ox++, y));
      const auto* a = r.px(x, y);
      const auto* b = r.px(std::min(x + 1, r.width - 1), y);
      for (int d = 0; d < dup[x]; ++d) {
        auto* p = out.px(ox++, y);
        for (int c = 0; c < 3; ++c) p[c] = static_cast<std::uint8_t>((a[c] + b[c] + 1) / 2);
      }
    }
  }
  return out;
}

}  // namespace detail

inline constexpr double kMaxExpansion = 1.5;

struct CarveResult {
  Raster raster;
  std::vector<Seam> removed;   // in removal order, indices in the raster they were cut from
  std::vector<Seam> inserted;  // indices in the source raster of that axis pass
};

/// Resizes to exactly target_w x target_h.  Reductions remove one seam at a
/// time, interleaving axes in proportion to the remaining deltas;
/// expansions insert seams found on the pre-expansion raster.
inline CarveResult carve(const Raster& src, int target_w, int target_h) {
  if (target_w < 1 || target_h < 1) throw ContentError("carve: target dimensions must be positive");
  if (target_w > src.width * kMaxExpansion || target_h > src.height * kMaxExpansion)
    throw ContentError("carve: expansion beyond 1.5x per axis is not supported");
  CarveResult res;
  Raster cur = src;
  int dw = std::max(0, cur.width - target_w), dh = std::max(0, cur.height - target_h);
  while (dw > 0 || dh > 0) {
    // Remove along the axis with the larger remaining fraction.
    const bool vertical = dh == 0 || (dw > 0 && static_cast<double>(dw) / src.width >=
                                                    static_cast<double>(dh) / src.height);
    if (vertical) {
      Seam s = min_seam(energy_map(cur), SeamAxis::vertical);
      cur = detail::remove_vertical(cur, s.index);
      res.removed.push_back(std::move(s));
      --dw;
    } else {
      Seam s = min_seam(energy_map(cur), SeamAxis::horizontal);
      cur = detail::transpose(detail::remove_vertical(detail::transpose(cur), s.index));
      res.removed.push_back(std::move(s));
      --dh;
    }
  }
  if (target_w > cur.width) cur = detail::insert_vertical(cur, target_w - cur.width, res.inserted, SeamAxis::vertical);
  if (target_h > cur.height)
    cur = detail::transpose(
        detail::insert_vertical(detail::transpose(cur), target_h - cur.height, res.inserted, SeamAxis::horizontal));
  res.raster = std::move(cur);
  return res;
}

}  // namespace flexdoc::content
