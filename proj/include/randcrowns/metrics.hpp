#pragma once

#include <cstddef>
#include <cstdint>

#include "randcrowns/error.hpp"
#include "randcrowns/geometry.hpp"
#include "randcrowns/regions.hpp"

namespace randcrowns {

/// Pair-count terms and scores of one (delineation, target) comparison.
/// The terms are squared pixel counts.
struct ScoreRecord {
  std::uint64_t a = 0;  // |D ∩ r_a|²
  std::uint64_t b = 0;  // |r_b \ D|²
  std::uint64_t c = 0;  // |D ∩ r_b|²
  std::uint64_t d = 0;  // |r_a \ D|²
  double rand_crowns = 0.0;
  double iou = 0.0;
  double iou_crowns = 0.0;
  bool degenerate = false;  // a zero denominator was met; the affected score is 0

  bool operator==(const ScoreRecord&) const = default;
};

inline double iou(const Region& d, const Region& t) {
  const std::size_t inter = count_intersection(d, t);
  const std::size_t uni = d.pixel_count() + t.pixel_count() - inter;
  if (uni == 0) throw InvalidArgument("IoU is undefined for two empty regions");
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace detail {

struct TermCounts {
  std::uint64_t n_a, n_b, n_c, n_d;
};

// r_b = r_e ∪ (D \ core) whether or not the extension triggers, and
// D ∩ r_b = D \ core because r_e never meets the core.
inline TermCounts term_counts(const Region& d, const RegionSet& rs) {
  d.check_frame(rs.r_a);
  auto dw = d.bits().words();
  auto aw = rs.r_a.bits().words();
  auto cw = rs.core.bits().words();
  auto ew = rs.r_e.bits().words();
  std::uint64_t in_a = 0, ra = 0, outside = 0, rb = 0;
  for (std::size_t k = 0; k < dw.size(); ++k) {
    const std::uint64_t out = dw[k] & ~cw[k];
    in_a += static_cast<std::uint64_t>(std::popcount(dw[k] & aw[k]));
    ra += static_cast<std::uint64_t>(std::popcount(aw[k]));
    outside += static_cast<std::uint64_t>(std::popcount(out));
    rb += static_cast<std::uint64_t>(std::popcount(ew[k] | out));
  }
  return {in_a, rb - outside, outside, ra - in_a};
}

}  // namespace detail

/// Scores delineation `d` against the regions of one target. The true
/// negative region is extended for `d` internally, so `rs` may come straight
/// from build_region_set.
inline ScoreRecord rand_crowns(const Region& d, const RegionSet& rs) {
  const auto t = detail::term_counts(d, rs);
  ScoreRecord rec;
  rec.a = t.n_a * t.n_a;
  rec.b = t.n_b * t.n_b;
  rec.c = t.n_c * t.n_c;
  rec.d = t.n_d * t.n_d;
  const std::uint64_t denom = rec.a + rec.b + rec.c + rec.d;
  if (denom == 0) {
    rec.degenerate = true;
  } else {
    rec.rand_crowns = static_cast<double>(rec.a + rec.b) / static_cast<double>(denom);
  }
  const std::uint64_t denom_c = rec.a + rec.c + rec.d;
  if (denom_c == 0) {
    rec.degenerate = true;
  } else {
    rec.iou_crowns = static_cast<double>(rec.a) / static_cast<double>(denom_c);
  }
  if (d.empty() && rs.target.empty()) {
    rec.degenerate = true;
  } else {
    rec.iou = iou(d, rs.target);
  }
  return rec;
}

/// a / (a + c + d): the buffered IoU that ignores true negatives.
inline double iou_crowns(const Region& d, const RegionSet& rs) { return rand_crowns(d, rs).iou_crowns; }

/// Pair counts of the classic Rand index for the two-segment partitions
/// (inside / outside) that `d` and `t` induce on their frame.
struct RandPairs {
  std::uint64_t a = 0;  // same segment in both
  std::uint64_t b = 0;  // different segments in both
  std::uint64_t c = 0;  // same in d, different in t
  std::uint64_t d = 0;  // different in d, same in t

  double rand() const {
    const std::uint64_t total = a + b + c + d;
    return total == 0 ? 1.0 : static_cast<double>(a + b) / static_cast<double>(total);
  }
  bool operator==(const RandPairs&) const = default;
};

inline constexpr std::size_t kDefaultPairCellBudget = std::size_t{1} << 24;

inline RandPairs classic_rand_pairs(const Region& d, const Region& t,
                                    std::size_t cell_budget = kDefaultPairCellBudget) {
  d.check_frame(t);
  const std::uint64_t n = d.frame().cell_count();
  if (n > cell_budget) throw InvalidArgument("frame exceeds the pair-count cell budget");
  auto pairs = [](std::uint64_t k) { return k < 2 ? 0 : k * (k - 1) / 2; };
  const std::uint64_t both = count_intersection(d, t);
  const std::uint64_t d_only = d.pixel_count() - both;
  const std::uint64_t t_only = t.pixel_count() - both;
  const std::uint64_t neither = n - both - d_only - t_only;
  const std::uint64_t same_both = pairs(both) + pairs(d_only) + pairs(t_only) + pairs(neither);
  const std::uint64_t same_d = pairs(both + d_only) + pairs(t_only + neither);
  const std::uint64_t same_t = pairs(both + t_only) + pairs(d_only + neither);
  RandPairs rp;
  rp.a = same_both;
  rp.c = same_d - same_both;
  rp.d = same_t - same_both;
  rp.b = pairs(n) - rp.a - rp.c - rp.d;
  return rp;
}

}  // namespace randcrowns
