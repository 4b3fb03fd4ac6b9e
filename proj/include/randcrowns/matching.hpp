#pragma once

// Assignment of delineations to desired targets and aggregation of per-target
// scores into one global figure.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "randcrowns/error.hpp"
#include "randcrowns/geometry.hpp"
#include "randcrowns/metrics.hpp"

namespace randcrowns {

enum class MatchStrategy { max_iou, nearest_center };
enum class PenaltyMode { min_of_ties, mean_divided_by_count };

struct Candidate {
  std::string id;
  Shape shape;
};

struct MatchPair {
  std::string target_id;
  std::string delineation_id;
  double pairing_score = 0.0;  // IoU (max_iou) or centroid distance in meters (nearest_center)
  bool operator==(const MatchPair&) const = default;
};

struct UnmatchedDelineation {
  std::string delineation_id;
  std::string nearest_target_id;  // by centroid distance; empty without targets
  bool operator==(const UnmatchedDelineation&) const = default;
};

struct MatchResult {
  MatchStrategy strategy = MatchStrategy::max_iou;
  std::vector<MatchPair> pairs;  // ordered by target id, then delineation id
  std::vector<std::string> unmatched_targets;
  std::vector<UnmatchedDelineation> unmatched_delineations;
  bool operator==(const MatchResult&) const = default;
};

struct TargetScore {
  std::string target_id;
  double score = 0.0;
  std::size_t n_assigned = 0;
  bool operator==(const TargetScore&) const = default;
};

struct GlobalScore {
  double mean = 0.0;
  double std_dev = 0.0;  // population standard deviation over targets
  std::vector<TargetScore> per_target;
  PenaltyMode penalty_mode = PenaltyMode::min_of_ties;
  bool operator==(const GlobalScore&) const = default;
};

/// Scores keyed by (target id, delineation id).
using PairScores = std::map<std::pair<std::string, std::string>, double>;

namespace detail {

inline std::vector<std::size_t> order_by_id(const std::vector<Candidate>& items, const char* what) {
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return items[x].id < items[y].id; });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (items[order[k]].id == items[order[k - 1]].id) {
      throw ValidationError(std::string("duplicate ") + what + " id '" + items[order[k]].id + "'");
    }
  }
  return order;
}

inline double centroid_distance(const Shape& a, const Shape& b) {
  const Point p = centroid(a);
  const Point q = centroid(b);
  return std::hypot(p.x - q.x, p.y - q.y);
}

inline bool same_distance(double x, double y) { return std::abs(x - y) <= 1e-9 * std::max(1.0, std::max(x, y)); }

// Each unmatched delineation is reported with its nearest target.
inline void fill_unmatched(MatchResult& result, const std::vector<Candidate>& delineations,
                           const std::vector<Candidate>& targets, const std::vector<std::size_t>& d_order,
                           const std::vector<std::size_t>& t_order, const std::vector<bool>& d_used,
                           const std::vector<bool>& t_used) {
  for (std::size_t ti : t_order) {
    if (!t_used[ti]) result.unmatched_targets.push_back(targets[ti].id);
  }
  for (std::size_t di : d_order) {
    if (d_used[di]) continue;
    UnmatchedDelineation u{delineations[di].id, {}};
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t ti : t_order) {
      const double dist = centroid_distance(delineations[di].shape, targets[ti].shape);
      if (u.nearest_target_id.empty() || (dist < best && !same_distance(dist, best))) {
        best = dist;
        u.nearest_target_id = targets[ti].id;
      }
    }
    result.unmatched_delineations.push_back(std::move(u));
  }
}

inline void sort_pairs(std::vector<MatchPair>& pairs) {
  std::sort(pairs.begin(), pairs.end(), [](const MatchPair& x, const MatchPair& y) {
    return std::tie(x.target_id, x.delineation_id) < std::tie(y.target_id, y.delineation_id);
  });
}

}  // namespace detail

/// Greedy one-to-one matching in descending IoU order (ties broken by target
/// id, then delineation id). Pairs with zero IoU are never matched.
inline MatchResult match_max_iou(const std::vector<Candidate>& delineations, const std::vector<Candidate>& targets,
                                 const PlotFrame& frame) {
  const auto t_order = detail::order_by_id(targets, "target");
  const auto d_order = detail::order_by_id(delineations, "delineation");
  std::vector<Region> t_regions, d_regions;
  t_regions.reserve(targets.size());
  d_regions.reserve(delineations.size());
  for (const auto& t : targets) t_regions.push_back(rasterize(t.shape, frame));
  for (const auto& d : delineations) d_regions.push_back(rasterize(d.shape, frame));

  struct Link {
    double iou;
    std::size_t t, d;
  };
  std::vector<Link> links;
  for (std::size_t ti = 0; ti < targets.size(); ++ti) {
    const Bounds tb = bounds(targets[ti].shape);
    for (std::size_t di = 0; di < delineations.size(); ++di) {
      const Bounds db = bounds(delineations[di].shape);
      if (db.x_lo > tb.x_hi || tb.x_lo > db.x_hi || db.y_lo > tb.y_hi || tb.y_lo > db.y_hi) continue;
      if (t_regions[ti].empty() && d_regions[di].empty()) continue;
      const double v = iou(d_regions[di], t_regions[ti]);
      if (v > 0.0) links.push_back({v, ti, di});
    }
  }
  std::sort(links.begin(), links.end(), [&](const Link& x, const Link& y) {
    if (x.iou != y.iou) return x.iou > y.iou;
    if (targets[x.t].id != targets[y.t].id) return targets[x.t].id < targets[y.t].id;
    return delineations[x.d].id < delineations[y.d].id;
  });

  MatchResult result;
  result.strategy = MatchStrategy::max_iou;
  std::vector<bool> t_used(targets.size(), false), d_used(delineations.size(), false);
  for (const Link& link : links) {
    if (t_used[link.t] || d_used[link.d]) continue;
    t_used[link.t] = d_used[link.d] = true;
    result.pairs.push_back({targets[link.t].id, delineations[link.d].id, link.iou});
  }
  detail::sort_pairs(result.pairs);
  detail::fill_unmatched(result, delineations, targets, d_order, t_order, d_used, t_used);
  return result;
}

/// Each target takes the delineation with the nearest centroid. Among
/// equidistant delineations the one with the lowest `score` is kept.
inline MatchResult match_nearest_center(
    const std::vector<Candidate>& delineations, const std::vector<Candidate>& targets,
    const std::function<double(const Candidate& target, const Candidate& delineation)>& score) {
  const auto t_order = detail::order_by_id(targets, "target");
  const auto d_order = detail::order_by_id(delineations, "delineation");
  MatchResult result;
  result.strategy = MatchStrategy::nearest_center;
  std::vector<bool> t_used(targets.size(), false), d_used(delineations.size(), false);
  for (std::size_t ti : t_order) {
    if (delineations.empty()) break;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t di : d_order) best = std::min(best, detail::centroid_distance(delineations[di].shape, targets[ti].shape));
    std::vector<std::size_t> tied;
    for (std::size_t di : d_order) {
      if (detail::same_distance(detail::centroid_distance(delineations[di].shape, targets[ti].shape), best)) {
        tied.push_back(di);
      }
    }
    std::size_t pick = tied.front();
    if (tied.size() > 1) {
      double lowest = score(targets[ti], delineations[pick]);
      for (std::size_t k = 1; k < tied.size(); ++k) {
        const double s = score(targets[ti], delineations[tied[k]]);
        if (s < lowest) {
          lowest = s;
          pick = tied[k];
        }
      }
    }
    t_used[ti] = d_used[pick] = true;
    result.pairs.push_back({targets[ti].id, delineations[pick].id, best});
  }
  detail::sort_pairs(result.pairs);
  detail::fill_unmatched(result, delineations, targets, d_order, t_order, d_used, t_used);
  return result;
}

/// Per-target scores and their mean / standard deviation. Unmatched targets
/// score 0. Under mean_divided_by_count a target's score is the mean of its
/// pair scores divided by the number of delineations assigned to it, where
/// unmatched delineations count (with score 0) against their nearest target.
inline GlobalScore aggregate(const MatchResult& match, const PairScores& scores, PenaltyMode mode) {
  std::map<std::string, std::vector<double>> assigned;
  for (const auto& t : match.unmatched_targets) assigned[t];
  for (const auto& p : match.pairs) {
    const auto it = scores.find({p.target_id, p.delineation_id});
    if (it == scores.end()) {
      throw InvalidArgument("missing score for pair (" + p.target_id + ", " + p.delineation_id + ")");
    }
    assigned[p.target_id].push_back(it->second);
  }
  if (assigned.empty()) throw InvalidArgument("cannot aggregate over an empty target set");
  std::map<std::string, std::size_t> penalties;
  if (mode == PenaltyMode::mean_divided_by_count) {
    for (const auto& u : match.unmatched_delineations) {
      if (assigned.contains(u.nearest_target_id)) ++penalties[u.nearest_target_id];
    }
  }

  GlobalScore g;
  g.penalty_mode = mode;
  for (const auto& [target_id, values] : assigned) {
    TargetScore ts{target_id, 0.0, values.size()};
    if (!values.empty()) {
      if (mode == PenaltyMode::min_of_ties) {
        ts.score = *std::min_element(values.begin(), values.end());
      } else {
        const auto it = penalties.find(target_id);
        ts.n_assigned += it == penalties.end() ? 0 : it->second;
        const double sum = std::accumulate(values.begin(), values.end(), 0.0);
        const double n = static_cast<double>(ts.n_assigned);
        ts.score = sum / n / n;
      }
    }
    g.per_target.push_back(std::move(ts));
  }
  double sum = 0.0;
  for (const auto& ts : g.per_target) sum += ts.score;
  g.mean = sum / static_cast<double>(g.per_target.size());
  double sq = 0.0;
  for (const auto& ts : g.per_target) sq += (ts.score - g.mean) * (ts.score - g.mean);
  g.std_dev = std::sqrt(sq / static_cast<double>(g.per_target.size()));
  return g;
}

}  // namespace randcrowns
