#pragma once

// Construction of the RandCrowns regions around one desired target:
//
//   r_a  true positive region: the target shrunk inward by alpha
//   r_o  outer region: annulus of width omega just outside the target (ignored)
//   r_e  edge region: annulus beyond r_o sized so |r_e| / |r_a| ~= gamma
//   r_b  true negative region: r_e, extended by any delineation cells that
//        leave the inner boundary, minus the target and r_o
//
// Rectangular targets grow and shrink as mitred boxes. Polygon targets use
// Euclidean dilation/erosion on the pixel grid.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "randcrowns/error.hpp"
#include "randcrowns/geometry.hpp"

namespace randcrowns {

struct RcParams {
  double alpha_m = 0.7;   // true positive inset
  double omega_m = 1.2;   // width of the ignored outer annulus
  double gamma = 3.0;     // target |r_b| / |r_a|
  double delta_m = 0.1;   // edge search step
  double ratio_tol = 0.15;

  /// Parameters with the default step (one cell) and tolerance (5% of gamma).
  static RcParams make(double alpha, double omega, double gamma, double resolution) {
    return {alpha, omega, gamma, resolution, 0.05 * gamma};
  }

  void validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(alpha_m) || !(alpha_m > 0.0)) throw InvalidArgument("alpha must be > 0");
    if (!finite(omega_m) || !(omega_m > 0.0)) throw InvalidArgument("omega must be > 0");
    if (!finite(gamma) || !(gamma >= 1.0)) throw InvalidArgument("gamma must be >= 1");
    if (!finite(delta_m) || !(delta_m > 0.0)) throw InvalidArgument("delta must be > 0");
    if (!finite(ratio_tol) || !(ratio_tol >= 0.0)) throw InvalidArgument("ratio_tol must be >= 0");
  }

  bool operator==(const RcParams&) const = default;
};

/// Where the edge search starts.
enum class EdgeSeed {
  twice_gamma_omega,  // epsilon = 2 * gamma * omega
  closed_form_tau,    // epsilon = gamma * tau from the quadratic (rectangles only)
};

namespace detail {

class BoxTarget {
 public:
  BoxTarget(const RectShape& rect, const PlotFrame& frame) : rect_(rect), frame_(frame) {
    region_ = rasterize(rect_, frame_);
  }

  const Region& region() const { return region_; }

  Region inset(double alpha) const {
    if (alpha >= std::min(rect_.l, rect_.h) / 2.0) {
      throw DegenerateTarget("true positive inset removes the whole target");
    }
    if (alpha == 0.0) return region_;
    return rasterize(rect_.grown(-alpha), frame_);
  }

  Region grown(double dist) const { return rasterize(rect_.grown(dist), frame_); }

  std::size_t grown_count(double dist) const {
    const RectShape g = rect_.grown(dist);
    auto cx = [&](std::ptrdiff_t i) { return frame_.center_x(i); };
    auto cy = [&](std::ptrdiff_t j) { return frame_.center_y(j); };
    const double res = frame_.resolution();
    const auto ib = first_center_at_or_above(cx, frame_.x_min(), res, g.x_lo(), 0, frame_.width());
    const auto ie = first_center_at_or_above(cx, frame_.x_min(), res, g.x_hi(), 0, frame_.width());
    const auto jb = first_center_at_or_above(cy, frame_.y_min(), res, g.y_lo(), 0, frame_.height());
    const auto je = first_center_at_or_above(cy, frame_.y_min(), res, g.y_hi(), 0, frame_.height());
    return static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, ie - ib)) *
           static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, je - jb));
  }

  double cover_distance() const {
    const double gap = std::max({rect_.x_lo() - frame_.x_min(), frame_.x_max() - rect_.x_hi(),
                                 rect_.y_lo() - frame_.y_min(), frame_.y_max() - rect_.y_hi(), 0.0});
    return gap + frame_.resolution();
  }

  const RectShape& rect() const { return rect_; }

 private:
  RectShape rect_;
  PlotFrame frame_;
  Region region_;
};

class PolygonTarget {
 public:
  PolygonTarget(const PolyShape& poly, const PlotFrame& frame) : frame_(frame), region_(frame) {
    const Bounds b = bounds(Shape{poly});
    const double res = frame.resolution();
    const auto i_lo = static_cast<std::ptrdiff_t>(std::floor((b.x_lo - frame.x_min()) / res)) - 2;
    const auto i_hi = static_cast<std::ptrdiff_t>(std::ceil((b.x_hi - frame.x_min()) / res)) + 2;
    const auto j_lo = static_cast<std::ptrdiff_t>(std::floor((b.y_lo - frame.y_min()) / res)) - 2;
    const auto j_hi = static_cast<std::ptrdiff_t>(std::ceil((b.y_hi - frame.y_min()) / res)) + 2;
    // The window covers the frame and the whole polygon, so distances to the
    // target account for parts of it lying outside the frame.
    Window win;
    win.i0 = std::min<std::ptrdiff_t>(0, i_lo);
    win.j0 = std::min<std::ptrdiff_t>(0, j_lo);
    win.w = static_cast<int>(std::max<std::ptrdiff_t>(frame.width(), i_hi) - win.i0);
    win.h = static_cast<int>(std::max<std::ptrdiff_t>(frame.height(), j_hi) - win.j0);
    BitGrid grid(win.w, win.h);
    rasterize_into(Shape{poly}, frame, win, grid);

    const auto to_target = squared_distance_transform(grid);
    BitGrid outside = grid;
    outside.flip();
    const auto to_outside = squared_distance_transform(outside);

    const int w = frame.width();
    const int h = frame.height();
    to_target_.resize(frame.cell_count());
    to_outside_.resize(frame.cell_count());
    for (int j = 0; j < h; ++j) {
      for (int i = 0; i < w; ++i) {
        const std::size_t src = static_cast<std::size_t>(j - win.j0) * win.w + static_cast<std::size_t>(i - win.i0);
        const std::size_t dst = static_cast<std::size_t>(j) * w + i;
        to_target_[dst] = to_target[src];
        to_outside_[dst] = to_outside[src];
        if (grid.test(static_cast<int>(i - win.i0), static_cast<int>(j - win.j0))) region_.bits().set(i, j);
      }
    }
    sorted_to_target_ = to_target_;
    std::sort(sorted_to_target_.begin(), sorted_to_target_.end());
  }

  const Region& region() const { return region_; }

  Region inset(double alpha) const {
    Region out(frame_);
    region_.for_each_cell([&](int i, int j) {
      const std::size_t k = static_cast<std::size_t>(j) * frame_.width() + i;
      if (!within_distance(to_outside_[k], alpha, frame_.resolution())) out.bits().set(i, j);
    });
    return out;
  }

  Region grown(double dist) const {
    Region out(frame_);
    const int w = frame_.width();
    for (int j = 0; j < frame_.height(); ++j) {
      for (int i = 0; i < w; ++i) {
        if (within_distance(to_target_[static_cast<std::size_t>(j) * w + i], dist, frame_.resolution())) {
          out.bits().set(i, j);
        }
      }
    }
    return out;
  }

  std::size_t grown_count(double dist) const {
    // Largest integer d2 accepted by within_distance.
    const double r = dist / frame_.resolution();
    const double r2 = r * r;
    const double limit = r2 + 1e-9 * std::max(1.0, r2);
    const auto cut = std::upper_bound(sorted_to_target_.begin(), sorted_to_target_.end(), limit,
                                      [](double v, std::int64_t d2) { return v < static_cast<double>(d2); });
    return static_cast<std::size_t>(cut - sorted_to_target_.begin());
  }

  double cover_distance() const {
    if (sorted_to_target_.empty() || sorted_to_target_.back() >= kFarAway) {
      return std::numeric_limits<double>::infinity();
    }
    return std::sqrt(static_cast<double>(sorted_to_target_.back())) * frame_.resolution() + frame_.resolution();
  }

 private:
  PlotFrame frame_;
  Region region_;
  std::vector<std::int64_t> to_target_;
  std::vector<std::int64_t> to_outside_;
  std::vector<std::int64_t> sorted_to_target_;
};

}  // namespace detail

/// A desired target prepared on a plot frame.
class Target {
  template <class F>
  decltype(auto) dispatch(F&& f) const {
    if (const auto* box = std::get_if<detail::BoxTarget>(&impl_)) return f(*box);
    return f(std::get<detail::PolygonTarget>(impl_));
  }

 public:
  Target(Shape shape, const PlotFrame& frame) : shape_(std::move(shape)), frame_(frame) {
    validate_shape(shape_);
    if (const auto* r = std::get_if<RectShape>(&shape_)) {
      impl_.emplace<detail::BoxTarget>(*r, frame_);
    } else {
      impl_.emplace<detail::PolygonTarget>(std::get<PolyShape>(shape_), frame_);
    }
  }

  const Shape& shape() const { return shape_; }
  const PlotFrame& frame() const { return frame_; }
  bool is_rect() const { return std::holds_alternative<RectShape>(shape_); }

  /// Rasterized target.
  const Region& region() const {
    return dispatch([](const auto& t) -> const Region& { return t.region(); });
  }
  /// Target shrunk by `alpha`; may be empty for polygons.
  Region inset(double alpha) const {
    return dispatch([&](const auto& t) { return t.inset(alpha); });
  }
  /// Target dilated by `dist`, clipped to the frame.
  Region grown(double dist) const {
    return dispatch([&](const auto& t) { return t.grown(dist); });
  }
  std::size_t grown_count(double dist) const {
    return dispatch([&](const auto& t) { return t.grown_count(dist); });
  }
  /// A dilation distance at which grown() covers the whole frame.
  double cover_distance() const {
    return dispatch([](const auto& t) { return t.cover_distance(); });
  }

 private:
  Shape shape_;
  PlotFrame frame_;
  std::variant<std::monostate, detail::BoxTarget, detail::PolygonTarget> impl_;
};

struct RegionSet {
  Region target;
  Region r_a;
  Region r_o;
  Region r_e;
  Region r_b;   // r_e until a delineation is applied with finalize_true_negative
  Region core;  // target ∪ r_o, everything inside the true negative inner boundary
  double tau = 0.0;      // closed-form edge width (rectangular targets)
  double epsilon = 0.0;  // solved dilation beyond r_o
  double achieved_ratio = 0.0;
  double step_slack = 0.0;  // ratio change of one delta step around epsilon
  bool clipped = false;     // the frame caps |r_e| / |r_a| below gamma
};

/// Target eroded by alpha. Throws DegenerateTarget when nothing remains.
inline Region true_positive_region(const Target& target, double alpha) {
  if (!(alpha >= 0.0)) throw InvalidArgument("alpha must be >= 0");
  Region r_a = target.inset(alpha);
  if (r_a.empty()) throw DegenerateTarget("true positive region is empty");
  return r_a;
}

inline Region true_positive_region(const Shape& shape, double alpha, const PlotFrame& frame) {
  return true_positive_region(Target(shape, frame), alpha);
}

/// Annulus of width omega around the target, clipped to the frame.
inline Region outer_region(const Target& target, double omega) {
  if (!(omega > 0.0)) throw InvalidArgument("omega must be > 0");
  return target.grown(omega) - target.region();
}

inline Region outer_region(const Shape& shape, double omega, const PlotFrame& frame) {
  return outer_region(Target(shape, frame), omega);
}

/// Positive root tau of (h + 2ω + 2τ)(l + 2ω + 2τ) − h·l = area_ra; 0 when
/// the annulus at τ = 0 already reaches area_ra.
inline double solve_tau(double area_ra, double l, double h, double omega) {
  if (!(area_ra > 0.0) || !(l > 0.0) || !(h > 0.0) || !(omega > 0.0)) {
    throw InvalidArgument("solve_tau arguments must be positive");
  }
  const double lo = l + 2.0 * omega;
  const double ho = h + 2.0 * omega;
  // 4τ² + bτ − c = 0
  const double b = 2.0 * (lo + ho);
  const double c = area_ra - (lo * ho - l * h);
  if (c <= 0.0) return 0.0;
  return 2.0 * c / (b + std::sqrt(b * b + 16.0 * c));
}

/// Edge region from the closed form alone: the annulus between the target
/// grown by omega and by omega + gamma*tau. No ratio correction is applied.
inline Region edge_region_closed_form(const RectShape& target, const RcParams& params, const PlotFrame& frame) {
  params.validate();
  const double area_ra = (target.l - 2.0 * params.alpha_m) * (target.h - 2.0 * params.alpha_m);
  if (!(area_ra > 0.0) || params.alpha_m >= std::min(target.l, target.h) / 2.0) {
    throw DegenerateTarget("true positive inset removes the whole target");
  }
  const double tau = solve_tau(area_ra, target.l, target.h, params.omega_m);
  return rasterize(target.grown(params.omega_m + params.gamma * tau), frame) -
         rasterize(target.grown(params.omega_m), frame);
}

struct EdgeSolution {
  Region r_e;
  double epsilon = 0.0;
  double achieved_ratio = 0.0;
  double step_slack = 0.0;
  bool clipped = false;
};

/// Searches the dilation epsilon beyond the outer region so that
/// |r_e| / |r_a| meets gamma. Starts at `seed_epsilon` (2γω unless given),
/// walks in delta steps until the ratio brackets gamma, then bisects. When the
/// frame cannot hold gamma·|r_a| cells the whole remaining frame is returned
/// with `clipped` set.
inline EdgeSolution edge_region_iterative(const Target& target, std::size_t ra_count, const RcParams& params,
                                          std::optional<double> seed_epsilon = std::nullopt) {
  params.validate();
  if (ra_count == 0) throw DegenerateTarget("true positive region is empty");
  const double omega = params.omega_m;
  const double gamma = params.gamma;
  const double delta = params.delta_m;
  const double ra = static_cast<double>(ra_count);
  const std::size_t core_count = target.grown_count(omega);
  auto ratio = [&](double eps) {
    return static_cast<double>(target.grown_count(omega + eps) - core_count) / ra;
  };

  const double max_ratio = static_cast<double>(target.frame().cell_count() - core_count) / ra;
  const double reach = std::max(0.0, target.cover_distance() - omega);

  EdgeSolution sol;
  double chosen = 0.0;
  if (max_ratio < gamma) {
    sol.clipped = true;
    chosen = reach;
  } else {
    double eps = seed_epsilon.value_or(2.0 * gamma * omega);
    eps = std::clamp(eps, 0.0, reach);
    double lo = 0.0;
    std::optional<double> hi;
    if (ratio(eps) > gamma) {
      // Shrink in delta steps until the ratio no longer exceeds gamma.
      double prev = eps;
      while (ratio(eps) > gamma) {
        prev = eps;
        eps = std::max(0.0, eps - delta);
      }
      lo = eps;
      hi = prev;
    } else {
      lo = eps;
      while (lo < reach) {
        const double next = std::min(lo + delta, reach);
        if (ratio(next) > gamma) {
          hi = next;
          break;
        }
        lo = next;
      }
    }
    if (hi && gamma - ratio(lo) > params.ratio_tol) {
      double h = *hi;
      for (int iter = 0; iter < 64 && h - lo > 1e-9 * target.frame().resolution(); ++iter) {
        const double mid = 0.5 * (lo + h);
        if (ratio(mid) <= gamma) {
          lo = mid;
        } else {
          h = mid;
        }
      }
      hi = h;
    }
    chosen = lo;
    if (hi && std::abs(ratio(*hi) - gamma) < std::abs(ratio(lo) - gamma)) chosen = *hi;
  }

  sol.epsilon = chosen;
  sol.achieved_ratio = ratio(chosen);
  const double up = ratio(chosen + delta);
  const double down = ratio(std::max(0.0, chosen - delta));
  sol.step_slack = std::max(std::abs(up - sol.achieved_ratio), std::abs(sol.achieved_ratio - down));
  sol.r_e = target.grown(omega + chosen) - target.grown(omega);
  return sol;
}

/// True negative region for delineation `d`. When d stays within
/// target ∪ r_o ∪ r_e the edge region is returned unchanged; otherwise the
/// cells of d beyond the inner boundary are annexed. The target itself is
/// never part of the result.
inline Region finalize_true_negative(const Region& r_e, const Region& r_o, const Region& target, const Region& d) {
  const Region inner = target | r_o;
  if (d.is_subset_of(inner | r_e)) return r_e;
  return (r_e | d) - inner;
}

/// Builds r_a, r_o and r_e for a target. r_b is set to r_e.
inline RegionSet build_region_set(const Target& target, const RcParams& params,
                                  EdgeSeed seed = EdgeSeed::twice_gamma_omega) {
  params.validate();
  RegionSet rs;
  rs.target = target.region();
  rs.r_a = true_positive_region(target, params.alpha_m);
  rs.core = target.grown(params.omega_m);
  rs.r_o = rs.core - rs.target;

  std::optional<double> seed_eps;
  if (const auto* rect = std::get_if<RectShape>(&target.shape())) {
    const double area_ra = (rect->l - 2.0 * params.alpha_m) * (rect->h - 2.0 * params.alpha_m);
    rs.tau = solve_tau(area_ra, rect->l, rect->h, params.omega_m);
    if (seed == EdgeSeed::closed_form_tau) seed_eps = params.gamma * rs.tau;
  }
  EdgeSolution sol = edge_region_iterative(target, rs.r_a.pixel_count(), params, seed_eps);
  rs.r_e = std::move(sol.r_e);
  rs.r_b = rs.r_e;
  rs.epsilon = sol.epsilon;
  rs.achieved_ratio = sol.achieved_ratio;
  rs.step_slack = sol.step_slack;
  rs.clipped = sol.clipped;
  return rs;
}

inline RegionSet build_region_set(const Shape& shape, const PlotFrame& frame, const RcParams& params,
                                  EdgeSeed seed = EdgeSeed::twice_gamma_omega) {
  return build_region_set(Target(shape, frame), params, seed);
}

/// Copy of `rs` whose r_b accounts for delineation `d`.
inline RegionSet with_delineation(RegionSet rs, const Region& d) {
  rs.r_b = finalize_true_negative(rs.r_e, rs.r_o, rs.target, d);
  return rs;
}

}  // namespace randcrowns
