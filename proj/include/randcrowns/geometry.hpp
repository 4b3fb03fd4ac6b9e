#pragma once

// Pixel-grid region algebra.
//
// Every region lives on a PlotFrame: an axis-aligned extent split into square
// cells of `resolution` meters. Cell (i, j) covers
//   [x_min + i*res, x_min + (i+1)*res) x [y_min + j*res, y_min + (j+1)*res)
// and a cell belongs to a shape when its center lies inside the shape. Cell
// centers on a shape boundary follow the half-open convention: they belong to
// the shape when the boundary is on their low side (left/bottom) only.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "randcrowns/error.hpp"

namespace randcrowns {

class PlotFrame {
 public:
  PlotFrame() : PlotFrame(0.0, 0.0, 1.0, 1.0, 1.0) {}

  PlotFrame(double x_min, double y_min, double x_max, double y_max, double resolution)
      : x_min_(x_min), y_min_(y_min), x_max_(x_max), y_max_(y_max), resolution_(resolution) {
    if (!(std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) &&
          std::isfinite(y_max) && std::isfinite(resolution))) {
      throw InvalidArgument("plot frame values must be finite");
    }
    if (!(x_max > x_min) || !(y_max > y_min)) {
      throw InvalidArgument("plot frame extent must satisfy x_max > x_min and y_max > y_min");
    }
    if (!(resolution > 0.0)) throw InvalidArgument("plot frame resolution must be positive");
    const double w = std::round((x_max - x_min) / resolution);
    const double h = std::round((y_max - y_min) / resolution);
    if (w < 1.0 || h < 1.0) throw InvalidArgument("plot frame must span at least one cell");
    if (w * h > 1.0e9) throw InvalidArgument("plot frame has too many cells");
    width_ = static_cast<int>(w);
    height_ = static_cast<int>(h);
  }

  double x_min() const { return x_min_; }
  double y_min() const { return y_min_; }
  double x_max() const { return x_max_; }
  double y_max() const { return y_max_; }
  double resolution() const { return resolution_; }
  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t cell_count() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  double cell_area() const { return resolution_ * resolution_; }

  // Defined for any lattice index, including ones outside the frame.
  double center_x(std::ptrdiff_t i) const {
    return x_min_ + (static_cast<double>(i) + 0.5) * resolution_;
  }
  double center_y(std::ptrdiff_t j) const {
    return y_min_ + (static_cast<double>(j) + 0.5) * resolution_;
  }

  bool operator==(const PlotFrame&) const = default;

 private:
  double x_min_, y_min_, x_max_, y_max_, resolution_;
  int width_ = 1;
  int height_ = 1;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

struct Bounds {
  double x_lo, y_lo, x_hi, y_hi;
};

/// Axis-aligned box given by its center and side lengths (meters).
struct RectShape {
  double x_c = 0.0;
  double y_c = 0.0;
  double l = 0.0;  // x extent
  double h = 0.0;  // y extent

  double x_lo() const { return x_c - l / 2.0; }
  double x_hi() const { return x_c + l / 2.0; }
  double y_lo() const { return y_c - h / 2.0; }
  double y_hi() const { return y_c + h / 2.0; }
  double area() const { return l * h; }

  /// Mitred offset: every side moves outward by `d` (inward for d < 0).
  RectShape grown(double d) const { return {x_c, y_c, l + 2.0 * d, h + 2.0 * d}; }

  static RectShape from_bounds(double x_lo, double y_lo, double x_hi, double y_hi) {
    return {(x_lo + x_hi) / 2.0, (y_lo + y_hi) / 2.0, x_hi - x_lo, y_hi - y_lo};
  }

  bool operator==(const RectShape&) const = default;
};

/// Simple polygon with optional holes. Rings are stored open: the closing
/// vertex is not repeated.
struct PolyShape {
  std::vector<Point> exterior;
  std::vector<std::vector<Point>> holes;

  bool operator==(const PolyShape&) const = default;
};

using Shape = std::variant<RectShape, PolyShape>;

namespace detail {

inline double ring_signed_area(std::span<const Point> ring) {
  double acc = 0.0;
  const std::size_t n = ring.size();
  for (std::size_t k = 0, p = n - 1; k < n; p = k++) {
    acc += ring[p].x * ring[k].y - ring[k].x * ring[p].y;
  }
  return acc / 2.0;
}

inline double orient(const Point& a, const Point& b, const Point& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

inline bool on_segment(const Point& a, const Point& b, const Point& p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

/// Closed-segment intersection test (touching counts).
inline bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  const double d1 = orient(q1, q2, p1);
  const double d2 = orient(q1, q2, p2);
  const double d3 = orient(p1, p2, q1);
  const double d4 = orient(p1, p2, q2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  if (d1 == 0 && on_segment(q1, q2, p1)) return true;
  if (d2 == 0 && on_segment(q1, q2, p2)) return true;
  if (d3 == 0 && on_segment(p1, p2, q1)) return true;
  if (d4 == 0 && on_segment(p1, p2, q2)) return true;
  return false;
}

inline bool ring_self_intersects(std::span<const Point> ring) {
  const std::size_t n = ring.size();
  for (std::size_t e = 0; e < n; ++e) {
    const Point& a = ring[e];
    const Point& b = ring[(e + 1) % n];
    for (std::size_t f = e + 1; f < n; ++f) {
      if (f == e + 1 || (e == 0 && f == n - 1)) {
        // Adjacent edges share a vertex; they only conflict when they fold back.
        const Point& shared = (f == e + 1) ? b : a;
        const Point& u = (f == e + 1) ? a : b;
        const Point& v = (f == e + 1) ? ring[(f + 1) % n] : ring[f];
        if (orient(u, shared, v) == 0.0 &&
            ((u.x - shared.x) * (v.x - shared.x) + (u.y - shared.y) * (v.y - shared.y)) > 0.0) {
          return true;
        }
        continue;
      }
      if (segments_intersect(a, b, ring[f], ring[(f + 1) % n])) return true;
    }
  }
  return false;
}

inline bool rings_intersect(std::span<const Point> r1, std::span<const Point> r2) {
  for (std::size_t e = 0; e < r1.size(); ++e) {
    for (std::size_t f = 0; f < r2.size(); ++f) {
      if (segments_intersect(r1[e], r1[(e + 1) % r1.size()], r2[f], r2[(f + 1) % r2.size()])) {
        return true;
      }
    }
  }
  return false;
}

}  // namespace detail

/// Throws InvalidArgument when the shape has no positive area or an invalid ring.
inline void validate_shape(const Shape& shape) {
  if (const auto* r = std::get_if<RectShape>(&shape)) {
    if (!(std::isfinite(r->x_c) && std::isfinite(r->y_c) && std::isfinite(r->l) &&
          std::isfinite(r->h))) {
      throw InvalidArgument("rectangle has non-finite coordinates");
    }
    if (!(r->l > 0.0) || !(r->h > 0.0)) throw InvalidArgument("rectangle must have l > 0 and h > 0");
    return;
  }
  const auto& poly = std::get<PolyShape>(shape);
  auto check_ring = [](std::span<const Point> ring, const char* what) {
    if (ring.size() < 3) throw InvalidArgument(std::string(what) + " ring needs at least 3 vertices");
    for (const Point& p : ring) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        throw InvalidArgument(std::string(what) + " ring has non-finite coordinates");
      }
    }
    if (detail::ring_self_intersects(ring)) {
      throw InvalidArgument(std::string(what) + " ring is self-intersecting");
    }
  };
  check_ring(poly.exterior, "exterior");
  for (const auto& hole : poly.holes) check_ring(hole, "hole");
  for (std::size_t k = 0; k < poly.holes.size(); ++k) {
    if (detail::rings_intersect(poly.exterior, poly.holes[k])) {
      throw InvalidArgument("hole ring crosses the exterior ring");
    }
  }
  double a = std::abs(detail::ring_signed_area(poly.exterior));
  for (const auto& hole : poly.holes) a -= std::abs(detail::ring_signed_area(hole));
  if (!(a > 0.0)) throw InvalidArgument("polygon must have positive area");
}

inline double area(const Shape& shape) {
  if (const auto* r = std::get_if<RectShape>(&shape)) return r->area();
  const auto& poly = std::get<PolyShape>(shape);
  double a = std::abs(detail::ring_signed_area(poly.exterior));
  for (const auto& hole : poly.holes) a -= std::abs(detail::ring_signed_area(hole));
  return a;
}

inline Point centroid(const Shape& shape) {
  if (const auto* r = std::get_if<RectShape>(&shape)) return {r->x_c, r->y_c};
  const auto& poly = std::get<PolyShape>(shape);
  double cx = 0.0, cy = 0.0, total = 0.0;
  auto accumulate = [&](std::span<const Point> ring, double sign) {
    const double ring_area = detail::ring_signed_area(ring);
    // Normalize orientation so the exterior adds and holes subtract.
    const double orient_sign = ring_area < 0 ? -1.0 : 1.0;
    const std::size_t n = ring.size();
    for (std::size_t k = 0, p = n - 1; k < n; p = k++) {
      const double cross = ring[p].x * ring[k].y - ring[k].x * ring[p].y;
      cx += sign * orient_sign * (ring[p].x + ring[k].x) * cross;
      cy += sign * orient_sign * (ring[p].y + ring[k].y) * cross;
    }
    total += sign * std::abs(ring_area);
  };
  accumulate(poly.exterior, 1.0);
  for (const auto& hole : poly.holes) accumulate(hole, -1.0);
  return {cx / (6.0 * total), cy / (6.0 * total)};
}

inline Bounds bounds(const Shape& shape) {
  if (const auto* r = std::get_if<RectShape>(&shape)) return {r->x_lo(), r->y_lo(), r->x_hi(), r->y_hi()};
  const auto& poly = std::get<PolyShape>(shape);
  Bounds b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Point& p : poly.exterior) {
    b.x_lo = std::min(b.x_lo, p.x);
    b.y_lo = std::min(b.y_lo, p.y);
    b.x_hi = std::max(b.x_hi, p.x);
    b.y_hi = std::max(b.y_hi, p.y);
  }
  return b;
}

/// Counter-clockwise ring of a rectangle, starting at its lower-left corner.
inline PolyShape to_polygon(const RectShape& r) {
  return {{{r.x_lo(), r.y_lo()}, {r.x_hi(), r.y_lo()}, {r.x_hi(), r.y_hi()}, {r.x_lo(), r.y_hi()}}, {}};
}

namespace detail {

/// Row-major bit matrix.
class BitGrid {
 public:
  BitGrid() = default;
  BitGrid(int width, int height)
      : width_(width),
        height_(height),
        words_((static_cast<std::size_t>(width) * static_cast<std::size_t>(height) + 63) / 64, 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_); }
  std::span<const std::uint64_t> words() const { return words_; }
  std::span<std::uint64_t> words() { return words_; }

  bool test(int i, int j) const {
    const std::size_t k = index(i, j);
    return (words_[k >> 6] >> (k & 63)) & 1u;
  }
  void set(int i, int j) {
    const std::size_t k = index(i, j);
    words_[k >> 6] |= std::uint64_t{1} << (k & 63);
  }

  /// Sets cells [i_begin, i_end) of row j.
  void set_span(int j, int i_begin, int i_end) {
    if (i_end <= i_begin) return;
    std::size_t lo = index(i_begin, j);
    const std::size_t hi = index(i_end - 1, j) + 1;
    while (lo < hi) {
      const std::size_t w = lo >> 6;
      const unsigned bit = lo & 63;
      const std::size_t take = std::min<std::size_t>(64 - bit, hi - lo);
      const std::uint64_t mask = take == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << take) - 1) << bit;
      words_[w] |= mask;
      lo += take;
    }
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (std::uint64_t w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  void fill() {
    std::fill(words_.begin(), words_.end(), ~std::uint64_t{0});
    clear_tail();
  }

  void flip() {
    for (auto& w : words_) w = ~w;
    clear_tail();
  }

  bool operator==(const BitGrid&) const = default;

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(i);
  }
  void clear_tail() {
    const std::size_t used = size() & 63;
    if (used != 0 && !words_.empty()) words_.back() &= (std::uint64_t{1} << used) - 1;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Smallest lattice index k in [lo_k, hi_k] whose center is >= v; hi_k when none.
template <class CenterFn>
std::ptrdiff_t first_center_at_or_above(CenterFn center, double origin, double res, double v,
                                        std::ptrdiff_t lo_k, std::ptrdiff_t hi_k) {
  double t = std::ceil((v - origin) / res - 0.5);
  t = std::clamp(t, static_cast<double>(lo_k), static_cast<double>(hi_k));
  auto k = static_cast<std::ptrdiff_t>(t);
  while (k > lo_k && center(k - 1) >= v) --k;
  while (k < hi_k && center(k) < v) ++k;
  return k;
}

/// Lattice window [i0, i0+w) x [j0, j0+h) of a frame's (unbounded) cell lattice.
struct Window {
  std::ptrdiff_t i0 = 0;
  std::ptrdiff_t j0 = 0;
  int w = 0;
  int h = 0;
};

inline void rasterize_rect(const RectShape& r, const PlotFrame& f, const Window& win, BitGrid& out) {
  auto cx = [&](std::ptrdiff_t i) { return f.center_x(i); };
  auto cy = [&](std::ptrdiff_t j) { return f.center_y(j); };
  const std::ptrdiff_t i_end_max = win.i0 + win.w;
  const std::ptrdiff_t j_end_max = win.j0 + win.h;
  const auto ib = first_center_at_or_above(cx, f.x_min(), f.resolution(), r.x_lo(), win.i0, i_end_max);
  const auto ie = first_center_at_or_above(cx, f.x_min(), f.resolution(), r.x_hi(), win.i0, i_end_max);
  const auto jb = first_center_at_or_above(cy, f.y_min(), f.resolution(), r.y_lo(), win.j0, j_end_max);
  const auto je = first_center_at_or_above(cy, f.y_min(), f.resolution(), r.y_hi(), win.j0, j_end_max);
  for (auto j = jb; j < je; ++j) {
    out.set_span(static_cast<int>(j - win.j0), static_cast<int>(ib - win.i0), static_cast<int>(ie - win.i0));
  }
}

inline void rasterize_poly(const PolyShape& poly, const PlotFrame& f, const Window& win, BitGrid& out) {
  auto cx = [&](std::ptrdiff_t i) { return f.center_x(i); };
  const Bounds b = bounds(Shape{poly});
  std::vector<double> crossings;
  for (std::ptrdiff_t j = win.j0; j < win.j0 + win.h; ++j) {
    const double y = f.center_y(j);
    if (y < b.y_lo || y >= b.y_hi) continue;
    crossings.clear();
    auto scan_ring = [&](const std::vector<Point>& ring) {
      const std::size_t n = ring.size();
      for (std::size_t k = 0, p = n - 1; k < n; p = k++) {
        const Point& vk = ring[k];
        const Point& vp = ring[p];
        if ((vk.y > y) != (vp.y > y)) {
          crossings.push_back((vp.x - vk.x) * (y - vk.y) / (vp.y - vk.y) + vk.x);
        }
      }
    };
    scan_ring(poly.exterior);
    for (const auto& hole : poly.holes) scan_ring(hole);
    std::sort(crossings.begin(), crossings.end());
    // Even-odd rule: a center x is inside iff it lies in [s_2k, s_2k+1).
    for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
      const auto ib = first_center_at_or_above(cx, f.x_min(), f.resolution(), crossings[k], win.i0,
                                               win.i0 + win.w);
      const auto ie = first_center_at_or_above(cx, f.x_min(), f.resolution(), crossings[k + 1], win.i0,
                                               win.i0 + win.w);
      out.set_span(static_cast<int>(j - win.j0), static_cast<int>(ib - win.i0), static_cast<int>(ie - win.i0));
    }
  }
}

inline void rasterize_into(const Shape& shape, const PlotFrame& f, const Window& win, BitGrid& out) {
  if (const auto* r = std::get_if<RectShape>(&shape)) {
    rasterize_rect(*r, f, win, out);
  } else {
    rasterize_poly(std::get<PolyShape>(shape), f, win, out);
  }
}

inline constexpr std::int64_t kFarAway = std::numeric_limits<std::int64_t>::max() / 4;

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher) over one line.
inline void squared_edt_1d(std::span<const std::int64_t> f, std::span<std::int64_t> out,
                           std::vector<std::ptrdiff_t>& v, std::vector<double>& z) {
  const auto n = static_cast<std::ptrdiff_t>(f.size());
  v.resize(f.size());
  z.resize(f.size() + 1);
  std::ptrdiff_t k = -1;
  for (std::ptrdiff_t q = 0; q < n; ++q) {
    if (f[q] >= kFarAway) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -std::numeric_limits<double>::infinity();
      z[1] = std::numeric_limits<double>::infinity();
      continue;
    }
    double s = 0.0;
    while (true) {
      const std::ptrdiff_t p = v[k];
      s = (static_cast<double>(f[q] + q * q) - static_cast<double>(f[p] + p * p)) /
          (2.0 * static_cast<double>(q - p));
      if (s <= z[k]) {
        --k;
        continue;
      }
      break;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  if (k < 0) {
    std::fill(out.begin(), out.end(), kFarAway);
    return;
  }
  k = 0;
  for (std::ptrdiff_t q = 0; q < n; ++q) {
    while (z[k + 1] < static_cast<double>(q)) ++k;
    const std::ptrdiff_t dq = q - v[k];
    out[q] = dq * dq + f[v[k]];
  }
}

/// Exact squared Euclidean distance (in cells) from every cell to the nearest
/// set cell of `seeds`; kFarAway when `seeds` is empty.
inline std::vector<std::int64_t> squared_distance_transform(const BitGrid& seeds) {
  const int w = seeds.width();
  const int h = seeds.height();
  std::vector<std::int64_t> grid(seeds.size());
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) {
      grid[static_cast<std::size_t>(j) * w + i] = seeds.test(i, j) ? 0 : kFarAway;
    }
  }
  std::vector<std::ptrdiff_t> v;
  std::vector<double> z;
  std::vector<std::int64_t> line_in(static_cast<std::size_t>(h));
  std::vector<std::int64_t> line_out(static_cast<std::size_t>(h));
  for (int i = 0; i < w; ++i) {
    for (int j = 0; j < h; ++j) line_in[j] = grid[static_cast<std::size_t>(j) * w + i];
    squared_edt_1d(line_in, line_out, v, z);
    for (int j = 0; j < h; ++j) grid[static_cast<std::size_t>(j) * w + i] = line_out[j];
  }
  line_in.resize(static_cast<std::size_t>(w));
  line_out.resize(static_cast<std::size_t>(w));
  for (int j = 0; j < h; ++j) {
    std::copy_n(grid.begin() + static_cast<std::ptrdiff_t>(j) * w, w, line_in.begin());
    squared_edt_1d(line_in, line_out, v, z);
    std::copy_n(line_out.begin(), w, grid.begin() + static_cast<std::ptrdiff_t>(j) * w);
  }
  return grid;
}

}  // namespace detail

/// True when two cell centers `squared_cells` apart (squared, in cell units)
/// are within `dist` meters on a grid of resolution `res`.
inline bool within_distance(std::int64_t squared_cells, double dist, double res) {
  const double r = dist / res;
  const double r2 = r * r;
  return static_cast<double>(squared_cells) <= r2 + 1e-9 * std::max(1.0, r2);
}

/// Finite set of cells of one PlotFrame.
class Region {
 public:
  Region() : Region(PlotFrame{}) {}
  explicit Region(const PlotFrame& frame) : frame_(frame), bits_(frame.width(), frame.height()) {}

  static Region full(const PlotFrame& frame) {
    Region r(frame);
    r.bits_.fill();
    return r;
  }

  const PlotFrame& frame() const { return frame_; }

  bool contains(int i, int j) const {
    if (i < 0 || j < 0 || i >= frame_.width() || j >= frame_.height()) return false;
    return bits_.test(i, j);
  }

  void insert(int i, int j) {
    if (i < 0 || j < 0 || i >= frame_.width() || j >= frame_.height()) {
      throw InvalidArgument("cell lies outside the plot frame");
    }
    bits_.set(i, j);
  }

  std::size_t pixel_count() const { return bits_.count(); }
  bool empty() const {
    return std::all_of(bits_.words().begin(), bits_.words().end(), [](std::uint64_t w) { return w == 0; });
  }

  /// Area in square meters.
  double area() const { return static_cast<double>(pixel_count()) * frame_.cell_area(); }

  bool is_subset_of(const Region& other) const {
    check_frame(other);
    auto a = bits_.words();
    auto b = other.bits_.words();
    for (std::size_t k = 0; k < a.size(); ++k) {
      if ((a[k] & ~b[k]) != 0) return false;
    }
    return true;
  }

  Region& operator&=(const Region& other) { return combine(other, [](auto x, auto y) { return x & y; }); }
  Region& operator|=(const Region& other) { return combine(other, [](auto x, auto y) { return x | y; }); }
  Region& operator-=(const Region& other) { return combine(other, [](auto x, auto y) { return x & ~y; }); }

  friend Region operator&(Region a, const Region& b) { return a &= b; }
  friend Region operator|(Region a, const Region& b) { return a |= b; }
  friend Region operator-(Region a, const Region& b) { return a -= b; }

  bool operator==(const Region&) const = default;

  /// Calls fn(i, j) for each member cell in row-major order.
  template <class Fn>
  void for_each_cell(Fn&& fn) const {
    const int w = frame_.width();
    auto words = bits_.words();
    for (std::size_t k = 0; k < words.size(); ++k) {
      std::uint64_t word = words[k];
      while (word != 0) {
        const int bit = std::countr_zero(word);
        const std::size_t flat = k * 64 + static_cast<std::size_t>(bit);
        fn(static_cast<int>(flat % w), static_cast<int>(flat / w));
        word &= word - 1;
      }
    }
  }

  const detail::BitGrid& bits() const { return bits_; }
  detail::BitGrid& bits() { return bits_; }

  void check_frame(const Region& other) const {
    if (!(frame_ == other.frame_)) throw FrameMismatch();
  }

 private:
  template <class Op>
  Region& combine(const Region& other, Op op) {
    check_frame(other);
    auto a = bits_.words();
    auto b = other.bits_.words();
    for (std::size_t k = 0; k < a.size(); ++k) a[k] = op(a[k], b[k]);
    return *this;
  }

  PlotFrame frame_;
  detail::BitGrid bits_;
};

inline Region intersect(const Region& a, const Region& b) { return a & b; }
inline Region unite(const Region& a, const Region& b) { return a | b; }
inline Region difference(const Region& a, const Region& b) { return a - b; }

inline Region complement(const Region& a) {
  Region out = a;
  out.bits().flip();
  return out;
}

inline std::size_t pixel_count(const Region& r) { return r.pixel_count(); }

/// |A ∩ B| without materializing the intersection.
inline std::size_t count_intersection(const Region& a, const Region& b) {
  a.check_frame(b);
  auto x = a.bits().words();
  auto y = b.bits().words();
  std::size_t n = 0;
  for (std::size_t k = 0; k < x.size(); ++k) n += static_cast<std::size_t>(std::popcount(x[k] & y[k]));
  return n;
}

/// |A \ B| without materializing the difference.
inline std::size_t count_difference(const Region& a, const Region& b) {
  a.check_frame(b);
  auto x = a.bits().words();
  auto y = b.bits().words();
  std::size_t n = 0;
  for (std::size_t k = 0; k < x.size(); ++k) n += static_cast<std::size_t>(std::popcount(x[k] & ~y[k]));
  return n;
}

/// Cells of `frame` whose centers fall inside `shape`.
inline Region rasterize(const Shape& shape, const PlotFrame& frame) {
  validate_shape(shape);
  Region out(frame);
  detail::rasterize_into(shape, frame, {0, 0, frame.width(), frame.height()}, out.bits());
  return out;
}

/// Morphological dilation by a Euclidean disk of radius `dist` meters:
/// every cell whose center lies within `dist` of a member cell's center.
inline Region buffer(const Region& region, double dist) {
  if (!(dist >= 0.0) || !std::isfinite(dist)) throw InvalidArgument("buffer distance must be finite and >= 0");
  if (dist == 0.0 || region.empty()) return region;
  const auto d2 = detail::squared_distance_transform(region.bits());
  const PlotFrame& f = region.frame();
  Region out(f);
  const int w = f.width();
  for (int j = 0; j < f.height(); ++j) {
    for (int i = 0; i < w; ++i) {
      if (within_distance(d2[static_cast<std::size_t>(j) * w + i], dist, f.resolution())) out.bits().set(i, j);
    }
  }
  return out;
}

/// Morphological erosion by a Euclidean disk: keeps member cells farther than
/// `dist` from every non-member cell of the frame. Cells outside the frame do
/// not erode the region.
inline Region erode(const Region& region, double dist) {
  if (!(dist >= 0.0) || !std::isfinite(dist)) throw InvalidArgument("erosion distance must be finite and >= 0");
  if (dist == 0.0) return region;
  return region - buffer(complement(region), dist);
}

/// Analytic areas (m²) of the true positive, outer and edge regions of a
/// rectangular target. The outer and edge regions are full annuli.
struct RectRegionAreas {
  double r_a = 0.0;
  double r_o = 0.0;
  double r_e = 0.0;
};

inline RectRegionAreas rect_region_areas(const RectShape& t, double alpha, double omega, double tau,
                                         double gamma) {
  validate_shape(t);
  if (!(alpha >= 0.0) || alpha >= std::min(t.l, t.h) / 2.0) {
    throw DegenerateTarget("true positive inset must be smaller than half the target's shorter side");
  }
  if (!(omega > 0.0)) throw InvalidArgument("omega must be positive");
  if (!(tau >= 0.0)) throw InvalidArgument("tau must be non-negative");
  const double lo = t.l + 2.0 * omega;
  const double ho = t.h + 2.0 * omega;
  const double le = lo + 2.0 * gamma * tau;
  const double he = ho + 2.0 * gamma * tau;
  return {(t.l - 2.0 * alpha) * (t.h - 2.0 * alpha), lo * ho - t.l * t.h, le * he - lo * ho};
}

}  // namespace randcrowns
