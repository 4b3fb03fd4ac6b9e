#pragma once

// Leave-one-annotator-out variance experiments, parameter sweeps and a seeded
// generator of synthetic annotator ensembles.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "randcrowns/error.hpp"
#include "randcrowns/geometry.hpp"
#include "randcrowns/metrics.hpp"
#include "randcrowns/regions.hpp"

namespace randcrowns {

enum class Metric { rand_crowns, iou, iou_crowns };

inline constexpr std::array<Metric, 3> kAllMetrics{Metric::rand_crowns, Metric::iou, Metric::iou_crowns};

inline double metric_value(const ScoreRecord& rec, Metric m) {
  switch (m) {
    case Metric::rand_crowns: return rec.rand_crowns;
    case Metric::iou: return rec.iou;
    case Metric::iou_crowns: return rec.iou_crowns;
  }
  return 0.0;
}

struct PlotInfo {
  std::string plot_id;
  PlotFrame frame;
};

/// One crown as labeled by every annotator; shapes[a] belongs to annotator_ids[a].
struct CrownGroup {
  std::string crown_id;
  std::size_t plot = 0;
  std::vector<Shape> shapes;
};

struct AnnotatorEnsemble {
  std::vector<PlotInfo> plots;
  std::vector<std::string> annotator_ids;
  std::vector<CrownGroup> crowns;

  void validate() const {
    if (annotator_ids.size() < 3) {
      throw InvalidArgument("cross-validation needs at least 3 annotators (Z >= 2 delineations per target)");
    }
    for (const auto& c : crowns) {
      if (c.shapes.size() != annotator_ids.size()) {
        throw InvalidArgument("crown '" + c.crown_id + "' lacks a shape for every annotator");
      }
      if (c.plot >= plots.size()) throw InvalidArgument("crown '" + c.crown_id + "' refers to an unknown plot");
    }
  }
};

struct CrownVariance {
  std::string crown_id;
  std::string target_annotator;
  double mean = 0.0;
  double variance = 0.0;
};

struct VarianceReport {
  Metric metric = Metric::rand_crowns;
  double avg_variance = 0.0;  // NaN when every crown was skipped
  std::vector<CrownVariance> per_crown;
  std::size_t K = 0;  // crowns in the ensemble
  std::size_t Z = 0;  // delineations per target
  std::size_t n_skipped = 0;
  std::size_t n_clipped = 0;
};

/// Sample variance with denominator n - 1.
inline double sample_variance(std::span<const double> values) {
  if (values.size() < 2) throw InvalidArgument("sample variance needs at least two values");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double mean = 0.0;
  for (double v : sorted) mean += v;
  mean /= static_cast<double>(sorted.size());
  double ss = 0.0;
  for (double v : sorted) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(sorted.size() - 1);
}

/// Average over crowns of the per-crown sample variance of the delineation
/// scores (one inner vector per crown, Z >= 2 scores each).
inline double average_sample_variance(std::span<const std::vector<double>> per_crown_scores) {
  if (per_crown_scores.empty()) throw InvalidArgument("no crowns to average over");
  double acc = 0.0;
  for (const auto& scores : per_crown_scores) acc += sample_variance(scores);
  return acc / static_cast<double>(per_crown_scores.size());
}

struct EvaluationOptions {
  EdgeSeed seed = EdgeSeed::twice_gamma_omega;
  unsigned jobs = 1;
  std::ostream* log = nullptr;  // per-crown skip / clip notes
  bool keep_per_crown = true;
};

struct CrossValidation {
  VarianceReport rand_crowns;
  VarianceReport iou;
  VarianceReport iou_crowns;

  const VarianceReport& report(Metric m) const {
    switch (m) {
      case Metric::iou: return iou;
      case Metric::iou_crowns: return iou_crowns;
      case Metric::rand_crowns: break;
    }
    return rand_crowns;
  }
};

namespace detail {

// Scores of every (held-out annotator, crown, delineation) triple at every
// parameter point. Each (held-out annotator, crown) unit prepares its target
// once and reuses it for all points.
inline std::vector<CrossValidation> evaluate_points(const AnnotatorEnsemble& ens, std::span<const RcParams> points,
                                                    const EvaluationOptions& opts) {
  ens.validate();
  for (const auto& p : points) p.validate();
  const std::size_t n_ann = ens.annotator_ids.size();
  const std::size_t n_crowns = ens.crowns.size();
  const std::size_t n_points = points.size();
  const std::size_t z_count = n_ann - 1;

  // Layout: [point][held_out][crown][z][metric]
  const std::size_t unit_count = n_ann * n_crowns;
  std::vector<double> scores(n_points * unit_count * z_count * 3, 0.0);
  std::vector<std::uint8_t> skipped(n_points * unit_count, 0);
  std::vector<std::uint8_t> clipped(n_points * unit_count, 0);
  std::vector<std::string> notes(unit_count);

  auto work = [&](std::size_t unit) {
    const std::size_t held = unit / n_crowns;
    const std::size_t k = unit % n_crowns;
    const CrownGroup& crown = ens.crowns[k];
    const PlotFrame& frame = ens.plots[crown.plot].frame;
    std::ostringstream note;
    const Target target(crown.shapes[held], frame);
    std::vector<Region> delineations;
    for (std::size_t a = 0; a < n_ann; ++a) {
      if (a != held) delineations.push_back(rasterize(crown.shapes[a], frame));
    }
    for (std::size_t p = 0; p < n_points; ++p) {
      const std::size_t slot = p * unit_count + unit;
      RegionSet rs;
      try {
        rs = build_region_set(target, points[p], opts.seed);
      } catch (const DegenerateTarget&) {
        skipped[slot] = 1;
        if (opts.log) {
          note << "skip: crown " << crown.crown_id << " target " << ens.annotator_ids[held] << " alpha "
               << points[p].alpha_m << ": empty true positive region\n";
        }
        continue;
      }
      if (rs.clipped) {
        clipped[slot] = 1;
        if (opts.log) {
          note << "clip: crown " << crown.crown_id << " target " << ens.annotator_ids[held] << " gamma "
               << points[p].gamma << " capped at ratio " << rs.achieved_ratio << "\n";
        }
      }
      for (std::size_t z = 0; z < z_count; ++z) {
        const ScoreRecord rec = rand_crowns(delineations[z], rs);
        double* out = &scores[(slot * z_count + z) * 3];
        out[0] = rec.rand_crowns;
        out[1] = rec.iou;
        out[2] = rec.iou_crowns;
      }
    }
    notes[unit] = note.str();
  };

  const unsigned jobs = std::max(1u, opts.jobs);
  if (jobs == 1 || unit_count < 2) {
    for (std::size_t u = 0; u < unit_count; ++u) work(u);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (unsigned t = 0; t < jobs; ++t) {
      pool.emplace_back([&] {
        for (std::size_t u = next++; u < unit_count; u = next++) {
          try {
            work(u);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }
  if (opts.log) {
    for (const auto& n : notes) *opts.log << n;
  }

  std::vector<CrossValidation> out(n_points);
  for (std::size_t p = 0; p < n_points; ++p) {
    std::size_t n_skipped = 0, n_clipped = 0;
    for (std::size_t u = 0; u < unit_count; ++u) {
      n_skipped += skipped[p * unit_count + u];
      n_clipped += clipped[p * unit_count + u];
    }
    for (std::size_t mi = 0; mi < 3; ++mi) {
      VarianceReport rep;
      rep.metric = kAllMetrics[mi];
      rep.K = n_crowns;
      rep.Z = z_count;
      rep.n_skipped = n_skipped;
      rep.n_clipped = n_clipped;
      std::vector<double> experiment_means;
      std::vector<double> crown_scores(z_count);
      for (std::size_t held = 0; held < n_ann; ++held) {
        double acc = 0.0;
        std::size_t kept = 0;
        for (std::size_t k = 0; k < n_crowns; ++k) {
          const std::size_t slot = p * unit_count + held * n_crowns + k;
          if (skipped[slot]) continue;
          for (std::size_t z = 0; z < z_count; ++z) crown_scores[z] = scores[(slot * z_count + z) * 3 + mi];
          const double var = sample_variance(crown_scores);
          acc += var;
          ++kept;
          if (opts.keep_per_crown) {
            double mean = 0.0;
            for (double s : crown_scores) mean += s;
            mean /= static_cast<double>(z_count);
            rep.per_crown.push_back({ens.crowns[k].crown_id, ens.annotator_ids[held], mean, var});
          }
        }
        if (kept > 0) experiment_means.push_back(acc / static_cast<double>(kept));
      }
      if (experiment_means.empty()) {
        rep.avg_variance = std::numeric_limits<double>::quiet_NaN();
      } else {
        std::sort(experiment_means.begin(), experiment_means.end());
        double acc = 0.0;
        for (double v : experiment_means) acc += v;
        rep.avg_variance = acc / static_cast<double>(experiment_means.size());
      }
      (mi == 0 ? out[p].rand_crowns : mi == 1 ? out[p].iou : out[p].iou_crowns) = std::move(rep);
    }
  }
  return out;
}

}  // namespace detail

/// Each annotator in turn is the desired target and the others are its
/// delineations. Per-crown sample variances are averaged over crowns within
/// each held-out choice, then over the held-out choices. Crowns whose true
/// positive region is empty are skipped and counted.
inline CrossValidation cross_validate_all(const AnnotatorEnsemble& ens, const RcParams& params,
                                          const EvaluationOptions& opts = {}) {
  const std::array<RcParams, 1> points{params};
  return detail::evaluate_points(ens, points, opts).front();
}

inline VarianceReport cross_validate(const AnnotatorEnsemble& ens, const RcParams& params, Metric metric,
                                     const EvaluationOptions& opts = {}) {
  return cross_validate_all(ens, params, opts).report(metric);
}

/// Inclusive range [low : step : high].
struct GridRange {
  double low = 0.0;
  double step = 1.0;
  double high = 0.0;

  std::vector<double> values() const {
    if (!(step > 0.0) || !(high >= low) || !std::isfinite(low) || !std::isfinite(high)) {
      throw InvalidArgument("grid range needs step > 0 and high >= low");
    }
    const auto n = static_cast<std::size_t>(std::floor((high - low) / step + 1e-9)) + 1;
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Snap to 12 significant decimals so 0.1 + 2*0.1 reads as 0.3.
      const double raw = low + static_cast<double>(i) * step;
      const double scale = std::pow(10.0, 12 - std::ceil(std::log10(std::max(std::abs(raw), 1e-300))));
      v[i] = raw == 0.0 ? 0.0 : std::round(raw * scale) / scale;
    }
    return v;
  }
};

struct SweepGrid {
  GridRange alpha{0.1, 0.1, 1.0};
  GridRange omega{0.1, 0.1, 1.5};
  GridRange gamma{1.0, 1.0, 7.0};

  std::size_t size() const { return alpha.values().size() * omega.values().size() * gamma.values().size(); }

  /// Grid points in alpha-major order. A missing delta defaults to
  /// `resolution`; a missing tolerance to 5% of each point's gamma.
  std::vector<RcParams> points(double resolution, std::optional<double> delta = std::nullopt,
                               std::optional<double> ratio_tol = std::nullopt) const {
    std::vector<RcParams> pts;
    for (double a : alpha.values()) {
      for (double w : omega.values()) {
        for (double g : gamma.values()) {
          RcParams p = RcParams::make(a, w, g, resolution);
          if (delta) p.delta_m = *delta;
          if (ratio_tol) p.ratio_tol = *ratio_tol;
          pts.push_back(p);
        }
      }
    }
    return pts;
  }
};

struct SweepRecord {
  RcParams params;
  double var_rc = 0.0;
  double var_iou = 0.0;
  double var_iouc = 0.0;
  std::size_t n_skipped = 0;
  std::size_t n_clipped = 0;
};

/// Cross-validation at every grid point, returned in grid order.
inline std::vector<SweepRecord> sweep(const AnnotatorEnsemble& ens, std::span<const RcParams> points,
                                      EvaluationOptions opts = {}) {
  opts.keep_per_crown = false;
  const auto cvs = detail::evaluate_points(ens, points, opts);
  std::vector<SweepRecord> out;
  out.reserve(points.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    out.push_back({points[p], cvs[p].rand_crowns.avg_variance, cvs[p].iou.avg_variance,
                   cvs[p].iou_crowns.avg_variance, cvs[p].rand_crowns.n_skipped, cvs[p].rand_crowns.n_clipped});
  }
  return out;
}

/// Knobs of the synthetic ensemble generator.
struct SynthSpec {
  int plots = 4;
  int crowns_per_plot = 15;
  int annotators = 4;
  PlotFrame frame{0.0, 0.0, 40.0, 40.0, 0.1};
  double crown_min_m = 4.0;  // side lengths of base crowns
  double crown_max_m = 9.0;
  double translation_m = 0.5;  // max distance between an annotator's center and the base center
  double scale = 0.1;          // max relative change of each side
  double rotation_deg = 0.0;   // max rotation about the center
  bool polygons = false;       // emit rotated polygons instead of their bounding boxes
  std::uint64_t seed = 0;
  int retry_budget = 100;
};

namespace detail {

// Uniform doubles derived directly from the 64-bit engine so output does not
// depend on the standard library's distribution implementations.
class SynthRng {
 public:
  explicit SynthRng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

inline Shape warp_crown(const RectShape& base, double sx, double sy, double dx, double dy, double theta,
                        bool polygons) {
  const double l = base.l * sx;
  const double h = base.h * sy;
  const double xc = base.x_c + dx;
  const double yc = base.y_c + dy;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  if (!polygons) {
    return RectShape{xc, yc, std::abs(l * c) + std::abs(h * s), std::abs(l * s) + std::abs(h * c)};
  }
  PolyShape poly;
  const std::array<std::array<double, 2>, 4> corners{{{-l / 2, -h / 2}, {l / 2, -h / 2}, {l / 2, h / 2}, {-l / 2, h / 2}}};
  for (const auto& q : corners) poly.exterior.push_back({xc + q[0] * c - q[1] * s, yc + q[0] * s + q[1] * c});
  return poly;
}

}  // namespace detail

/// Deterministic ensemble: base crowns placed inside each plot, then warped
/// per annotator by a bounded random scaling, rotation and translation.
inline AnnotatorEnsemble synth_ensemble(const SynthSpec& spec) {
  if (spec.plots < 1 || spec.crowns_per_plot < 1) throw InvalidArgument("synth needs at least one plot and crown");
  if (spec.annotators < 2) throw InvalidArgument("synth needs at least two annotators");
  if (!(spec.crown_min_m > 0.0) || spec.crown_max_m < spec.crown_min_m) {
    throw InvalidArgument("crown size range must satisfy 0 < min <= max");
  }
  if (spec.translation_m < 0.0 || spec.scale < 0.0 || spec.rotation_deg < 0.0) {
    throw InvalidArgument("warping magnitudes must be >= 0");
  }
  if (spec.scale >= 1.0) throw InvalidArgument("scale jitter must be below 1");

  detail::SynthRng rng(spec.seed);
  AnnotatorEnsemble ens;
  for (int a = 0; a < spec.annotators; ++a) ens.annotator_ids.push_back("a" + std::to_string(a + 1));
  const PlotFrame& f = spec.frame;
  const double theta_max = spec.rotation_deg * std::numbers::pi / 180.0;
  int crown_no = 0;
  for (int p = 0; p < spec.plots; ++p) {
    ens.plots.push_back({"plot" + std::to_string(p + 1), f});
    std::vector<RectShape> placed;
    for (int c = 0; c < spec.crowns_per_plot; ++c) {
      RectShape base;
      for (int attempt = 0;; ++attempt) {
        const double l = rng.uniform(spec.crown_min_m, spec.crown_max_m);
        const double h = rng.uniform(spec.crown_min_m, spec.crown_max_m);
        const double mx = std::min(l / 2.0, (f.x_max() - f.x_min()) / 2.0);
        const double my = std::min(h / 2.0, (f.y_max() - f.y_min()) / 2.0);
        base = {rng.uniform(f.x_min() + mx, f.x_max() - mx), rng.uniform(f.y_min() + my, f.y_max() - my), l, h};
        const bool overlaps = std::any_of(placed.begin(), placed.end(), [&](const RectShape& o) {
          return base.x_lo() < o.x_hi() && o.x_lo() < base.x_hi() && base.y_lo() < o.y_hi() && o.y_lo() < base.y_hi();
        });
        // Crowded plots fall back to overlapping crowns.
        if (!overlaps || attempt >= spec.retry_budget) break;
      }
      placed.push_back(base);

      CrownGroup group;
      ++crown_no;
      std::string id = std::to_string(crown_no);
      group.crown_id = "c" + std::string(id.size() < 3 ? 3 - id.size() : 0, '0') + id;
      group.plot = static_cast<std::size_t>(p);
      for (int a = 0; a < spec.annotators; ++a) {
        for (int attempt = 0;; ++attempt) {
          const double sx = rng.uniform(1.0 - spec.scale, 1.0 + spec.scale);
          const double sy = rng.uniform(1.0 - spec.scale, 1.0 + spec.scale);
          const double r = spec.translation_m * std::sqrt(rng.uniform());
          const double phi = 2.0 * std::numbers::pi * rng.uniform();
          const double theta = rng.uniform(-theta_max, theta_max);
          Shape shape = detail::warp_crown(base, sx, sy, r * std::cos(phi), r * std::sin(phi), theta, spec.polygons);
          if (!rasterize(shape, f).empty()) {
            group.shapes.push_back(std::move(shape));
            break;
          }
          if (attempt + 1 >= spec.retry_budget) {
            throw Error("synthetic crown " + group.crown_id + " kept falling outside the frame");
          }
        }
      }
      ens.crowns.push_back(std::move(group));
    }
  }
  return ens;
}

}  // namespace randcrowns
