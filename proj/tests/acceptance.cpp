// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "oracle.hpp"
#include "randcrowns/randcrowns.hpp"

using namespace randcrowns;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

oracle::Grid box(const PlotFrame& f, double x0, double y0, double x1, double y1) {
  return oracle::predicate(f, [=](double x, double y) { return x0 <= x && x < x1 && y0 <= y && y < y1; });
}

unsigned worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

// Rasterization, set algebra, buffer and erosion on random frames.
Outcome raster_and_set_ops() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 1000 && o.pass; ++trial) {
    const int w = 1 + static_cast<int>(rng() % 64), h = 1 + static_cast<int>(rng() % 64);
    const double res = trial % 2 ? 1.0 : 0.5;
    const PlotFrame f(0, 0, w * res, h * res, res);
    const double cx = w * res * u(rng), cy = h * res * u(rng), ext = std::max(w, h) * res;
    const Shape s1 = trial % 3 ? Shape(RectShape{cx, cy, 0.2 + ext * u(rng), 0.2 + ext * u(rng)})
                               : Shape(oracle::star(rng, cx, cy, 0.3 * res, 0.6 * ext, 3 + trial % 10));
    const Shape s2 = Shape(oracle::star(rng, w * res * u(rng), h * res * u(rng), 0.2 * res, 0.5 * ext, 3 + trial % 7));
    const Region a = rasterize(s1, f), b = rasterize(s2, f);
    const auto ga = oracle::rasterize(s1, f), gb = oracle::rasterize(s2, f);
    if (!oracle::same(ga, a) || !oracle::same(gb, b)) o.fail("rasterize mismatch at trial " + std::to_string(trial));
    if (!oracle::same(oracle::intersect(ga, gb), a & b) || !oracle::same(oracle::unite(ga, gb), a | b) ||
        !oracle::same(oracle::difference(ga, gb), a - b)) {
      o.fail("set operation mismatch at trial " + std::to_string(trial));
    }
    const double dist = 3.0 * res * u(rng);
    if (!oracle::same(oracle::buffer(ga, dist, res), buffer(a, dist))) {
      o.fail("buffer mismatch at trial " + std::to_string(trial));
    }
    oracle::Grid all(f);
    std::fill(all.cells.begin(), all.cells.end(), 1);
    const auto eroded = oracle::difference(ga, oracle::buffer(oracle::difference(all, ga), dist, res));
    if (!oracle::same(eroded, erode(a, dist))) o.fail("erode mismatch at trial " + std::to_string(trial));
  }
  const double secs = seconds_since(t0);
  if (secs >= 60.0) o.fail("took " + std::to_string(secs) + " s");
  if (o.pass) o.detail = "1000 frames in " + std::to_string(secs) + " s";
  return o;
}

// Hand-worked 40 x 40 fixtures.
Outcome worked_fixtures() {
  Outcome o;
  const PlotFrame f(0, 0, 40, 40, 1.0);
  const RegionSet rs = build_region_set(RectShape::from_bounds(10, 10, 20, 20), f, RcParams::make(1, 2, 2, 1));
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) o.fail(what);
  };
  check(rs.r_a.pixel_count() == 64, "|R_a| != 64");
  check(rs.r_o.pixel_count() == 96, "|R_o| != 96");
  check(oracle::same(oracle::difference(box(f, 6, 6, 24, 24), box(f, 8, 8, 22, 22)), rs.r_e), "R_e differs");
  check(std::abs(rs.achieved_ratio - 2.0) <= 1e-9, "ratio != 2");

  const auto cover = rand_crowns(rasterize(RectShape::from_bounds(9, 9, 21, 21), f), rs);
  check(cover.a == 4096 && cover.b == 16384 && cover.c == 0 && cover.d == 0, "covering terms");
  check(std::abs(cover.rand_crowns - 1.0) <= 1e-9, "covering RC != 1");
  check(std::abs(cover.iou - 100.0 / 144.0) <= 1e-9, "covering IoU");

  const auto shifted = rand_crowns(rasterize(RectShape::from_bounds(13, 10, 27, 20), f), rs);
  check(shifted.a == 2304 && shifted.b == 11664 && shifted.c == 2500 && shifted.d == 256, "shifted terms");
  check(std::abs(shifted.rand_crowns - 13968.0 / 16724.0) <= 1e-9, "shifted RC");
  check(std::abs(shifted.iou_crowns - 2304.0 / 5060.0) <= 1e-9, "shifted IoUCrowns");
  check(std::abs(solve_tau(64, 10, 10, 1) - (std::sqrt(164.0) - 12.0) / 2.0) <= 1e-9, "tau");
  if (o.pass) o.detail = "RC " + format_double(shifted.rand_crowns) + ", IoUCrowns " + format_double(shifted.iou_crowns);
  return o;
}

double tau_oracle(double ra, double l, double h, double w) {
  const double L = l + 2 * w, H = h + 2 * w;
  const double B = 2 * (L + H), C = L * H - l * h - ra;
  return (-B + std::sqrt(B * B - 16 * C)) / 8;
}

// |R_b|/|R_a| within tolerance of gamma for every unclipped region set.
Outcome ratio_contract() {
  Outcome o;
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(0, 1);
  int checked = 0, clipped = 0, degenerate = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const PlotFrame f(0, 0, 64, 64, trial % 4 == 0 ? 0.5 : 1.0);
    const Shape shape = trial % 2 ? Shape(oracle::star(rng, 32, 32, 2, 9, 3 + trial % 8))
                                  : Shape(RectShape{28 + 8 * u(rng), 28 + 8 * u(rng), 2 + 14 * u(rng), 2 + 14 * u(rng)});
    const RcParams p = RcParams::make(0.1 + 0.9 * u(rng), 0.1 + 1.4 * u(rng), 1 + std::floor(7 * u(rng)), f.resolution());
    const EdgeSeed seed = trial % 3 == 0 ? EdgeSeed::closed_form_tau : EdgeSeed::twice_gamma_omega;
    RegionSet rs;
    try {
      rs = build_region_set(shape, f, p, seed);
    } catch (const DegenerateTarget&) {
      ++degenerate;
      continue;
    }
    if (rs.clipped) {
      ++clipped;
      continue;
    }
    const double ratio = static_cast<double>(rs.r_e.pixel_count()) / static_cast<double>(rs.r_a.pixel_count());
    if (std::abs(ratio - p.gamma) > p.ratio_tol + rs.step_slack) {
      o.fail("trial " + std::to_string(trial) + ": ratio " + format_double(ratio) + " vs gamma " + format_double(p.gamma));
    }
    ++checked;
  }
  const double tau = solve_tau(64, 10, 10, 1);
  if (std::abs(tau - 0.4031) > 1e-3 || std::abs(tau - tau_oracle(64, 10, 10, 1)) > 1e-12) {
    o.fail("tau " + format_double(tau));
  }
  if (checked < 300) o.fail("only " + std::to_string(checked) + " sets checked");
  if (o.pass) {
    o.detail = std::to_string(checked) + " sets within tolerance (" + std::to_string(clipped) + " clipped, " +
               std::to_string(degenerate) + " degenerate skipped), tau " + format_double(tau);
  }
  return o;
}

// Any delineation between the true positive region and the outer boundary scores 1.
Outcome buffer_robustness() {
  Outcome o;
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(0, 1);
  int done = 0;
  while (done < 500 && o.pass) {
    const PlotFrame f(0, 0, 48, 48, done % 2 ? 0.5 : 1.0);
    const Shape shape = done % 3 == 0 ? Shape(oracle::star(rng, 24, 24, 3, 10, 5 + done % 6))
                                      : Shape(RectShape{24, 24, 4 + 14 * u(rng), 4 + 14 * u(rng)});
    const RcParams p = RcParams::make(0.2 + 0.8 * u(rng), 0.2 + 1.3 * u(rng), 1 + std::floor(7 * u(rng)), f.resolution());
    RegionSet rs;
    try {
      rs = build_region_set(shape, f, p);
    } catch (const DegenerateTarget&) {
      continue;
    }
    Region d = rs.r_a;
    const double keep = u(rng);
    rs.core.for_each_cell([&](int i, int j) {
      if (u(rng) < keep) d.insert(i, j);
    });
    const auto rec = rand_crowns(d, rs);
    if (rec.rand_crowns != 1.0) o.fail("sample " + std::to_string(done) + ": RC " + format_double(rec.rand_crowns));
    ++done;
  }
  if (o.pass) o.detail = "500 samples scored exactly 1";
  return o;
}

AnnotatorEnsemble reference_ensemble() {
  SynthSpec s;  // 4 plots x 15 crowns, 4 annotators, 0.1 m cells
  s.translation_m = 0.5;
  s.scale = 0.1;
  s.seed = 7;
  return synth_ensemble(s);
}

// RandCrowns is far less sensitive to annotator disagreement than IoU.
Outcome variance_reduction(const AnnotatorEnsemble& ens) {
  Outcome o;
  const auto t0 = Clock::now();
  EvaluationOptions opts;
  opts.jobs = worker_count();
  const auto cv = cross_validate_all(ens, RcParams::make(0.7, 1.2, 3.0, 0.1), opts);
  const double rc = cv.rand_crowns.avg_variance, io = cv.iou.avg_variance;
  const double secs = seconds_since(t0);
  if (!(rc <= 0.25 * io)) o.fail("Var(RC) " + format_double(rc) + " > 0.25 Var(IoU) " + format_double(io));
  if (!(rc < io)) o.fail("Var(RC) not below Var(IoU)");
  if (secs >= 300.0) o.fail("took " + std::to_string(secs) + " s");
  if (o.pass) {
    o.detail = std::to_string(ens.crowns.size()) + " crowns, Var(RC) " + format_double(rc) + ", Var(IoU) " +
               format_double(io) + ", Var(IoUCrowns) " + format_double(cv.iou_crowns.avg_variance) + ", " +
               std::to_string(secs) + " s";
  }
  return o;
}

// A small offset delineation outside the outer region: the score must grow
// with gamma, checked against pixel enumeration over the same edge width.
Outcome gamma_pathology() {
  Outcome o;
  const PlotFrame f(0, 0, 100, 100, 1.0);
  const RectShape target = RectShape::from_bounds(45, 45, 55, 55);
  const Region d = rasterize(RectShape::from_bounds(57, 47, 63, 53), f);
  const auto gt = box(f, 45, 45, 55, 55), ga = box(f, 46, 46, 54, 54), gd = box(f, 57, 47, 63, 53);
  const auto go = oracle::difference(box(f, 44, 44, 56, 56), gt);
  double prev = -1.0;
  std::ostringstream detail;
  for (double gamma : {1.0, 3.0, 5.0, 7.0}) {
    const RegionSet rs = build_region_set(target, f, RcParams::make(1.0, 1.0, gamma, 1.0));
    const double outer = 1.0 + rs.epsilon;
    const auto ge = oracle::difference(box(f, 45 - outer, 45 - outer, 55 + outer, 55 + outer), box(f, 44, 44, 56, 56));
    const double expect = oracle::terms(gt, ga, go, ge, gd).rand_crowns();
    const double got = rand_crowns(d, rs).rand_crowns;
    if (std::abs(got - expect) > 1e-12) o.fail("gamma " + format_double(gamma) + ": library and oracle disagree");
    if (!(got > prev)) o.fail("not increasing at gamma " + format_double(gamma));
    prev = got;
    detail << " g" << gamma << "=" << format_double(got);
  }
  if (!(prev > 0.9)) o.fail("RC at gamma 7 is " + format_double(prev));
  if (o.pass) o.detail = "RC" + detail.str();
  return o;
}

// Full parameter sweep.
Outcome full_sweep(const AnnotatorEnsemble& ens) {
  Outcome o;
  const auto t0 = Clock::now();
  const SweepGrid grid;
  const auto points = grid.points(0.1);
  EvaluationOptions opts;
  opts.jobs = worker_count();
  const auto records = sweep(ens, points, opts);
  const double secs = seconds_since(t0);
  if (records.size() != 1050) o.fail(std::to_string(records.size()) + " rows");
  std::set<std::tuple<double, double, double>> seen;
  std::size_t empty = 0;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& r = records[k];
    if (!(r.params == points[k])) o.fail("row " + std::to_string(k) + " out of grid order");
    seen.insert({r.params.alpha_m, r.params.omega_m, r.params.gamma});
    if (std::isnan(r.var_rc) || std::isnan(r.var_iou) || std::isnan(r.var_iouc)) ++empty;
  }
  if (seen.size() != records.size()) o.fail("duplicate grid points");
  if (empty > 0) o.fail(std::to_string(empty) + " rows without a variance");
  if (secs >= 1800.0) o.fail("took " + std::to_string(secs) + " s");
  if (o.pass) o.detail = "1050 rows in " + std::to_string(secs) + " s";
  return o;
}

// Leave-one-annotator-out arithmetic reproduced from individual scores.
Outcome variance_arithmetic() {
  Outcome o;
  SynthSpec s;
  s.plots = 2;
  s.crowns_per_plot = 6;
  s.annotators = 5;
  s.frame = PlotFrame(0, 0, 30, 30, 0.25);
  s.rotation_deg = 10;
  s.polygons = true;
  s.seed = 808;
  const AnnotatorEnsemble ens = synth_ensemble(s);
  const RcParams p = RcParams::make(0.5, 1.0, 3.0, 0.25);
  const auto cv = cross_validate_all(ens, p);
  const std::size_t n = ens.annotator_ids.size();
  for (Metric m : kAllMetrics) {
    double total = 0.0;
    for (std::size_t held = 0; held < n; ++held) {
      double acc = 0.0;
      for (const auto& crown : ens.crowns) {
        const PlotFrame& f = ens.plots[crown.plot].frame;
        const RegionSet rs = build_region_set(crown.shapes[held], f, p);
        std::vector<double> scores;
        for (std::size_t a = 0; a < n; ++a) {
          if (a != held) scores.push_back(metric_value(rand_crowns(rasterize(crown.shapes[a], f), rs), m));
        }
        acc += oracle::sample_variance(scores);
      }
      total += acc / static_cast<double>(ens.crowns.size());
    }
    const double expect = total / static_cast<double>(n);
    const double got = cv.report(m).avg_variance;
    if (!(std::abs(got - expect) <= 1e-12)) {
      o.fail(std::string(to_string(m)) + ": " + format_double(got) + " vs " + format_double(expect));
    }
  }
  if (o.pass) o.detail = "all three metrics within 1e-12";
  return o;
}

// Matching and global scores do not depend on input order.
Outcome order_independence() {
  Outcome o;
  std::mt19937_64 rng(909);
  std::uniform_real_distribution<double> pos(3, 57), size(1.5, 7), jit(-1.5, 1.5);
  const PlotFrame f(0, 0, 60, 60, 0.5);
  std::vector<Candidate> targets, delins;
  for (int k = 0; k < 25; ++k) {
    const double x = pos(rng), y = pos(rng);
    targets.push_back({"t" + std::to_string(k), RectShape{x, y, size(rng), size(rng)}});
    delins.push_back({"d" + std::to_string(k), RectShape{x + jit(rng), y + jit(rng), size(rng), size(rng)}});
    if (k % 5 == 0) delins.push_back({"x" + std::to_string(k), RectShape{x, y, size(rng), size(rng)}});
  }
  const RcParams p = RcParams::make(0.5, 1.0, 3.0, 0.5);
  auto render = [&](const std::vector<Candidate>& ds, const std::vector<Candidate>& ts) {
    std::string out;
    for (MatchStrategy strategy : {MatchStrategy::max_iou, MatchStrategy::nearest_center}) {
      auto score = [&](const Candidate& t, const Candidate& d) {
        try {
          return rand_crowns(rasterize(d.shape, f), build_region_set(t.shape, f, p)).rand_crowns;
        } catch (const DegenerateTarget&) {
          return 0.0;
        }
      };
      const MatchResult m = strategy == MatchStrategy::max_iou ? match_max_iou(ds, ts, f) : match_nearest_center(ds, ts, score);
      std::map<std::string, const Candidate*> t_by_id, d_by_id;
      for (const auto& t : ts) t_by_id[t.id] = &t;
      for (const auto& d : ds) d_by_id[d.id] = &d;
      PairScores scores;
      for (const auto& pr : m.pairs) scores[{pr.target_id, pr.delineation_id}] = score(*t_by_id[pr.target_id], *d_by_id[pr.delineation_id]);
      for (const auto& u : m.unmatched_delineations) {
        scores[{u.nearest_target_id, u.delineation_id}] = score(*t_by_id[u.nearest_target_id], *d_by_id[u.delineation_id]);
      }
      out += match_result_json(m).dump();
      for (PenaltyMode mode : {PenaltyMode::min_of_ties, PenaltyMode::mean_divided_by_count}) {
        out += global_score_json(aggregate(m, scores, mode)).dump();
      }
    }
    return out;
  };
  const std::string ref = render(delins, targets);
  for (int trial = 0; trial < 100 && o.pass; ++trial) {
    std::shuffle(targets.begin(), targets.end(), rng);
    std::shuffle(delins.begin(), delins.end(), rng);
    if (render(delins, targets) != ref) o.fail("shuffle " + std::to_string(trial) + " changed the output");
  }
  if (o.pass) o.detail = "100 shuffles byte-identical";
  return o;
}

}  // namespace

int main() {
  const AnnotatorEnsemble ens = reference_ensemble();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"raster and set operations match pixel enumeration", raster_and_set_ops},
      {"worked fixtures", worked_fixtures},
      {"edge ratio contract and tau", ratio_contract},
      {"buffer robustness", buffer_robustness},
      {"RandCrowns variance below IoU variance", [&] { return variance_reduction(ens); }},
      {"score grows with gamma for an offset delineation", gamma_pathology},
      {"1050-point sweep", [&] { return full_sweep(ens); }},
      {"leave-one-out variance arithmetic", variance_arithmetic},
      {"order independence of matching and global score", order_independence},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome r;
    try {
      r = criteria[k].second();
    } catch (const std::exception& e) {
      r.fail(std::string("exception: ") + e.what());
    }
    if (!r.pass) ++failures;
    std::printf("%s %zu %s: %s\n", r.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), r.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
