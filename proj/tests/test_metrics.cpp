#include <gtest/gtest.h>

#include <random>

#include "oracle.hpp"
#include "randcrowns/metrics.hpp"

using namespace randcrowns;

namespace {

const PlotFrame kFrame40{0, 0, 40, 40, 1.0};
const RectShape kTarget = RectShape::from_bounds(10, 10, 20, 20);

oracle::Grid box(double x0, double y0, double x1, double y1) {
  return oracle::predicate(kFrame40, [=](double x, double y) { return x0 <= x && x < x1 && y0 <= y && y < y1; });
}

// Cell sets of the worked target written out by hand.
struct Worked {
  oracle::Grid target = box(10, 10, 20, 20);
  oracle::Grid r_a = box(11, 11, 19, 19);
  oracle::Grid r_o = oracle::difference(box(8, 8, 22, 22), box(10, 10, 20, 20));
  oracle::Grid r_e = oracle::difference(box(6, 6, 24, 24), box(8, 8, 22, 22));
};

RegionSet worked_set() { return build_region_set(kTarget, kFrame40, RcParams::make(1.0, 2.0, 2.0, 1.0)); }

}  // namespace

TEST(RandCrowns, WorkedCoveringDelineation) {
  const Worked w;
  const auto expect = oracle::terms(w.target, w.r_a, w.r_o, w.r_e, box(9, 9, 21, 21));
  EXPECT_EQ(expect.a(), 4096u);
  EXPECT_EQ(expect.b(), 16384u);
  EXPECT_EQ(expect.c(), 0u);
  EXPECT_EQ(expect.d(), 0u);

  const auto rec = rand_crowns(rasterize(RectShape::from_bounds(9, 9, 21, 21), kFrame40), worked_set());
  EXPECT_EQ(rec.a, expect.a());
  EXPECT_EQ(rec.b, expect.b());
  EXPECT_EQ(rec.c, expect.c());
  EXPECT_EQ(rec.d, expect.d());
  EXPECT_EQ(rec.rand_crowns, 1.0);
  EXPECT_NEAR(rec.iou, 100.0 / 144.0, 1e-12);
  EXPECT_EQ(rec.iou_crowns, 1.0);
  EXPECT_FALSE(rec.degenerate);
}

TEST(RandCrowns, WorkedShiftedDelineation) {
  const Worked w;
  const auto expect = oracle::terms(w.target, w.r_a, w.r_o, w.r_e, box(13, 10, 27, 20));
  EXPECT_EQ(expect.a(), 2304u);
  EXPECT_EQ(expect.b(), 11664u);
  EXPECT_EQ(expect.c(), 2500u);
  EXPECT_EQ(expect.d(), 256u);
  EXPECT_EQ(expect.n_rb, 158u);

  const auto rec = rand_crowns(rasterize(RectShape::from_bounds(13, 10, 27, 20), kFrame40), worked_set());
  EXPECT_EQ(rec.a, 2304u);
  EXPECT_EQ(rec.b, 11664u);
  EXPECT_EQ(rec.c, 2500u);
  EXPECT_EQ(rec.d, 256u);
  EXPECT_NEAR(rec.rand_crowns, 13968.0 / 16724.0, 1e-12);
  EXPECT_NEAR(rec.rand_crowns, 0.8352, 1e-4);
  EXPECT_NEAR(rec.iou_crowns, 2304.0 / 5060.0, 1e-12);
  EXPECT_NEAR(iou_crowns(rasterize(RectShape::from_bounds(13, 10, 27, 20), kFrame40), worked_set()),
              2304.0 / 5060.0, 1e-12);
}

TEST(RandCrowns, InsideOuterRegionOnlyHasZeroIoUCrowns) {
  const auto rec = rand_crowns(rasterize(RectShape::from_bounds(8, 8, 9, 22), kFrame40), worked_set());
  EXPECT_EQ(rec.a, 0u);
  EXPECT_EQ(rec.c, 0u);
  EXPECT_EQ(rec.iou_crowns, 0.0);
}

TEST(RandCrowns, RandomTargetsMatchPixelEnumeration) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0, 1);
  const PlotFrame f(0, 0, 40, 40, 0.5);
  for (int trial = 0; trial < 60; ++trial) {
    Shape t = trial % 2 ? Shape(oracle::star(rng, 20, 20, 3, 7, 6)) : Shape(RectShape{20, 20, 5 + 6 * u(rng), 5 + 6 * u(rng)});
    const RegionSet rs = build_region_set(t, f, RcParams::make(0.5, 1.0, 1 + std::floor(6 * u(rng)), 0.5));
    Shape d = trial % 3 ? Shape(RectShape{14 + 12 * u(rng), 14 + 12 * u(rng), 2 + 14 * u(rng), 2 + 14 * u(rng)})
                        : Shape(oracle::star(rng, 15 + 10 * u(rng), 15 + 10 * u(rng), 2, 9, 8));
    const Region dr = rasterize(d, f);
    const auto expect = oracle::terms(oracle::from_region(rs.target), oracle::from_region(rs.r_a),
                                      oracle::from_region(rs.r_o), oracle::from_region(rs.r_e), oracle::rasterize(d, f));
    const auto rec = rand_crowns(dr, rs);
    ASSERT_EQ(rec.a, expect.a());
    ASSERT_EQ(rec.b, expect.b());
    ASSERT_EQ(rec.c, expect.c());
    ASSERT_EQ(rec.d, expect.d());
    EXPECT_GE(rec.rand_crowns, 0.0);
    EXPECT_LE(rec.rand_crowns, 1.0);
    EXPECT_GE(rec.iou_crowns, 0.0);
    EXPECT_LE(rec.iou_crowns, 1.0);
    // The terms come from pairwise disjoint cell sets.
    const RegionSet w = with_delineation(rs, dr);
    EXPECT_TRUE(((dr & w.r_a) & (dr & w.r_b)).empty());
    EXPECT_TRUE(((w.r_b - dr) & (dr & w.r_b)).empty());
  }
}

TEST(RandCrowns, BufferRobustness) {
  std::mt19937_64 rng(41);
  const RegionSet rs = worked_set();
  for (int trial = 0; trial < 50; ++trial) {
    Region d = rs.r_a;
    rs.core.for_each_cell([&](int i, int j) {
      if (rng() % 2) d.insert(i, j);
    });
    const auto rec = rand_crowns(d, rs);
    EXPECT_EQ(rec.rand_crowns, 1.0);
    EXPECT_EQ(rec.iou_crowns, 1.0);
  }
}

TEST(RandCrowns, EmptyEverythingIsDegenerate) {
  const PlotFrame f(0, 0, 4, 4, 1.0);
  RegionSet rs;
  rs.target = rs.r_a = rs.r_o = rs.r_e = rs.r_b = rs.core = Region(f);
  const auto rec = rand_crowns(Region(f), rs);
  EXPECT_TRUE(rec.degenerate);
  EXPECT_EQ(rec.rand_crowns, 0.0);
  EXPECT_EQ(rec.iou_crowns, 0.0);
}

TEST(IoU, Basics) {
  const Region a = rasterize(RectShape::from_bounds(0, 0, 10, 10), kFrame40);
  const Region b = rasterize(RectShape::from_bounds(5, 5, 15, 15), kFrame40);
  const Region c = rasterize(RectShape::from_bounds(30, 30, 35, 35), kFrame40);
  EXPECT_EQ(iou(a, a), 1.0);
  EXPECT_EQ(iou(a, c), 0.0);
  EXPECT_NEAR(iou(a, b), 25.0 / 175.0, 1e-15);
  EXPECT_THROW(iou(Region(kFrame40), Region(kFrame40)), InvalidArgument);
}

TEST(ClassicRand, IdenticalPartitions) {
  const Region a = rasterize(RectShape::from_bounds(0, 0, 5, 7), PlotFrame(0, 0, 10, 10, 1));
  const auto p = classic_rand_pairs(a, a);
  EXPECT_EQ(p.c, 0u);
  EXPECT_EQ(p.d, 0u);
  EXPECT_EQ(p.rand(), 1.0);
}

TEST(ClassicRand, TwoCellFrame) {
  // The single pair is split by both partitions, so they agree.
  const PlotFrame f(0, 0, 2, 1, 1.0);
  Region d(f), t(f);
  d.insert(0, 0);
  t.insert(1, 0);
  const auto p = classic_rand_pairs(d, t);
  EXPECT_EQ(p.a, 0u);
  EXPECT_EQ(p.b, 1u);
  EXPECT_EQ(p.rand(), 1.0);
  const auto brute = oracle::rand_pairs(oracle::from_region(d), oracle::from_region(t));
  EXPECT_EQ(brute.b, 1u);
}

TEST(ClassicRand, RandomMatchesPairEnumeration) {
  std::mt19937_64 rng(6);
  const PlotFrame f(0, 0, 8, 8, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Region d(f), t(f);
    for (int j = 0; j < 8; ++j) {
      for (int i = 0; i < 8; ++i) {
        if (rng() % 2) d.insert(i, j);
        if (rng() % 3 == 0) t.insert(i, j);
      }
    }
    const auto p = classic_rand_pairs(d, t);
    const auto q = oracle::rand_pairs(oracle::from_region(d), oracle::from_region(t));
    EXPECT_EQ(p.a, q.a);
    EXPECT_EQ(p.b, q.b);
    EXPECT_EQ(p.c, q.c);
    EXPECT_EQ(p.d, q.d);
  }
}

TEST(ClassicRand, CellBudget) {
  const PlotFrame f(0, 0, 100, 100, 1.0);
  EXPECT_THROW(classic_rand_pairs(Region(f), Region(f), 1000), InvalidArgument);
}
