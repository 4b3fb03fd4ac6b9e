#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "randcrowns/matching.hpp"

using namespace randcrowns;

namespace {

const PlotFrame kFrame{0, 0, 60, 60, 1.0};

Candidate box(const std::string& id, double x0, double y0, double x1, double y1) {
  return {id, RectShape::from_bounds(x0, y0, x1, y1)};
}

double rc_lookup(const Candidate&, const Candidate& d) { return d.id == "low" ? 0.2 : 0.9; }

}  // namespace

TEST(MaxIoU, IdenticalDelineationTakesItsTarget) {
  const auto m = match_max_iou({box("d1", 0, 0, 10, 10)}, {box("t1", 0, 0, 10, 10), box("t2", 30, 30, 40, 40)}, kFrame);
  ASSERT_EQ(m.pairs.size(), 1u);
  EXPECT_EQ(m.pairs[0].target_id, "t1");
  EXPECT_EQ(m.pairs[0].pairing_score, 1.0);
  EXPECT_EQ(m.unmatched_targets, std::vector<std::string>{"t2"});
  EXPECT_TRUE(m.unmatched_delineations.empty());
}

TEST(MaxIoU, GreedyOrder) {
  // IoU(t1,d1) = 0.8, IoU(t2,d2) = 0.6, cross pairs disjoint.
  const std::vector<Candidate> targets{box("t1", 0, 0, 10, 10), box("t2", 20, 0, 30, 10)};
  const std::vector<Candidate> delins{box("d1", 0, 0, 10, 8), box("d2", 20, 0, 30, 6)};
  const auto m = match_max_iou(delins, targets, kFrame);
  ASSERT_EQ(m.pairs.size(), 2u);
  EXPECT_EQ(m.pairs[0], (MatchPair{"t1", "d1", 0.8}));
  EXPECT_EQ(m.pairs[1], (MatchPair{"t2", "d2", 0.6}));
}

TEST(MaxIoU, GreedyPrefersBestPairFirst) {
  // d1 overlaps t1 best, so t2 must settle for d2 even though d1 also overlaps it.
  const std::vector<Candidate> targets{box("t1", 0, 0, 10, 10), box("t2", 5, 0, 15, 10)};
  const std::vector<Candidate> delins{box("d1", 1, 0, 11, 10), box("d2", 9, 0, 19, 10)};
  const auto m = match_max_iou(delins, targets, kFrame);
  ASSERT_EQ(m.pairs.size(), 2u);
  EXPECT_EQ(m.pairs[0].target_id, "t1");
  EXPECT_EQ(m.pairs[0].delineation_id, "d1");
  EXPECT_EQ(m.pairs[1].delineation_id, "d2");
}

TEST(MaxIoU, AllDisjoint) {
  const auto m = match_max_iou({box("d1", 40, 40, 45, 45)}, {box("t1", 0, 0, 10, 10)}, kFrame);
  EXPECT_TRUE(m.pairs.empty());
  EXPECT_EQ(m.unmatched_targets.size(), 1u);
  ASSERT_EQ(m.unmatched_delineations.size(), 1u);
  EXPECT_EQ(m.unmatched_delineations[0].nearest_target_id, "t1");
}

TEST(MaxIoU, DuplicateIdsRejected) {
  EXPECT_THROW(match_max_iou({}, {box("t", 0, 0, 1, 1), box("t", 2, 2, 3, 3)}, kFrame), ValidationError);
}

TEST(MaxIoU, TranslationInvariant) {
  const std::vector<Candidate> targets{box("t1", 0, 0, 10, 10), box("t2", 12, 0, 22, 9)};
  const std::vector<Candidate> delins{box("a", 1, 1, 11, 11), box("b", 10, 0, 20, 10), box("c", 30, 30, 33, 33)};
  auto shifted = [](std::vector<Candidate> v) {
    for (auto& c : v) {
      auto& r = std::get<RectShape>(c.shape);
      r.x_c += 17;
      r.y_c += 9;
    }
    return v;
  };
  const auto m1 = match_max_iou(delins, targets, kFrame);
  const auto m2 = match_max_iou(shifted(delins), shifted(targets), kFrame);
  EXPECT_EQ(m1, m2);
}

TEST(NearestCenter, StrictOrdering) {
  const auto m = match_nearest_center({box("d2", 8, 8, 10, 10), box("d1", 0, 0, 2, 2)},
                                      {box("t1", -1, -1, 1, 1), box("t2", 9, 9, 11, 11)}, rc_lookup);
  ASSERT_EQ(m.pairs.size(), 2u);
  EXPECT_EQ(m.pairs[0].target_id, "t1");
  EXPECT_EQ(m.pairs[0].delineation_id, "d1");
  EXPECT_EQ(m.pairs[1].delineation_id, "d2");
  EXPECT_NEAR(m.pairs[0].pairing_score, std::sqrt(2.0), 1e-12);
}

TEST(NearestCenter, TieKeepsLowerScore) {
  const auto m = match_nearest_center({box("high", 6, 9, 8, 11), box("low", 12, 9, 14, 11)}, {box("t", 9, 9, 11, 11)},
                                      rc_lookup);
  ASSERT_EQ(m.pairs.size(), 1u);
  EXPECT_EQ(m.pairs[0].delineation_id, "low");
  ASSERT_EQ(m.unmatched_delineations.size(), 1u);
  EXPECT_EQ(m.unmatched_delineations[0].delineation_id, "high");
}

TEST(NearestCenter, NoDelineations) {
  const auto m = match_nearest_center({}, {box("t1", 0, 0, 1, 1), box("t2", 5, 5, 6, 6)}, rc_lookup);
  EXPECT_TRUE(m.pairs.empty());
  EXPECT_EQ(m.unmatched_targets.size(), 2u);
  const auto g = aggregate(m, {}, PenaltyMode::min_of_ties);
  EXPECT_EQ(g.mean, 0.0);
}

TEST(Aggregate, AllPerfect) {
  MatchResult m;
  m.pairs = {{"t1", "d1", 1.0}, {"t2", "d2", 1.0}};
  const auto g = aggregate(m, {{{"t1", "d1"}, 1.0}, {{"t2", "d2"}, 1.0}}, PenaltyMode::min_of_ties);
  EXPECT_EQ(g.mean, 1.0);
  EXPECT_EQ(g.std_dev, 0.0);
}

TEST(Aggregate, UnmatchedTargetScoresZero) {
  MatchResult m;
  m.pairs = {{"t1", "d1", 1.0}, {"t2", "d2", 1.0}};
  m.unmatched_targets = {"t3"};
  const auto g = aggregate(m, {{{"t1", "d1"}, 1.0}, {{"t2", "d2"}, 1.0}}, PenaltyMode::min_of_ties);
  EXPECT_NEAR(g.mean, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(g.std_dev, std::sqrt(2.0) / 3.0, 1e-15);
}

TEST(Aggregate, PenaltyModes) {
  MatchResult m;
  m.pairs = {{"t1", "d1", 0.0}, {"t1", "d2", 0.0}};
  const PairScores s{{{"t1", "d1"}, 0.9}, {{"t1", "d2"}, 0.7}};
  EXPECT_NEAR(aggregate(m, s, PenaltyMode::mean_divided_by_count).mean, 0.4, 1e-15);
  EXPECT_NEAR(aggregate(m, s, PenaltyMode::min_of_ties).mean, 0.7, 1e-15);
  EXPECT_EQ(aggregate(m, s, PenaltyMode::mean_divided_by_count).per_target[0].n_assigned, 2u);
}

TEST(Aggregate, Errors) {
  EXPECT_THROW(aggregate(MatchResult{}, {}, PenaltyMode::min_of_ties), InvalidArgument);
  MatchResult m;
  m.pairs = {{"t1", "d1", 1.0}};
  EXPECT_THROW(aggregate(m, {}, PenaltyMode::min_of_ties), InvalidArgument);
}

TEST(Aggregate, SpuriousDelineationNeverRaisesMean) {
  const std::vector<Candidate> targets{box("t1", 0, 0, 10, 10), box("t2", 20, 20, 30, 30)};
  std::vector<Candidate> delins{box("d1", 0, 0, 10, 9), box("d2", 21, 20, 30, 30)};
  auto run = [&](const std::vector<Candidate>& ds, PenaltyMode mode) {
    const auto m = match_max_iou(ds, targets, kFrame);
    PairScores s;
    for (const auto& p : m.pairs) s[{p.target_id, p.delineation_id}] = p.pairing_score;
    return aggregate(m, s, mode).mean;
  };
  for (auto mode : {PenaltyMode::min_of_ties, PenaltyMode::mean_divided_by_count}) {
    const double before = run(delins, mode);
    auto more = delins;
    more.push_back(box("junk", 40, 40, 44, 44));
    EXPECT_LE(run(more, mode), before);
  }
  auto more = delins;
  more.push_back(box("junk", 40, 40, 44, 44));
  EXPECT_LT(run(more, PenaltyMode::mean_divided_by_count), run(delins, PenaltyMode::mean_divided_by_count));
}

TEST(Determinism, ShuffledInputsGiveSameResult) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> pos(2, 55), size(1, 6);
  std::vector<Candidate> targets, delins;
  for (int k = 0; k < 12; ++k) {
    const double x = pos(rng), y = pos(rng);
    targets.push_back({"t" + std::to_string(k), RectShape{x, y, size(rng), size(rng)}});
    delins.push_back({"d" + std::to_string(k), RectShape{x + 0.5, y - 0.5, size(rng), size(rng)}});
  }
  delins.push_back({"dup", std::get<RectShape>(delins[0].shape)});
  const auto ref_iou = match_max_iou(delins, targets, kFrame);
  const auto ref_nc = match_nearest_center(delins, targets, rc_lookup);
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(targets.begin(), targets.end(), rng);
    std::shuffle(delins.begin(), delins.end(), rng);
    EXPECT_EQ(match_max_iou(delins, targets, kFrame), ref_iou);
    EXPECT_EQ(match_nearest_center(delins, targets, rc_lookup), ref_nc);
  }
}
