#include <gtest/gtest.h>

#include <cmath>
#include <deque>
#include <numbers>
#include <random>

#include "surfdict/error.hpp"
#include "surfdict/geometry.hpp"

using namespace surfdict;

namespace {

constexpr double kPi = std::numbers::pi;

// Owns the records that MatchPair points at; deque keeps addresses stable.
struct PairBuilder {
  std::deque<KeypointRecord> store;
  std::vector<MatchPair> pairs;

  const KeypointRecord* add(double x, double y, double orientation) {
    KeypointRecord r;
    r.keypoint_id = static_cast<std::uint32_t>(store.size());
    r.x = static_cast<float>(x);
    r.y = static_cast<float>(y);
    r.scale = 2.0f;
    r.orientation = static_cast<float>(orientation);
    store.push_back(r);
    return &store.back();
  }

  void pair(double ax, double ay, double ao, double bx, double by, double bo) {
    const KeypointRecord* a = add(ax, ay, ao);
    const KeypointRecord* b = add(bx, by, bo);
    pairs.push_back({a, b, 0.1});
  }
};

// Similarity transform applied to the candidate side: rotate by `theta`
// about the origin, scale by `s`, then translate.
struct Similarity {
  double theta = 0.0;
  double s = 1.0;
  double tx = 0.0;
  double ty = 0.0;

  void apply(double x, double y, double o, double& ox, double& oy, double& oo) const {
    ox = s * (std::cos(theta) * x - std::sin(theta) * y) + tx;
    oy = s * (std::sin(theta) * x + std::cos(theta) * y) + ty;
    oo = std::fmod(o + theta + 2.0 * kPi, 2.0 * kPi);
  }
};

PairBuilder consistent_set(std::mt19937& rng, int n, const Similarity& t) {
  std::uniform_real_distribution<double> pos(0.0, 300.0);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * kPi);
  PairBuilder pb;
  for (int i = 0; i < n; ++i) {
    const double x = pos(rng), y = pos(rng), o = ang(rng);
    double bx, by, bo;
    t.apply(x, y, o, bx, by, bo);
    pb.pair(x, y, o, bx, by, bo);
  }
  return pb;
}

std::vector<std::uint32_t> kept_ids(const VerifiedMatch& v) {
  std::vector<std::uint32_t> out;
  for (const MatchPair& p : v.kept) out.push_back(p.a->keypoint_id);
  return out;
}

}  // namespace

TEST(CircularDistance, FoldsIntoHalfTurn) {
  EXPECT_NEAR(circular_distance(0.1, 2.0 * kPi - 0.1), 0.2, 1e-12);
  EXPECT_NEAR(circular_distance(-kPi, kPi), 0.0, 1e-12);
  EXPECT_NEAR(circular_distance(0.0, kPi), kPi, 1e-12);
  EXPECT_NEAR(circular_distance(1.0, 1.0 + 6.0 * kPi), 0.0, 1e-9);
}

TEST(PairConsistency, PureTranslationIsConsistent) {
  PairBuilder pb;
  pb.pair(10, 20, 0.4, 110, 70, 0.4);
  pb.pair(50, 35, 1.1, 150, 85, 1.1);
  EXPECT_TRUE(pair_consistency(pb.pairs[0], pb.pairs[1]));
}

TEST(PairConsistency, CrossedCorrespondenceIsInconsistent) {
  PairBuilder pb;
  pb.pair(10, 20, 0.0, 110, 70, 0.0);
  pb.pair(50, 35, 0.0, 150, 85, 0.0);
  // Same keypoints, candidate ends swapped.
  const MatchPair crossed0{pb.pairs[0].a, pb.pairs[1].b, 0.1};
  const MatchPair crossed1{pb.pairs[1].a, pb.pairs[0].b, 0.1};
  EXPECT_FALSE(pair_consistency(crossed0, crossed1));
}

TEST(PairConsistency, ThirtyDegreeRotationWithCoRotatedOrientations) {
  const Similarity rot{kPi / 6.0, 1.0, 40.0, -15.0};
  PairBuilder pb;
  const double pts[3][3] = {{10, 20, 0.3}, {60, 5, 2.0}, {35, 90, 5.5}};
  for (const auto& p : pts) {
    double bx, by, bo;
    rot.apply(p[0], p[1], p[2], bx, by, bo);
    pb.pair(p[0], p[1], p[2], bx, by, bo);
  }
  EXPECT_TRUE(pair_consistency(pb.pairs[0], pb.pairs[1]));
  EXPECT_TRUE(pair_consistency(pb.pairs[1], pb.pairs[2]));
  // Without co-rotating the orientations the relative angles disagree.
  PairBuilder raw;
  for (const auto& p : pts) {
    double bx, by, bo;
    rot.apply(p[0], p[1], p[2], bx, by, bo);
    raw.pair(p[0], p[1], p[2], bx, by, p[2]);
  }
  EXPECT_FALSE(pair_consistency(raw.pairs[0], raw.pairs[1]));
}

TEST(PairConsistency, CoincidentKeypointsGiveFalse) {
  PairBuilder pb;
  pb.pair(10, 10, 0.0, 20, 20, 0.0);
  pb.pair(10, 10, 0.0, 30, 20, 0.0);
  EXPECT_FALSE(pair_consistency(pb.pairs[0], pb.pairs[1]));
  EXPECT_FALSE(pair_consistency(pb.pairs[1], pb.pairs[0]));
}

TEST(PairConsistency, DistanceRatioBand) {
  for (double s : {0.7, 0.85, 1.0, 1.2, 1.3}) {
    PairBuilder pb;
    pb.pair(0, 0, 0.0, 0, 0, 0.0);
    pb.pair(100, 0, 0.0, 100 * s, 0, 0.0);
    EXPECT_EQ(pair_consistency(pb.pairs[0], pb.pairs[1]), s >= 0.8 && s <= 1.25) << s;
  }
}

TEST(PairConsistency, SymmetricOnRandomPairs) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> pos(0.0, 100.0);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * kPi);
  PairBuilder pb;
  for (int i = 0; i < 60; ++i) {
    const double x = pos(rng), y = pos(rng), o = ang(rng);
    // Half of the pairs are near-consistent so both outcomes occur.
    if (i % 2 == 0) {
      pb.pair(x, y, o, x + 30 + pos(rng) * 0.02, y - 10, o + 0.05);
    } else {
      pb.pair(x, y, o, pos(rng), pos(rng), ang(rng));
    }
  }
  int agreements = 0;
  for (std::size_t i = 0; i < pb.pairs.size(); ++i) {
    for (std::size_t j = i + 1; j < pb.pairs.size(); ++j) {
      const bool ij = pair_consistency(pb.pairs[i], pb.pairs[j]);
      EXPECT_EQ(ij, pair_consistency(pb.pairs[j], pb.pairs[i]));
      agreements += ij;
    }
  }
  EXPECT_GT(agreements, 0);
}

TEST(RequiredSupport, MaxOfCountAndFraction) {
  const GeometryParams p;
  EXPECT_EQ(required_support(0, p), 2u);
  EXPECT_EQ(required_support(1, p), 2u);
  EXPECT_EQ(required_support(8, p), 3u);   // ceil(0.3 * 7) = 3
  EXPECT_EQ(required_support(11, p), 3u);  // ceil(0.3 * 10) = 3
  EXPECT_EQ(required_support(12, p), 4u);  // ceil(3.3)
}

TEST(FilterPairs, RigidTranslationKeepsEverything) {
  std::mt19937 rng(2);
  for (int n : {3, 5, 20}) {
    const PairBuilder pb = consistent_set(rng, n, Similarity{0.0, 1.0, 25.0, -40.0});
    const VerifiedMatch v = filter_pairs(pb.pairs);
    EXPECT_EQ(v.kept.size(), static_cast<std::size_t>(n));
    EXPECT_TRUE(v.rejected.empty());
    ASSERT_TRUE(v.center_a && v.center_b);
    EXPECT_NEAR(v.center_b->x - v.center_a->x, 25.0, 1e-3);
    EXPECT_NEAR(v.center_b->y - v.center_a->y, -40.0, 1e-3);
  }
}

TEST(FilterPairs, TenInliersOneOutlier) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    PairBuilder pb = consistent_set(rng, 10, Similarity{0.4, 1.0, 12.0, 7.0});
    std::uniform_real_distribution<double> pos(0.0, 300.0);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * kPi);
    pb.pair(pos(rng), pos(rng), ang(rng), pos(rng), pos(rng), ang(rng));
    const VerifiedMatch v = filter_pairs(pb.pairs);
    ASSERT_EQ(v.rejected.size(), 1u) << trial;
    EXPECT_EQ(v.rejected[0].a, pb.pairs.back().a);
    EXPECT_EQ(v.kept.size(), 10u);
  }
}

TEST(FilterPairs, FewerThanTwoPairsAreRejected) {
  EXPECT_TRUE(filter_pairs({}).kept.empty());
  PairBuilder pb;
  pb.pair(0, 0, 0, 5, 5, 0);
  const VerifiedMatch one = filter_pairs(pb.pairs);
  EXPECT_TRUE(one.kept.empty());
  EXPECT_EQ(one.rejected.size(), 1u);
  EXPECT_FALSE(one.center_a.has_value());
  EXPECT_FALSE(one.center_b.has_value());
}

TEST(FilterPairs, PartitionPreservesInputOrder) {
  std::mt19937 rng(4);
  PairBuilder pb = consistent_set(rng, 12, Similarity{1.0, 1.1, 0.0, 0.0});
  std::uniform_real_distribution<double> pos(0.0, 300.0);
  for (int i = 0; i < 4; ++i) pb.pair(pos(rng), pos(rng), 0.0, pos(rng), pos(rng), 3.0);
  const VerifiedMatch v = filter_pairs(pb.pairs);
  EXPECT_EQ(v.kept.size() + v.rejected.size(), pb.pairs.size());
  std::size_t ki = 0, ri = 0;
  for (const MatchPair& p : pb.pairs) {
    if (ki < v.kept.size() && v.kept[ki].a == p.a) {
      ++ki;
    } else {
      ASSERT_LT(ri, v.rejected.size());
      EXPECT_EQ(v.rejected[ri].a, p.a);
      ++ri;
    }
  }
  EXPECT_EQ(ki, v.kept.size());
  EXPECT_EQ(ri, v.rejected.size());
}

TEST(FilterPairs, WideningTolerancesNeverShrinksKeptSet) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> jitter(-3.0, 3.0);
  std::uniform_real_distribution<double> ojit(-0.1, 0.1);
  for (int trial = 0; trial < 20; ++trial) {
    PairBuilder noisy;
    const PairBuilder base = consistent_set(rng, 15, Similarity{0.2 * trial, 1.0, 5.0, 5.0});
    for (const MatchPair& p : base.pairs) {
      noisy.pair(p.a->x, p.a->y, p.a->orientation, p.b->x + jitter(rng), p.b->y + jitter(rng),
                 p.b->orientation + ojit(rng));
    }
    GeometryParams narrow;
    narrow.angle_tolerance = 0.05;
    narrow.ratio_low = 0.95;
    narrow.ratio_high = 1.05;
    const auto small = kept_ids(filter_pairs(noisy.pairs, narrow));
    for (const GeometryParams& wide :
         {GeometryParams{0.15, 0.95, 1.05, 0.3, 2}, GeometryParams{0.05, 0.8, 1.25, 0.3, 2},
          GeometryParams{0.3, 0.7, 1.4, 0.3, 2}}) {
      const auto big = kept_ids(filter_pairs(noisy.pairs, wide));
      EXPECT_TRUE(std::includes(big.begin(), big.end(), small.begin(), small.end())) << trial;
    }
  }
}

TEST(FilterPairs, PartitionInvariantUnderSimilarityOfCandidateSide) {
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> pos(0.0, 300.0);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * kPi);
  for (int trial = 0; trial < 10; ++trial) {
    // Structured input: a rigid set plus random outliers; no length ratio
    // sits near a band edge, so a mild scale keeps every decision.
    PairBuilder pb = consistent_set(rng, 12, Similarity{0.7, 1.0, 3.0, 4.0});
    for (int i = 0; i < 3; ++i) pb.pair(pos(rng), pos(rng), ang(rng), pos(rng), pos(rng), ang(rng));
    const auto before = kept_ids(filter_pairs(pb.pairs));

    for (const Similarity& t : {Similarity{1.3, 1.0, 50.0, -20.0}, Similarity{-2.0, 1.05, 0.0, 10.0}}) {
      PairBuilder moved;
      for (const MatchPair& p : pb.pairs) {
        double bx, by, bo;
        t.apply(p.b->x, p.b->y, p.b->orientation, bx, by, bo);
        moved.pair(p.a->x, p.a->y, p.a->orientation, bx, by, bo);
      }
      EXPECT_EQ(kept_ids(filter_pairs(moved.pairs)), before) << trial;
    }
  }
}

TEST(GeometryParams, ValidationRejectsBadBands) {
  EXPECT_NO_THROW(GeometryParams{}.validate());
  EXPECT_THROW((GeometryParams{0.15, 1.1, 1.25, 0.3, 2}.validate()), Error);
  EXPECT_THROW((GeometryParams{0.15, 0.8, 0.9, 0.3, 2}.validate()), Error);
  EXPECT_THROW((GeometryParams{0.15, 0.8, 1.25, 0.0, 2}.validate()), Error);
  EXPECT_THROW((GeometryParams{-0.1, 0.8, 1.25, 0.3, 2}.validate()), Error);
}
