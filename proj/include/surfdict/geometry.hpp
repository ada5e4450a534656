#pragma once

#include <optional>
#include <span>
#include <vector>

#include "surfdict/matcher.hpp"

namespace surfdict {

struct GeometryParams {
  double angle_tolerance = 0.15;  // radians
  double ratio_low = 0.8;
  double ratio_high = 1.25;
  double min_support_fraction = 0.3;
  int min_support_count = 2;

  /// Throws kParameter unless 0 < low < 1 < high, the fraction is in (0, 1]
  /// and the tolerance is non-negative.
  void validate() const;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct VerifiedMatch {
  std::vector<MatchPair> kept;
  std::vector<MatchPair> rejected;
  std::optional<Point2> center_a;  // set iff kept is non-empty
  std::optional<Point2> center_b;
};

/// Absolute difference of two angles folded into [0, pi].
double circular_distance(double a, double b);

/// True iff the segments joining the two pairs agree in direction (measured
/// against each endpoint's own orientation, from both ends) and in length
/// up to the ratio band. Coincident keypoints on either side give false.
bool pair_consistency(const MatchPair& p, const MatchPair& q, const GeometryParams& params = {});

/// Number of other pairs a pair must agree with to be kept.
std::size_t required_support(std::size_t pair_count, const GeometryParams& params);

/// Single-pass voting: keep a pair iff its support reaches required_support().
/// Input order is preserved within kept and rejected.
VerifiedMatch filter_pairs(std::span<const MatchPair> pairs, const GeometryParams& params = {});

}  // namespace surfdict
