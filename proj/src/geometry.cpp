#include "surfdict/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "surfdict/error.hpp"

namespace surfdict {

void GeometryParams::validate() const {
  if (!(angle_tolerance >= 0.0) || !(ratio_low > 0.0 && ratio_low < 1.0 && ratio_high > 1.0) ||
      !(min_support_fraction > 0.0 && min_support_fraction <= 1.0) || min_support_count < 0) {
    throw Error(ErrorKind::kParameter, "invalid geometry parameters");
  }
}

double circular_distance(double a, double b) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double d = std::fmod(std::abs(a - b), kTwoPi);
  return d > std::numbers::pi ? kTwoPi - d : d;
}

namespace {

// Direction of from -> to, expressed in the frame of `from`'s orientation.
bool relative_direction(const KeypointRecord& from, const KeypointRecord& to, double& angle, double& length) {
  const double dx = static_cast<double>(to.x) - static_cast<double>(from.x);
  const double dy = static_cast<double>(to.y) - static_cast<double>(from.y);
  length = std::hypot(dx, dy);
  if (length == 0.0) return false;
  angle = std::atan2(dy, dx) - static_cast<double>(from.orientation);
  return true;
}

bool end_agrees(const KeypointRecord& from_a, const KeypointRecord& to_a, const KeypointRecord& from_b,
                const KeypointRecord& to_b, const GeometryParams& params) {
  double angle_a = 0.0;
  double angle_b = 0.0;
  double len_a = 0.0;
  double len_b = 0.0;
  if (!relative_direction(from_a, to_a, angle_a, len_a) || !relative_direction(from_b, to_b, angle_b, len_b)) {
    return false;
  }
  if (circular_distance(angle_a, angle_b) > params.angle_tolerance) return false;
  const double ratio = len_b / len_a;
  return ratio >= params.ratio_low && ratio <= params.ratio_high;
}

}  // namespace

bool pair_consistency(const MatchPair& p, const MatchPair& q, const GeometryParams& params) {
  return end_agrees(*p.a, *q.a, *p.b, *q.b, params) && end_agrees(*q.a, *p.a, *q.b, *p.b, params);
}

std::size_t required_support(std::size_t pair_count, const GeometryParams& params) {
  const std::size_t others = pair_count > 0 ? pair_count - 1 : 0;
  const auto by_fraction = static_cast<std::size_t>(std::ceil(params.min_support_fraction * static_cast<double>(others)));
  return std::max(static_cast<std::size_t>(params.min_support_count), by_fraction);
}

VerifiedMatch filter_pairs(std::span<const MatchPair> pairs, const GeometryParams& params) {
  params.validate();
  const std::size_t n = pairs.size();
  std::vector<std::size_t> support(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (pair_consistency(pairs[i], pairs[j], params)) {
        ++support[i];
        ++support[j];
      }
    }
  }

  VerifiedMatch out;
  const std::size_t need = required_support(n, params);
  Point2 sum_a;
  Point2 sum_b;
  for (std::size_t i = 0; i < n; ++i) {
    if (support[i] >= need) {
      out.kept.push_back(pairs[i]);
      sum_a.x += pairs[i].a->x;
      sum_a.y += pairs[i].a->y;
      sum_b.x += pairs[i].b->x;
      sum_b.y += pairs[i].b->y;
    } else {
      out.rejected.push_back(pairs[i]);
    }
  }
  if (!out.kept.empty()) {
    const auto k = static_cast<double>(out.kept.size());
    out.center_a = Point2{sum_a.x / k, sum_a.y / k};
    out.center_b = Point2{sum_b.x / k, sum_b.y / k};
  }
  return out;
}

}  // namespace surfdict
