#include "surfdict/surf.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "surfdict/error.hpp"

namespace surfdict {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Relative weight of the Dxy lobe against the Dxx/Dyy lobes.
constexpr double kDxyWeight = 0.9;
// Scale of the smallest (9x9) filter.
constexpr double kBaseScale = 1.2;

// Below this norm the descriptor window carries no gradient.
constexpr double kZeroDescriptorNorm = 1e-8;

double box(const IntegralImage& ii, int x0, int y0, int x1, int y1) {
  return ii.padded_box_sum(x0, y0, x1, y1);
}

float wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  auto f = static_cast<float>(a);
  if (f >= static_cast<float>(kTwoPi)) f = 0.0f;
  return f;
}


}  // namespace

HessianResponse hessian_response(const IntegralImage& ii, int x, int y, int filter_size) {
  if (filter_size < 9 || (filter_size - 9) % 6 != 0) {
    throw Error(ErrorKind::kParameter,
                "filter size " + std::to_string(filter_size) + " not in 9, 15, 21, ... progression");
  }
  const int lobe = filter_size / 3;
  const int half = (filter_size - 1) / 2;
  const int thin = lobe - 1;  // half extent of the 2*lobe-1 side
  const int mid = lobe / 2;

  const double dxx = box(ii, x - half, y - thin, x + half, y + thin) -
                     3.0 * box(ii, x - mid, y - thin, x + mid, y + thin);
  const double dyy = box(ii, x - thin, y - half, x + thin, y + half) -
                     3.0 * box(ii, x - thin, y - mid, x + thin, y + mid);
  const double dxy = box(ii, x - lobe, y - lobe, x - 1, y - 1) +
                     box(ii, x + 1, y + 1, x + lobe, y + lobe) -
                     box(ii, x + 1, y - lobe, x + lobe, y - 1) -
                     box(ii, x - lobe, y + 1, x - 1, y + lobe);

  const double inv_area = 1.0 / (static_cast<double>(filter_size) * filter_size);
  const double nxx = dxx * inv_area;
  const double nyy = dyy * inv_area;
  const double nxy = dxy * inv_area;
  HessianResponse r;
  r.det = nxx * nyy - (kDxyWeight * nxy) * (kDxyWeight * nxy);
  r.laplacian_sign = (nxx + nyy) >= 0.0 ? 1 : -1;
  return r;
}

HaarResponse haar_response(const IntegralImage& ii, int x, int y, int size) {
  const int h = std::max(1, size / 2);
  const double inv_area = 1.0 / (4.0 * h * h);
  HaarResponse r;
  r.dx = (box(ii, x, y - h, x + h - 1, y + h - 1) - box(ii, x - h, y - h, x - 1, y + h - 1)) * inv_area;
  r.dy = (box(ii, x - h, y, x + h - 1, y + h - 1) - box(ii, x - h, y - h, x + h - 1, y - 1)) * inv_area;
  return r;
}

int filter_size_for(int octave, int layer) { return 3 * ((1 << (octave + 1)) * (layer + 1) + 1); }

float assign_orientation(const IntegralImage& ii, const Keypoint& kp) {
  const int s = std::max(1, static_cast<int>(std::lround(kp.scale)));
  const int cx = static_cast<int>(std::lround(kp.x));
  const int cy = static_cast<int>(std::lround(kp.y));
  constexpr double kSigma = 2.5;

  struct Sample {
    double dx, dy, angle;
  };
  std::vector<Sample> samples;
  samples.reserve(113);
  for (int j = -6; j <= 6; ++j) {
    for (int i = -6; i <= 6; ++i) {
      if (i * i + j * j >= 36) continue;
      const double g = std::exp(-(i * i + j * j) / (2.0 * kSigma * kSigma));
      const HaarResponse h = haar_response(ii, cx + i * s, cy + j * s, 4 * s);
      const double dx = g * h.dx;
      const double dy = g * h.dy;
      if (dx == 0.0 && dy == 0.0) continue;
      double a = std::atan2(dy, dx);
      if (a < 0.0) a += kTwoPi;
      samples.push_back({dx, dy, a});
    }
  }

  constexpr double kWindow = std::numbers::pi / 3.0;
  constexpr double kStep = 0.15;
  double best = 0.0;
  double best_dx = 0.0;
  double best_dy = 0.0;
  for (int k = 0; k * kStep < kTwoPi; ++k) {
    const double start = k * kStep;
    double sx = 0.0;
    double sy = 0.0;
    for (const Sample& smp : samples) {
      double rel = smp.angle - start;
      if (rel < 0.0) rel += kTwoPi;
      if (rel < kWindow) {
        sx += smp.dx;
        sy += smp.dy;
      }
    }
    const double mag = sx * sx + sy * sy;
    if (mag > best) {
      best = mag;
      best_dx = sx;
      best_dy = sy;
    }
  }
  if (best == 0.0) return 0.0f;
  return wrap_angle(std::atan2(best_dy, best_dx));
}

Descriptor compute_descriptor(const IntegralImage& ii, const Keypoint& kp) {
  const double scale = kp.scale;
  const int haar = 2 * std::max(1, static_cast<int>(std::lround(scale)));
  const double co = std::cos(static_cast<double>(kp.orientation));
  const double si = std::sin(static_cast<double>(kp.orientation));
  constexpr double kSigma = 3.3;

  std::array<double, kDescriptorSize> acc{};
  for (int v = -10; v < 10; ++v) {
    for (int u = -10; u < 10; ++u) {
      const double ou = (u + 0.5) * scale;
      const double ov = (v + 0.5) * scale;
      const int px = static_cast<int>(std::lround(kp.x + co * ou - si * ov));
      const int py = static_cast<int>(std::lround(kp.y + si * ou + co * ov));
      const HaarResponse h = haar_response(ii, px, py, haar);
      const double rdx = co * h.dx + si * h.dy;
      const double rdy = -si * h.dx + co * h.dy;
      const double r2 = (u + 0.5) * (u + 0.5) + (v + 0.5) * (v + 0.5);
      const double w = std::exp(-r2 / (2.0 * kSigma * kSigma));
      const int sub = ((v + 10) / 5) * 4 + (u + 10) / 5;
      double* cell = &acc[static_cast<std::size_t>(sub) * 4];
      cell[0] += w * rdx;
      cell[1] += w * rdy;
      cell[2] += w * std::abs(rdx);
      cell[3] += w * std::abs(rdy);
    }
  }

  double norm2 = 0.0;
  for (double a : acc) norm2 += a * a;
  const double norm = std::sqrt(norm2);
  Descriptor out{};
  if (norm < kZeroDescriptorNorm) return out;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = static_cast<float>(acc[k] / norm);
  return out;
}

std::vector<ScaleLevel> scale_levels(const DetectorParams& params) {
  std::vector<ScaleLevel> levels;
  for (int octave = 0; octave < params.octaves; ++octave) {
    for (int layer = 0; layer < params.layers_per_octave; ++layer) {
      const int size = filter_size_for(octave, layer);
      const bool known = std::any_of(levels.begin(), levels.end(),
                                     [size](const ScaleLevel& l) { return l.filter_size == size; });
      if (!known) levels.push_back({size, params.initial_step});
    }
  }
  std::sort(levels.begin(), levels.end(),
            [](const ScaleLevel& a, const ScaleLevel& b) { return a.filter_size < b.filter_size; });
  return levels;
}

std::vector<Keypoint> detect_keypoints(const IntegralImage& ii, const DetectorParams& params) {
  if (params.octaves <= 0 || params.octaves > 8 || params.layers_per_octave < 3 || params.initial_step <= 0 ||
      !(params.hessian_threshold >= 0.0)) {
    throw Error(ErrorKind::kParameter,
                "detector needs 1 <= octaves <= 8, layers >= 3, step >= 1, threshold >= 0");
  }
  std::vector<Keypoint> keypoints;
  const int width = ii.width();
  const int height = ii.height();
  if (width < 9 || height < 9) return keypoints;

  const std::vector<ScaleLevel> levels = scale_levels(params);
  const auto det_at = [&](std::size_t level, int x, int y) {
    return hessian_response(ii, x, y, levels[level].filter_size).det;
  };

  for (std::size_t k = 1; k + 1 < levels.size(); ++k) {
    const int size = levels[k].filter_size;
    const int step = levels[k].step;
    const int gw = (width + step - 1) / step;
    const int gh = (height + step - 1) / step;
    if (gw < 3 || gh < 3) continue;

    std::vector<double> map(static_cast<std::size_t>(gw) * static_cast<std::size_t>(gh));
    for (int gy = 0; gy < gh; ++gy) {
      for (int gx = 0; gx < gw; ++gx) {
        map[static_cast<std::size_t>(gy) * static_cast<std::size_t>(gw) + static_cast<std::size_t>(gx)] =
            det_at(k, gx * step, gy * step);
      }
    }
    const auto in_map = [&](int gx, int gy) {
      return map[static_cast<std::size_t>(gy) * static_cast<std::size_t>(gw) + static_cast<std::size_t>(gx)];
    };

    // The largest filter of the neighbourhood must lie inside the image.
    const int reach = (levels[k + 1].filter_size - 1) / 2;
    for (int gy = 1; gy + 1 < gh; ++gy) {
      const int py = gy * step;
      if (py - reach < 0 || py + reach >= height) continue;
      for (int gx = 1; gx + 1 < gw; ++gx) {
        const int px = gx * step;
        if (px - reach < 0 || px + reach >= width) continue;
        const double v = in_map(gx, gy);
        if (!(v > params.hessian_threshold)) continue;

        bool is_max = true;
        for (int dy = -1; dy <= 1 && is_max; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if ((dx != 0 || dy != 0) && in_map(gx + dx, gy + dy) >= v) {
              is_max = false;
              break;
            }
          }
        }
        if (!is_max) continue;

        // Neighbouring scales, sampled on this level's grid.
        std::array<std::array<std::array<double, 3>, 3>, 3> cube{};
        for (int dl = -1; dl <= 1; ++dl) {
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              cube[dl + 1][dy + 1][dx + 1] =
                  dl == 0 ? in_map(gx + dx, gy + dy)
                          : det_at(dl < 0 ? k - 1 : k + 1, px + dx * step, py + dy * step);
            }
          }
        }
        for (int dl = -1; dl <= 1 && is_max; dl += 2) {
          for (const auto& row : cube[dl + 1]) {
            if (std::any_of(row.begin(), row.end(), [v](double n) { return n >= v; })) {
              is_max = false;
              break;
            }
          }
        }
        if (!is_max) continue;

        // Quadratic fit over the 3x3x3 neighbourhood (scale in level units).
        const auto c = [&](int dl, int dy, int dx) { return cube[dl + 1][dy + 1][dx + 1]; };
        Eigen::Vector3d grad(0.5 * (c(0, 0, 1) - c(0, 0, -1)), 0.5 * (c(0, 1, 0) - c(0, -1, 0)),
                             0.5 * (c(1, 0, 0) - c(-1, 0, 0)));
        const double dxx = c(0, 0, 1) + c(0, 0, -1) - 2.0 * v;
        const double dyy = c(0, 1, 0) + c(0, -1, 0) - 2.0 * v;
        const double dss = c(1, 0, 0) + c(-1, 0, 0) - 2.0 * v;
        const double dxy = 0.25 * (c(0, 1, 1) - c(0, 1, -1) - c(0, -1, 1) + c(0, -1, -1));
        const double dxs = 0.25 * (c(1, 0, 1) - c(1, 0, -1) - c(-1, 0, 1) + c(-1, 0, -1));
        const double dys = 0.25 * (c(1, 1, 0) - c(1, -1, 0) - c(-1, 1, 0) + c(-1, -1, 0));
        Eigen::Matrix3d hess;
        hess << dxx, dxy, dxs, dxy, dyy, dys, dxs, dys, dss;
        Eigen::Vector3d offset = Eigen::Vector3d::Zero();
        const Eigen::FullPivLU<Eigen::Matrix3d> lu(hess);
        if (lu.isInvertible()) {
          offset = -lu.solve(grad);
          if (!offset.allFinite()) offset.setZero();
        }
        offset = offset.cwiseMax(-0.5).cwiseMin(0.5);

        const double size_step = offset[2] >= 0.0 ? levels[k + 1].filter_size - size
                                                  : size - levels[k - 1].filter_size;
        Keypoint kp;
        kp.x = static_cast<float>((gx + offset[0]) * step);
        kp.y = static_cast<float>((gy + offset[1]) * step);
        kp.scale = static_cast<float>(kBaseScale * (size + offset[2] * size_step) / 9.0);
        kp.laplacian_sign = static_cast<std::int8_t>(hessian_response(ii, px, py, size).laplacian_sign);
        kp.id = static_cast<std::uint32_t>(keypoints.size());
        keypoints.push_back(kp);
      }
    }
  }

  for (Keypoint& kp : keypoints) kp.orientation = assign_orientation(ii, kp);
  return keypoints;
}

std::vector<Feature> extract_features(const IntegralImage& ii, const DetectorParams& params) {
  std::vector<Feature> features;
  for (const Keypoint& kp : detect_keypoints(ii, params)) {
    features.push_back({kp, compute_descriptor(ii, kp)});
  }
  return features;
}

}  // namespace surfdict
