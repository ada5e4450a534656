#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "surfdict/image_io.hpp"

namespace surfdict {

inline constexpr int kDescriptorSize = 64;

/// 64 values, 16 subregions in row-major order, each holding
/// (sum dx, sum dy, sum |dx|, sum |dy|).
using Descriptor = std::array<float, kDescriptorSize>;

/// Interest point. Geometry is kept in single precision so that it survives
/// the dictionary file format bit-exactly.
struct Keypoint {
  float x = 0.0f;
  float y = 0.0f;
  float scale = 0.0f;
  float orientation = 0.0f;
  std::int8_t laplacian_sign = 1;
  std::uint32_t id = 0;

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

struct DetectorParams {
  double hessian_threshold = 0.0004;
  int octaves = 3;
  int layers_per_octave = 4;
  int initial_step = 1;
};

struct HessianResponse {
  double det = 0.0;
  int laplacian_sign = 1;
};

/// Box-filter approximation of the scale-normalized Hessian determinant at
/// (x, y) for a filter of side `filter_size` (9, 15, 21, ...). Dxy is
/// weighted by 0.9 and every response is divided by the filter area.
HessianResponse hessian_response(const IntegralImage& ii, int x, int y, int filter_size);

/// Haar wavelet responses of side `size` centered at (x, y).
struct HaarResponse {
  double dx = 0.0;
  double dy = 0.0;
};
HaarResponse haar_response(const IntegralImage& ii, int x, int y, int size);

/// Filter side used at (octave, layer), both zero-based:
/// 9 15 21 27 / 15 27 39 51 / 27 51 75 99 ...
int filter_size_for(int octave, int layer);

/// One distinct filter size of the scale space and its sampling step. Every
/// level is sampled on the same grid, so shifting an image by a multiple of
/// the step shifts the detections by exactly that amount.
struct ScaleLevel {
  int filter_size = 0;
  int step = 1;
};

/// Distinct filter sizes of all octaves, ascending. Octaves overlap (27
/// appears in the first three), so maxima are searched along this merged
/// axis to avoid reporting the same blob once per octave.
std::vector<ScaleLevel> scale_levels(const DetectorParams& params);

/// Scale-space maxima of the Hessian determinant above the threshold, with
/// quadratic sub-pixel/sub-scale refinement and orientation assigned. Ids
/// follow scan order (octave, layer, y, x), i.e. ascending filter size.
std::vector<Keypoint> detect_keypoints(const IntegralImage& ii, const DetectorParams& params);

/// Dominant orientation in [0, 2pi) from Gaussian-weighted Haar responses in
/// a disc of radius 6s, using a sliding pi/3 window.
float assign_orientation(const IntegralImage& ii, const Keypoint& kp);

/// Oriented 20s x 20s window, 4x4 subregions of 5x5 samples, normalized to
/// unit length. A window without gradient yields the zero vector.
Descriptor compute_descriptor(const IntegralImage& ii, const Keypoint& kp);

struct Feature {
  Keypoint keypoint;
  Descriptor descriptor;
};

/// detect_keypoints followed by compute_descriptor for every keypoint.
std::vector<Feature> extract_features(const IntegralImage& ii, const DetectorParams& params);

}  // namespace surfdict
