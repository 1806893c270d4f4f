#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "torsotext/error.hpp"
#include "torsotext/grid.hpp"

namespace torsotext {

constexpr double kGmLogEpsilon = 1e-6;
constexpr double kDcTraceEpsilon = 1e-12;

/// Sobel responses with edge-replicated sampling, so constant frames give
/// exactly zero gradient everywhere (including borders).
inline DoubleMap sobel_x(const Frame& f) {
  DoubleMap out = DoubleMap::zeros(f.width, f.height);
  auto px = [&](int x, int y) {
    x = std::clamp(x, 0, f.width - 1);
    y = std::clamp(y, 0, f.height - 1);
    return static_cast<double>(f.at(x, y));
  };
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x)
      out.at(x, y) = (px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1)) -
                     (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1));
  return out;
}

inline DoubleMap sobel_y(const Frame& f) {
  DoubleMap out = DoubleMap::zeros(f.width, f.height);
  auto px = [&](int x, int y) {
    x = std::clamp(x, 0, f.width - 1);
    y = std::clamp(y, 0, f.height - 1);
    return static_cast<double>(f.at(x, y));
  };
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x)
      out.at(x, y) = (px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1)) -
                     (px(x - 1, y - 1) + 2.0 * px(x, y - 1) + px(x + 1, y - 1));
  return out;
}

struct GradientMagnitudeResult {
  FloatMap map;
  bool degenerate = false;  // constant frame: zero dynamic range, all-zeros output
};

/// Windowed mean gradient energy, log-widened, then min-max normalized to [0,1].
/// Border windows are clamped to the image; the mean divides by the pixels present.
inline GradientMagnitudeResult gradient_magnitude(const Frame& frame, int window = 3) {
  if (window < 1 || window % 2 == 0) raise(Err::InvalidArgument, "window must be odd");
  const int r = window / 2;
  DoubleMap sx = sobel_x(frame), sy = sobel_y(frame);

  DoubleMap mag = DoubleMap::zeros(frame.width, frame.height);
  for (size_t i = 0; i < mag.values.size(); ++i) {
    double gx = sx.values[i], gy = sy.values[i];
    mag.values[i] = std::sqrt((gx * gx + gy * gy) / 2.0);
  }

  std::vector<double> raw(mag.values.size());
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      int x0 = std::max(0, x - r), x1 = std::min(frame.width - 1, x + r);
      int y0 = std::max(0, y - r), y1 = std::min(frame.height - 1, y + r);
      double sum = 0.0;
      for (int yy = y0; yy <= y1; ++yy)
        for (int xx = x0; xx <= x1; ++xx) sum += mag.at(xx, yy);
      int count = (x1 - x0 + 1) * (y1 - y0 + 1);
      raw[mag.index(x, y)] = std::log(kGmLogEpsilon + sum / count);
    }
  }

  double lo = *std::min_element(raw.begin(), raw.end());
  double hi = *std::max_element(raw.begin(), raw.end());
  GradientMagnitudeResult result;
  result.map = FloatMap::zeros(frame.width, frame.height);
  if (hi - lo <= 0.0) {
    result.degenerate = true;
    return result;
  }
  for (size_t i = 0; i < raw.size(); ++i)
    result.map.values[i] = static_cast<float>((raw[i] - lo) / (hi - lo));
  return result;
}

/// 2x2 structure tensor accumulated over a window of Sobel products.
struct StructureTensor {
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  double lambda1 = 0.0;  // larger eigenvalue
  double lambda2 = 0.0;

  static StructureTensor from_sums(double sxx, double sxy, double syy) {
    StructureTensor t{sxx, sxy, syy, 0.0, 0.0};
    double trace = sxx + syy;
    double disc = std::sqrt(std::max(0.0, (sxx - syy) * (sxx - syy) + 4.0 * sxy * sxy));
    t.lambda1 = 0.5 * (trace + disc);
    t.lambda2 = 0.5 * (trace - disc);
    return t;
  }

  double coherence() const {
    double trace = lambda1 + lambda2;
    if (trace < kDcTraceEpsilon) return 0.0;
    double ratio = (lambda1 - lambda2) / trace;
    return std::clamp(ratio * ratio, 0.0, 1.0);
  }
};

inline StructureTensor structure_tensor_at(const DoubleMap& sx, const DoubleMap& sy, int x, int y,
                                           int window = 3) {
  const int r = window / 2;
  int x0 = std::max(0, x - r), x1 = std::min(sx.width - 1, x + r);
  int y0 = std::max(0, y - r), y1 = std::min(sx.height - 1, y + r);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int yy = y0; yy <= y1; ++yy) {
    for (int xx = x0; xx <= x1; ++xx) {
      double gx = sx.at(xx, yy), gy = sy.at(xx, yy);
      sxx += gx * gx;
      sxy += gx * gy;
      syy += gy * gy;
    }
  }
  return StructureTensor::from_sums(sxx, sxy, syy);
}

/// Squared normalized eigenvalue gap of the windowed structure tensor:
/// 1 for aligned gradients, 0 for isotropic patches (and for flat ones by convention).
inline FloatMap directional_coherence(const Frame& frame, int window = 3) {
  if (window < 1 || window % 2 == 0) raise(Err::InvalidArgument, "window must be odd");
  DoubleMap sx = sobel_x(frame), sy = sobel_y(frame);
  FloatMap out = FloatMap::zeros(frame.width, frame.height);
  for (int y = 0; y < frame.height; ++y)
    for (int x = 0; x < frame.width; ++x)
      out.at(x, y) = static_cast<float>(structure_tensor_at(sx, sy, x, y, window).coherence());
  return out;
}

/// Sliding-window max minus min, window clamped at borders. Nonnegative.
inline FloatMap local_range_diff(const FloatMap& map, int window = 5) {
  require_single_channel(map, "local_range_diff");
  if (window < 1 || window % 2 == 0) raise(Err::InvalidArgument, "window must be odd");
  const int r = window / 2;
  FloatMap out = FloatMap::zeros(map.width, map.height);
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      int x0 = std::max(0, x - r), x1 = std::min(map.width - 1, x + r);
      int y0 = std::max(0, y - r), y1 = std::min(map.height - 1, y + r);
      float lo = map.at(x0, y0), hi = lo;
      for (int yy = y0; yy <= y1; ++yy) {
        for (int xx = x0; xx <= x1; ++xx) {
          float v = map.at(xx, yy);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      }
      out.at(x, y) = hi - lo;
    }
  }
  return out;
}

/// Elementwise sum of the two range-enhanced feature maps.
struct FusedImage {
  int frame_index = 0;
  FloatMap map;
};

inline FusedImage fuse(const FloatMap& gm_diff, const FloatMap& dc_diff, int frame_index = 0) {
  require_same_shape(gm_diff, dc_diff, "fuse");
  FusedImage out;
  out.frame_index = frame_index;
  out.map = gm_diff;
  for (size_t i = 0; i < out.map.values.size(); ++i) out.map.values[i] += dc_diff.values[i];
  return out;
}

struct FeatureBundle {
  GradientMagnitudeResult gm;
  FloatMap dc;
  FloatMap gm_diff;
  FloatMap dc_diff;
  FusedImage fused;
};

inline FeatureBundle compute_features(const Frame& frame, int gm_window = 3,
                                      int range_window = 5) {
  FeatureBundle b;
  b.gm = gradient_magnitude(frame, gm_window);
  b.dc = directional_coherence(frame, gm_window);
  b.gm_diff = local_range_diff(b.gm.map, range_window);
  b.dc_diff = local_range_diff(b.dc, range_window);
  b.fused = fuse(b.gm_diff, b.dc_diff, frame.index);
  return b;
}

inline FusedImage compute_fused(const Frame& frame, int gm_window = 3, int range_window = 5) {
  return compute_features(frame, gm_window, range_window).fused;
}

}  // namespace torsotext
