#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "torsotext/error.hpp"

namespace torsotext {

/// Row-major 2-D grid, optionally multi-channel (channel-interleaved).
/// Carrier for gradient maps, fused images, difference maps and score maps.
template <typename T>
struct Grid {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<T> values;

  Grid() = default;
  Grid(int w, int h, int c, std::vector<T> v)
      : width(w), height(h), channels(c), values(std::move(v)) {
    if (width < 1 || height < 1 || channels < 1)
      raise(Err::InvalidArgument, "grid dimensions must be positive");
    if (values.size() != static_cast<size_t>(width) * height * channels)
      raise(Err::ShapeError, "grid value count does not match dimensions");
  }

  static Grid zeros(int w, int h, int c = 1) {
    return Grid(w, h, c, std::vector<T>(static_cast<size_t>(w) * h * c, T(0)));
  }

  size_t index(int x, int y, int c = 0) const {
    return (static_cast<size_t>(y) * width + x) * channels + c;
  }

  T& at(int x, int y, int c = 0) { return values[index(x, y, c)]; }
  T at(int x, int y, int c = 0) const { return values[index(x, y, c)]; }

  bool same_shape(const Grid& other) const {
    return width == other.width && height == other.height && channels == other.channels;
  }

  bool all_finite() const {
    for (T v : values)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  bool operator==(const Grid& other) const = default;
};

using FloatMap = Grid<float>;
using DoubleMap = Grid<double>;

inline void require_same_shape(const FloatMap& a, const FloatMap& b, const char* what) {
  if (!a.same_shape(b)) raise(Err::ShapeError, std::string(what) + ": shape mismatch");
}

inline void require_single_channel(const FloatMap& m, const char* what) {
  if (m.channels != 1) raise(Err::ShapeError, std::string(what) + ": expected single channel");
}

template <typename T, typename U>
Grid<U> grid_cast(const Grid<T>& g) {
  std::vector<U> out(g.values.size());
  for (size_t i = 0; i < g.values.size(); ++i) out[i] = static_cast<U>(g.values[i]);
  return Grid<U>(g.width, g.height, g.channels, std::move(out));
}

/// Axis-aligned rectangle, top-left anchored, extents at least 1 px.
struct Rect {
  int x = 0;
  int y = 0;
  int w = 1;
  int h = 1;

  int right() const { return x + w; }    // exclusive
  int bottom() const { return y + h; }   // exclusive
  long long area() const { return static_cast<long long>(w) * h; }
  int center_x() const { return x + w / 2; }
  int center_y() const { return y + h / 2; }

  bool contains(int px, int py) const {
    return px >= x && px < right() && py >= y && py < bottom();
  }

  bool operator==(const Rect& other) const = default;
};

inline void validate_rect(const Rect& r, const char* what) {
  if (r.w < 1 || r.h < 1) raise(Err::InvalidArgument, std::string(what) + ": empty rect");
}

/// Clamps to the [0,w)x[0,h) image; returns w=0/h=0 when nothing is left.
inline Rect clamp_rect(const Rect& r, int img_w, int img_h) {
  int x0 = std::max(r.x, 0);
  int y0 = std::max(r.y, 0);
  int x1 = std::min(r.right(), img_w);
  int y1 = std::min(r.bottom(), img_h);
  Rect out;
  out.x = x0;
  out.y = y0;
  out.w = std::max(0, x1 - x0);
  out.h = std::max(0, y1 - y0);
  return out;
}

inline Rect rect_union(const Rect& a, const Rect& b) {
  int x0 = std::min(a.x, b.x);
  int y0 = std::min(a.y, b.y);
  int x1 = std::max(a.right(), b.right());
  int y1 = std::max(a.bottom(), b.bottom());
  return Rect{x0, y0, x1 - x0, y1 - y0};
}

/// Euclidean gap between two rectangles (0 when they touch or overlap).
inline double rect_distance(const Rect& a, const Rect& b) {
  int dx = std::max({0, a.x - b.right(), b.x - a.right()});
  int dy = std::max({0, a.y - b.bottom(), b.y - a.bottom()});
  return std::sqrt(static_cast<double>(dx) * dx + static_cast<double>(dy) * dy);
}

/// One grayscale video frame, intensities in [0,1].
struct Frame {
  int index = 0;
  int width = 0;
  int height = 0;
  std::vector<float> pixels;

  float at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
  float& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }

  bool operator==(const Frame& other) const = default;
};

inline Frame make_frame(int index, int width, int height, std::vector<float> pixels) {
  if (width < 16 || height < 16)
    raise(Err::InvalidArgument, "frame must be at least 16x16");
  if (pixels.size() != static_cast<size_t>(width) * height)
    raise(Err::ShapeError, "frame pixel count does not match dimensions");
  for (float v : pixels) {
    if (!(v >= 0.0f && v <= 1.0f))
      raise(Err::RangeError, "frame intensity outside [0,1]");
  }
  return Frame{index, width, height, std::move(pixels)};
}

/// BT.601 luma. Inputs and output in [0,1].
inline float rgb_to_gray(float r, float g, float b) {
  auto in_range = [](float v) { return v >= 0.0f && v <= 1.0f; };
  if (!in_range(r) || !in_range(g) || !in_range(b))
    raise(Err::RangeError, "rgb channel outside [0,1]");
  double y = 0.299 * r + 0.587 * g + 0.114 * b;
  return static_cast<float>(std::clamp(y, 0.0, 1.0));
}

}  // namespace torsotext
