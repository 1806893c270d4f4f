#pragma once

// Independent reference implementations used only by tests. Everything here is
// written as plain per-element double-precision evaluation, deliberately
// avoiding the library's code paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "torsotext/grid.hpp"
#include "torsotext/textdet.hpp"

namespace oracles {

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline torsotext::Frame random_frame(int w, int h, std::mt19937_64& rng, int index = 0) {
  std::vector<float> px(static_cast<size_t>(w) * h);
  for (auto& v : px) v = static_cast<float>(uniform01(rng));
  return torsotext::make_frame(index, w, h, std::move(px));
}

inline torsotext::FloatMap random_map(int w, int h, int c, std::mt19937_64& rng, float lo = 0.0f,
                                      float hi = 1.0f) {
  std::vector<float> v(static_cast<size_t>(w) * h * c);
  for (auto& x : v) x = lo + static_cast<float>(uniform01(rng)) * (hi - lo);
  return torsotext::FloatMap(w, h, c, std::move(v));
}

// --- gradient feature oracles ----------------------------------------------

inline double pixel_at(const torsotext::Frame& f, int x, int y) {
  x = std::clamp(x, 0, f.width - 1);
  y = std::clamp(y, 0, f.height - 1);
  return static_cast<double>(f.at(x, y));
}

inline double sobel_x_at(const torsotext::Frame& f, int x, int y) {
  return (pixel_at(f, x + 1, y - 1) + 2 * pixel_at(f, x + 1, y) + pixel_at(f, x + 1, y + 1)) -
         (pixel_at(f, x - 1, y - 1) + 2 * pixel_at(f, x - 1, y) + pixel_at(f, x - 1, y + 1));
}

inline double sobel_y_at(const torsotext::Frame& f, int x, int y) {
  return (pixel_at(f, x - 1, y + 1) + 2 * pixel_at(f, x, y + 1) + pixel_at(f, x + 1, y + 1)) -
         (pixel_at(f, x - 1, y - 1) + 2 * pixel_at(f, x, y - 1) + pixel_at(f, x + 1, y - 1));
}

// Gradient magnitude: windowed mean of sqrt((sx^2+sy^2)/2), log, then min-max.
inline std::vector<double> gm_oracle(const torsotext::Frame& f) {
  std::vector<double> raw(static_cast<size_t>(f.width) * f.height);
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      double sum = 0.0;
      int count = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          int xx = x + dx, yy = y + dy;
          if (xx < 0 || xx >= f.width || yy < 0 || yy >= f.height) continue;
          double gx = sobel_x_at(f, xx, yy), gy = sobel_y_at(f, xx, yy);
          sum += std::sqrt((gx * gx + gy * gy) / 2.0);
          ++count;
        }
      }
      raw[static_cast<size_t>(y) * f.width + x] = std::log(1e-6 + sum / count);
    }
  }
  double lo = *std::min_element(raw.begin(), raw.end());
  double hi = *std::max_element(raw.begin(), raw.end());
  for (auto& v : raw) v = hi > lo ? (v - lo) / (hi - lo) : 0.0;
  return raw;
}

// Directional coherence via the explicit quadratic-formula eigenvalues.
inline std::vector<double> dc_oracle(const torsotext::Frame& f) {
  std::vector<double> out(static_cast<size_t>(f.width) * f.height);
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      double sxx = 0, sxy = 0, syy = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          int xx = x + dx, yy = y + dy;
          if (xx < 0 || xx >= f.width || yy < 0 || yy >= f.height) continue;
          double gx = sobel_x_at(f, xx, yy), gy = sobel_y_at(f, xx, yy);
          sxx += gx * gx;
          sxy += gx * gy;
          syy += gy * gy;
        }
      }
      double b = -(sxx + syy), c = sxx * syy - sxy * sxy;
      double disc = std::sqrt(std::max(0.0, b * b - 4 * c));
      double l1 = (-b + disc) / 2, l2 = (-b - disc) / 2;
      double trace = l1 + l2;
      double v = trace < 1e-12 ? 0.0 : ((l1 - l2) / trace) * ((l1 - l2) / trace);
      out[static_cast<size_t>(y) * f.width + x] = std::min(1.0, v);
    }
  }
  return out;
}

inline std::vector<double> range_diff_oracle(const torsotext::FloatMap& m, int window = 5) {
  const int r = window / 2;
  std::vector<double> out(m.values.size());
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          int xx = x + dx, yy = y + dy;
          if (xx < 0 || xx >= m.width || yy < 0 || yy >= m.height) continue;
          double v = m.at(xx, yy);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      }
      out[static_cast<size_t>(y) * m.width + x] = hi - lo;
    }
  }
  return out;
}

// --- 1-D clustering oracle --------------------------------------------------

// Optimal 3-cluster inertia: optimal 1-D k-means partitions are contiguous in
// sorted order, so enumerate every contiguous split (allowing fewer clusters).
inline double optimal_3partition_inertia(std::vector<double> vals) {
  std::sort(vals.begin(), vals.end());
  const size_t n = vals.size();
  auto sse = [&](size_t i, size_t j) {
    if (j <= i) return 0.0;
    double mean = 0.0;
    for (size_t k = i; k < j; ++k) mean += vals[k];
    mean /= static_cast<double>(j - i);
    double s = 0.0;
    for (size_t k = i; k < j; ++k) s += (vals[k] - mean) * (vals[k] - mean);
    return s;
  };
  double best = sse(0, n);
  for (size_t i = 1; i < n; ++i) {
    best = std::min(best, sse(0, i) + sse(i, n));
    for (size_t j = i + 1; j < n; ++j)
      best = std::min(best, sse(0, i) + sse(i, j) + sse(j, n));
  }
  return best;
}

// --- skin oracles ------------------------------------------------------------

// Exact multiset mode (largest value among the most frequent).
inline double exact_mode(std::vector<double> vals) {
  if (vals.empty()) return 0.0;
  std::sort(vals.begin(), vals.end());
  double mode = vals[0];
  size_t best = 0, run = 1;
  for (size_t i = 1; i <= vals.size(); ++i) {
    if (i < vals.size() && vals[i] == vals[i - 1]) {
      ++run;
    } else {
      if (run >= best) {
        best = run;
        mode = vals[i - 1];
      }
      run = 1;
    }
  }
  return mode;
}

// Recursive flood fill over an arbitrary boolean grid, 8-connected.
inline std::vector<std::vector<std::pair<int, int>>> flood_components(
    const std::vector<uint8_t>& grid, int w, int h) {
  std::vector<int> label(grid.size(), -1);
  std::vector<std::vector<std::pair<int, int>>> comps;
  std::function<void(int, int, int)> fill = [&](int x, int y, int id) {
    if (x < 0 || x >= w || y < 0 || y >= h) return;
    size_t i = static_cast<size_t>(y) * w + x;
    if (!grid[i] || label[i] >= 0) return;
    label[i] = id;
    comps[static_cast<size_t>(id)].emplace_back(x, y);
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx)
        if (dx || dy) fill(x + dx, y + dy, id);
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (grid[static_cast<size_t>(y) * w + x] && label[static_cast<size_t>(y) * w + x] < 0) {
        comps.emplace_back();
        fill(x, y, static_cast<int>(comps.size()) - 1);
      }
  for (auto& c : comps)
    std::sort(c.begin(), c.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second < b.second : a.first < b.first;
    });
  return comps;
}

// --- decoding oracle ---------------------------------------------------------

// DFS components over the same positive-pixel / either-direction link rule.
inline std::vector<torsotext::Rect> decode_oracle(const torsotext::LinkScoreMaps& scores,
                                                  double theta_pixel, double theta_link,
                                                  int min_area) {
  const int w = scores.pixel.width, h = scores.pixel.height;
  std::vector<uint8_t> pos(static_cast<size_t>(w) * h, 0);
  for (size_t i = 0; i < pos.size(); ++i)
    pos[i] = scores.pixel.values[i] >= theta_pixel ? 1 : 0;

  std::vector<int> label(pos.size(), -1);
  std::vector<std::vector<std::pair<int, int>>> comps;
  std::function<void(int, int, int)> dfs = [&](int x, int y, int id) {
    label[static_cast<size_t>(y) * w + x] = id;
    comps[static_cast<size_t>(id)].emplace_back(x, y);
    for (int k = 0; k < 8; ++k) {
      int nx = x + torsotext::kLinkOffsets[static_cast<size_t>(k)].first;
      int ny = y + torsotext::kLinkOffsets[static_cast<size_t>(k)].second;
      if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
      if (!pos[static_cast<size_t>(ny) * w + nx] || label[static_cast<size_t>(ny) * w + nx] >= 0)
        continue;
      double fwd = scores.links.at(x, y, k);
      double rev = scores.links.at(nx, ny, torsotext::opposite_link(k));
      if (std::max(fwd, rev) >= theta_link) dfs(nx, ny, id);
    }
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (pos[static_cast<size_t>(y) * w + x] && label[static_cast<size_t>(y) * w + x] < 0) {
        comps.emplace_back();
        dfs(x, y, static_cast<int>(comps.size()) - 1);
      }

  std::vector<torsotext::Rect> boxes;
  for (const auto& c : comps) {
    if (static_cast<int>(c.size()) < min_area) continue;
    int x0 = w, y0 = h, x1 = -1, y1 = -1;
    for (auto [x, y] : c) {
      x0 = std::min(x0, x); y0 = std::min(y0, y);
      x1 = std::max(x1, x); y1 = std::max(y1, y);
    }
    boxes.push_back({x0, y0, x1 - x0 + 1, y1 - y0 + 1});
  }
  std::sort(boxes.begin(), boxes.end(), [](const torsotext::Rect& a, const torsotext::Rect& b) {
    return std::tie(a.y, a.x, a.w, a.h) < std::tie(b.y, b.x, b.w, b.h);
  });
  return boxes;
}

// --- matching oracle ----------------------------------------------------------

// Maximum-cardinality one-to-one matching at the IoU threshold, by brute force.
inline int max_matching_oracle(const std::vector<torsotext::Rect>& dets,
                               const std::vector<torsotext::Rect>& gts, double threshold) {
  const size_t nd = dets.size(), ng = gts.size();
  std::vector<std::vector<char>> ok(nd, std::vector<char>(ng, 0));
  for (size_t d = 0; d < nd; ++d)
    for (size_t g = 0; g < ng; ++g) ok[d][g] = torsotext::iou(dets[d], gts[g]) >= threshold;

  int best = 0;
  std::vector<char> used(ng, 0);
  std::function<void(size_t, int)> rec = [&](size_t d, int count) {
    best = std::max(best, count);
    if (d == nd) return;
    rec(d + 1, count);
    for (size_t g = 0; g < ng; ++g) {
      if (!used[g] && ok[d][g]) {
        used[g] = 1;
        rec(d + 1, count + 1);
        used[g] = 0;
      }
    }
  };
  rec(0, 0);
  return best;
}

}  // namespace oracles
