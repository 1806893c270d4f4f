#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <utility>
#include <vector>

#include "torsotext/error.hpp"
#include "torsotext/gradient.hpp"
#include "torsotext/grid.hpp"
#include "torsotext/temporal.hpp"

namespace torsotext {

namespace detail {

// Histogram mode over [0, range_max] with fixed binning; returns the center of
// the fullest bin. Ties resolve toward the higher bin.
inline double histogram_mode(const std::vector<double>& values, int bins, double range_max) {
  if (values.empty() || range_max <= 0.0) return 0.0;
  std::vector<int> counts(static_cast<size_t>(bins), 0);
  for (double v : values) {
    int b = static_cast<int>(v / range_max * bins);
    b = std::clamp(b, 0, bins - 1);
    ++counts[static_cast<size_t>(b)];
  }
  int best = 0;
  for (int b = 1; b < bins; ++b)
    if (counts[static_cast<size_t>(b)] >= counts[static_cast<size_t>(best)]) best = b;
  return (best + 0.5) * range_max / bins;
}

// Multiset mode of a handful of window values; ties resolve toward the larger value.
inline double multiset_mode(std::vector<double>& values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double mode = values[0];
  size_t best_run = 0, run = 1;
  for (size_t i = 1; i <= values.size(); ++i) {
    if (i < values.size() && values[i] == values[i - 1]) {
      ++run;
    } else {
      if (run >= best_run) {
        best_run = run;
        mode = values[i - 1];
      }
      run = 1;
    }
  }
  return mode;
}

}  // namespace detail

inline double bayes_posterior(double likelihood, double p_skin) {
  double num = likelihood * p_skin;
  double den = num + (1.0 - likelihood) * (1.0 - p_skin);
  return den > 0.0 ? num / den : 0.0;
}

/// Priors from the histogram modes of the fused values in the Avg and Max clusters.
struct SkinPriors {
  double p_skin = 0.5;
  double p_not = 0.5;
  double mode_avg = 0.0;
  double mode_max = 0.0;
  bool degenerate = false;  // both modes zero; fell back to 0.5
};

inline SkinPriors skin_priors(const ClusterPartition& partition, const FusedImage& fused,
                              int bins = 256) {
  if (partition.labels.size() != fused.map.values.size())
    raise(Err::ShapeError, "partition and fused image disagree on pixel count");

  double range_max = 0.0;
  for (float v : fused.map.values) range_max = std::max(range_max, static_cast<double>(v));

  std::vector<double> avg_vals, max_vals;
  for (size_t i = 0; i < partition.labels.size(); ++i) {
    double v = fused.map.values[i];
    if (partition.labels[i] == ClusterLabel::Avg) avg_vals.push_back(v);
    else if (partition.labels[i] == ClusterLabel::Max) max_vals.push_back(v);
  }

  SkinPriors priors;
  priors.mode_avg = detail::histogram_mode(avg_vals, bins, range_max);
  priors.mode_max = detail::histogram_mode(max_vals, bins, range_max);
  double denom = priors.mode_avg + priors.mode_max;
  if (denom > 0.0) {
    priors.p_skin = priors.mode_avg / denom;
  } else {
    priors.p_skin = 0.5;
    priors.degenerate = true;
  }
  priors.p_not = 1.0 - priors.p_skin;
  return priors;
}

struct SkinMask {
  enum class Source { PixelLevel, ComponentLevel };

  int width = 0;
  int height = 0;
  std::vector<uint8_t> mask;  // 0/1
  Source source = Source::PixelLevel;

  bool at(int x, int y) const { return mask[static_cast<size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) { mask[static_cast<size_t>(y) * width + x] = v ? 1 : 0; }
  size_t count() const {
    size_t c = 0;
    for (uint8_t m : mask) c += m;
    return c;
  }

  static SkinMask empty(int w, int h, Source src = Source::PixelLevel) {
    return SkinMask{w, h, std::vector<uint8_t>(static_cast<size_t>(w) * h, 0), src};
  }
};

/// Pixel-level Bayesian skin classification. Only pixels in the Max or Avg
/// cluster are evaluated; the likelihood is the mode of the nonzero fused
/// values in the clamped window divided by the window pixel count, and a pixel
/// is skin when its posterior reaches the threshold.
inline SkinMask classify_skin_pixels(const FusedImage& fused, const ClusterPartition& partition,
                                     const SkinPriors& priors, int window = 3,
                                     double threshold = 0.5) {
  if (partition.labels.size() != fused.map.values.size())
    raise(Err::ShapeError, "partition and fused image disagree on pixel count");
  if (window < 1 || window % 2 == 0) raise(Err::InvalidArgument, "window must be odd");

  const int w = fused.map.width, h = fused.map.height;
  const int r = window / 2;
  SkinMask out = SkinMask::empty(w, h);

  std::vector<double> win;
  win.reserve(static_cast<size_t>(window) * window);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      ClusterLabel label = partition.labels[static_cast<size_t>(y) * w + x];
      if (label == ClusterLabel::Min) continue;

      int x0 = std::max(0, x - r), x1 = std::min(w - 1, x + r);
      int y0 = std::max(0, y - r), y1 = std::min(h - 1, y + r);
      int n_window = (x1 - x0 + 1) * (y1 - y0 + 1);
      win.clear();
      for (int yy = y0; yy <= y1; ++yy)
        for (int xx = x0; xx <= x1; ++xx) {
          double v = fused.map.at(xx, yy);
          if (v != 0.0) win.push_back(v);
        }
      double likelihood = win.empty() ? 0.0 : detail::multiset_mode(win) / n_window;
      if (bayes_posterior(likelihood, priors.p_skin) >= threshold) out.set(x, y, true);
    }
  }
  return out;
}

/// Connected region of skin pixels after dilation grouping.
struct SkinComponent {
  int id = 0;
  std::vector<std::pair<int, int>> pixels;  // (x, y), sorted by (y, x)
  Rect bbox;
  double mean_fused = 0.0;
  int frame_index = 0;
};

/// Groups skin pixels within one-or-two pixel gaps: dilate by a disk, label
/// 8-connected components on the dilated mask, then keep each component's
/// original pixels. Components below min_area original pixels are dropped.
inline std::vector<SkinComponent> group_components(const SkinMask& mask, const FusedImage& fused,
                                                   int dilation_radius = 2, int min_area = 5) {
  if (mask.width != fused.map.width || mask.height != fused.map.height)
    raise(Err::ShapeError, "mask and fused image disagree on shape");
  const int w = mask.width, h = mask.height;

  std::vector<std::pair<int, int>> disk;
  for (int dy = -dilation_radius; dy <= dilation_radius; ++dy)
    for (int dx = -dilation_radius; dx <= dilation_radius; ++dx)
      if (dx * dx + dy * dy <= dilation_radius * dilation_radius) disk.emplace_back(dx, dy);

  std::vector<uint8_t> dilated(static_cast<size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) continue;
      for (auto [dx, dy] : disk) {
        int xx = x + dx, yy = y + dy;
        if (xx >= 0 && xx < w && yy >= 0 && yy < h) dilated[static_cast<size_t>(yy) * w + xx] = 1;
      }
    }
  }

  std::vector<int> label(static_cast<size_t>(w) * h, -1);
  std::vector<SkinComponent> components;
  std::deque<std::pair<int, int>> queue;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      size_t idx = static_cast<size_t>(y) * w + x;
      if (!dilated[idx] || label[idx] >= 0) continue;

      int comp_label = static_cast<int>(components.size());
      label[idx] = comp_label;
      queue.clear();
      queue.emplace_back(x, y);
      SkinComponent comp;
      comp.frame_index = fused.frame_index;

      while (!queue.empty()) {
        auto [cx, cy] = queue.front();
        queue.pop_front();
        if (mask.at(cx, cy)) comp.pixels.emplace_back(cx, cy);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            int nx = cx + dx, ny = cy + dy;
            if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
            size_t nidx = static_cast<size_t>(ny) * w + nx;
            if (dilated[nidx] && label[nidx] < 0) {
              label[nidx] = comp_label;
              queue.emplace_back(nx, ny);
            }
          }
        }
      }

      if (static_cast<int>(comp.pixels.size()) < min_area) continue;
      std::sort(comp.pixels.begin(), comp.pixels.end(),
                [](const auto& a, const auto& b) {
                  return a.second != b.second ? a.second < b.second : a.first < b.first;
                });
      int x0 = w, y0 = h, x1 = -1, y1 = -1;
      double sum = 0.0;
      for (auto [px, py] : comp.pixels) {
        x0 = std::min(x0, px); y0 = std::min(y0, py);
        x1 = std::max(x1, px); y1 = std::max(y1, py);
        sum += fused.map.at(px, py);
      }
      comp.bbox = Rect{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
      comp.mean_fused = sum / static_cast<double>(comp.pixels.size());
      comp.id = static_cast<int>(components.size());
      components.push_back(std::move(comp));
    }
  }
  return components;
}

struct TemporalRefineResult {
  std::vector<SkinComponent> components;  // survivors, original frame coordinates
  bool single_component = false;          // lone input kept unconditionally
  double p_skin = 0.5;
};

/// Component-level re-selection across the temporal window: the pooled
/// component means are split two ways, priors come from the modes of the high
/// and low groups, each component's likelihood is its mean normalized by the
/// pooled maximum, and survivors are those whose posterior reaches 0.5.
inline TemporalRefineResult refine_components_temporal(
    const std::vector<std::pair<int, std::vector<SkinComponent>>>& per_frame, uint64_t seed,
    int bins = 256, double threshold = 0.5) {
  if (per_frame.empty()) raise(Err::EmptyInput, "no frames of components");

  std::vector<const SkinComponent*> all;
  for (const auto& [frame_index, comps] : per_frame)
    for (const auto& c : comps) all.push_back(&c);

  TemporalRefineResult result;
  if (all.empty()) return result;
  if (all.size() == 1) {
    result.single_component = true;
    result.components.push_back(*all[0]);
    return result;
  }

  std::vector<float> means;
  means.reserve(all.size());
  double pooled_max = 0.0;
  for (const auto* c : all) {
    means.push_back(static_cast<float>(c->mean_fused));
    pooled_max = std::max(pooled_max, c->mean_fused);
  }

  bool distinct = false;
  for (float m : means)
    if (m != means[0]) { distinct = true; break; }

  double p_skin = 0.5;
  if (distinct && pooled_max > 0.0) {
    std::vector<double> sorted(means.begin(), means.end());
    std::sort(sorted.begin(), sorted.end());
    auto split = detail::kmeans_1d_sorted(sorted, 2, seed, KMeansParams{});
    std::vector<double> low(sorted.begin(), sorted.begin() + static_cast<long>(split.boundaries[1]));
    std::vector<double> high(sorted.begin() + static_cast<long>(split.boundaries[1]), sorted.end());
    double mode_high = detail::histogram_mode(high, bins, pooled_max);
    double mode_low = detail::histogram_mode(low, bins, pooled_max);
    double denom = mode_high + mode_low;
    p_skin = denom > 0.0 ? mode_high / denom : 0.5;
  }
  result.p_skin = p_skin;

  for (const auto* c : all) {
    // all means equal (or all zero): likelihood 1, posterior lands on the
    // inclusive 0.5 boundary and everything survives
    double likelihood = pooled_max > 0.0 ? c->mean_fused / pooled_max : 1.0;
    if (!distinct) likelihood = 1.0;
    if (bayes_posterior(likelihood, p_skin) >= threshold) result.components.push_back(*c);
  }
  return result;
}

inline SkinMask mask_from_components(const std::vector<SkinComponent>& components, int width,
                                     int height,
                                     SkinMask::Source source = SkinMask::Source::ComponentLevel) {
  SkinMask out = SkinMask::empty(width, height, source);
  for (const auto& c : components)
    for (auto [x, y] : c.pixels)
      if (x >= 0 && x < width && y >= 0 && y < height) out.set(x, y, true);
  return out;
}

}  // namespace torsotext
