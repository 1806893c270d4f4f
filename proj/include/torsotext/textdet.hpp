#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "torsotext/error.hpp"
#include "torsotext/grid.hpp"

namespace torsotext {

// 8-neighbor link channel order, and the channel of the reverse direction.
inline constexpr std::array<std::pair<int, int>, 8> kLinkOffsets{{
    {1, 0},    // E
    {1, -1},   // NE
    {0, -1},   // N
    {-1, -1},  // NW
    {-1, 0},   // W
    {-1, 1},   // SW
    {0, 1},    // S
    {1, 1},    // SE
}};

inline constexpr int opposite_link(int k) { return (k + 4) % 8; }

constexpr double kCeClamp = 1e-7;

/// Text/link score maps: per-pixel text probability plus eight link channels.
struct LinkScoreMaps {
  FloatMap pixel;  // H x W x 1
  FloatMap links;  // H x W x 8

  void validate() const {
    if (pixel.channels != 1) raise(Err::ShapeError, "pixel map must have 1 channel");
    if (links.channels != 8) raise(Err::ShapeError, "link map must have 8 channels");
    if (pixel.width != links.width || pixel.height != links.height)
      raise(Err::ShapeError, "pixel and link maps disagree on shape");
  }
};

/// Instance-labeled ground truth with instance-balanced pixel weights.
struct GroundTruthMaps {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> y_pixel;    // positive text pixels
  std::vector<int32_t> instance;   // instance id per positive pixel, -1 elsewhere
  std::vector<uint8_t> y_link;     // H*W*8, positive links
  std::vector<double> w;           // pixel weights, zero on negatives

  size_t pixel_index(int x, int y) const { return static_cast<size_t>(y) * width + x; }
  size_t link_index(int x, int y, int k) const {
    return (static_cast<size_t>(y) * width + x) * 8 + static_cast<size_t>(k);
  }
};

/// Labels pixels inside exactly one box positive (overlaps are negative),
/// links between same-instance neighbors positive, and distributes a total
/// weight of B (positive pixel count) equally across instances.
inline GroundTruthMaps label_ground_truth(std::span<const Rect> boxes, int width, int height) {
  GroundTruthMaps gt;
  gt.width = width;
  gt.height = height;
  const size_t n = static_cast<size_t>(width) * height;
  gt.y_pixel.assign(n, 0);
  gt.instance.assign(n, -1);
  gt.y_link.assign(n * 8, 0);
  gt.w.assign(n, 0.0);

  std::vector<int> cover(n, 0);
  std::vector<int> owner(n, -1);
  for (size_t b = 0; b < boxes.size(); ++b) {
    Rect r = clamp_rect(boxes[b], width, height);
    for (int y = r.y; y < r.bottom(); ++y) {
      for (int x = r.x; x < r.right(); ++x) {
        size_t i = gt.pixel_index(x, y);
        ++cover[i];
        owner[i] = static_cast<int>(b);
      }
    }
  }

  std::vector<long long> instance_area(boxes.size(), 0);
  long long total_positive = 0;
  for (size_t i = 0; i < n; ++i) {
    if (cover[i] == 1) {
      gt.y_pixel[i] = 1;
      gt.instance[i] = owner[i];
      ++instance_area[static_cast<size_t>(owner[i])];
      ++total_positive;
    }
  }

  int live_instances = 0;
  for (long long a : instance_area)
    if (a > 0) ++live_instances;

  if (total_positive > 0) {
    for (size_t i = 0; i < n; ++i) {
      if (!gt.y_pixel[i]) continue;
      long long area = instance_area[static_cast<size_t>(gt.instance[i])];
      gt.w[i] = static_cast<double>(total_positive) /
                (static_cast<double>(live_instances) * static_cast<double>(area));
    }
  }

  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      size_t i = gt.pixel_index(x, y);
      if (!gt.y_pixel[i]) continue;
      for (int k = 0; k < 8; ++k) {
        int nx = x + kLinkOffsets[static_cast<size_t>(k)].first;
        int ny = y + kLinkOffsets[static_cast<size_t>(k)].second;
        if (nx < 0 || nx >= width || ny < 0 || ny >= height) continue;
        size_t j = gt.pixel_index(nx, ny);
        if (gt.y_pixel[j] && gt.instance[j] == gt.instance[i]) gt.y_link[gt.link_index(x, y, k)] = 1;
      }
    }
  }
  return gt;
}

/// Epoch weight 1/ln(10t+2), clamped to 1. Strictly decreasing for t >= 1.
inline double alpha_schedule(long long t) {
  if (t < 1) raise(Err::DomainError, "epoch must be >= 1");
  return std::min(1.0, 1.0 / std::log(10.0 * static_cast<double>(t) + 2.0));
}

struct LossResult {
  double value = 0.0;
  std::vector<double> grad;
};

namespace detail {

inline double clamp_p(double p) { return std::clamp(p, kCeClamp, 1.0 - kCeClamp); }

inline double ce(double p, double y) {
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

inline double ce_grad(double p, double y) { return (p - y) / (p * (1.0 - p)); }

}  // namespace detail

/// Instance-weighted pixel cross-entropy, scaled by (1+r)^-s and normalized by
/// the total weight.
inline LossResult pixel_loss(std::span<const double> pred, const GroundTruthMaps& gt, double r,
                             double s_exp) {
  const size_t n = static_cast<size_t>(gt.width) * gt.height;
  if (pred.size() != n) raise(Err::ShapeError, "pixel prediction size mismatch");
  if (r < 0.0 || s_exp < 0.0) raise(Err::DomainError, "r and s must be nonnegative");

  double w_sum = std::accumulate(gt.w.begin(), gt.w.end(), 0.0);
  double norm = std::pow(1.0 + r, -s_exp) / std::max(1.0, w_sum);

  LossResult out;
  out.grad.assign(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    if (gt.w[i] == 0.0) continue;
    double p = detail::clamp_p(pred[i]);
    double y = gt.y_pixel[i] ? 1.0 : 0.0;
    out.value += norm * gt.w[i] * detail::ce(p, y);
    out.grad[i] = norm * gt.w[i] * detail::ce_grad(p, y);
  }
  return out;
}

/// Link loss on positive pixels only: positive and negative link cross-entropy
/// each normalized by its own total weight; empty sides contribute zero.
inline LossResult link_loss(std::span<const double> pred_links, const GroundTruthMaps& gt) {
  const size_t n = static_cast<size_t>(gt.width) * gt.height;
  if (pred_links.size() != n * 8) raise(Err::ShapeError, "link prediction size mismatch");

  double w_pos_sum = 0.0, w_neg_sum = 0.0;
  for (int y = 0; y < gt.height; ++y) {
    for (int x = 0; x < gt.width; ++x) {
      size_t i = gt.pixel_index(x, y);
      if (!gt.y_pixel[i]) continue;
      for (int k = 0; k < 8; ++k) {
        int nx = x + kLinkOffsets[static_cast<size_t>(k)].first;
        int ny = y + kLinkOffsets[static_cast<size_t>(k)].second;
        if (nx < 0 || nx >= gt.width || ny < 0 || ny >= gt.height) continue;
        if (!gt.y_pixel[gt.pixel_index(nx, ny)]) continue;
        if (gt.y_link[gt.link_index(x, y, k)]) w_pos_sum += gt.w[i];
        else w_neg_sum += gt.w[i];
      }
    }
  }

  LossResult out;
  out.grad.assign(n * 8, 0.0);
  for (int y = 0; y < gt.height; ++y) {
    for (int x = 0; x < gt.width; ++x) {
      size_t i = gt.pixel_index(x, y);
      if (!gt.y_pixel[i]) continue;
      for (int k = 0; k < 8; ++k) {
        int nx = x + kLinkOffsets[static_cast<size_t>(k)].first;
        int ny = y + kLinkOffsets[static_cast<size_t>(k)].second;
        if (nx < 0 || nx >= gt.width || ny < 0 || ny >= gt.height) continue;
        if (!gt.y_pixel[gt.pixel_index(nx, ny)]) continue;
        size_t li = gt.link_index(x, y, k);
        bool positive = gt.y_link[li] != 0;
        double denom = positive ? w_pos_sum : w_neg_sum;
        if (denom <= 0.0) continue;
        double p = detail::clamp_p(pred_links[li]);
        double yv = positive ? 1.0 : 0.0;
        out.value += gt.w[i] * detail::ce(p, yv) / denom;
        out.grad[li] = gt.w[i] * detail::ce_grad(p, yv) / denom;
      }
    }
  }
  return out;
}

/// Adaptive weighted sum: 2*alpha(t)*L_pixel + (1-alpha(t))*L_link.
struct LossBreakdown {
  long long epoch = 1;
  double alpha = 0.0;
  double l_pixel = 0.0;
  double l_link = 0.0;
  double total = 0.0;
  std::vector<double> grad_pixel;
  std::vector<double> grad_link;
};

inline LossBreakdown total_loss(std::span<const double> pred_pixel,
                                std::span<const double> pred_links, const GroundTruthMaps& gt,
                                long long t, double r, double s_exp,
                                std::optional<double> alpha_override = std::nullopt) {
  LossBreakdown out;
  out.epoch = t;
  out.alpha = alpha_override ? *alpha_override : alpha_schedule(t);

  LossResult lp = pixel_loss(pred_pixel, gt, r, s_exp);
  LossResult ll = link_loss(pred_links, gt);
  out.l_pixel = lp.value;
  out.l_link = ll.value;
  out.total = 2.0 * out.alpha * lp.value + (1.0 - out.alpha) * ll.value;

  out.grad_pixel = std::move(lp.grad);
  for (double& g : out.grad_pixel) g *= 2.0 * out.alpha;
  out.grad_link = std::move(ll.grad);
  for (double& g : out.grad_link) g *= 1.0 - out.alpha;
  return out;
}

/// Central-difference verification of an analytic gradient. The callback
/// evaluates the loss at `x` and fills `grad_out` (same length as x).
struct GradCheckResult {
  double max_rel_error = 0.0;
  bool pass = false;
};

inline GradCheckResult grad_check(
    const std::function<double(std::span<const double>, std::span<double>)>& loss_fn,
    std::span<double> inputs, double step, double tolerance) {
  if (step <= 0.0) raise(Err::InvalidArgument, "step must be positive");

  std::vector<double> analytic(inputs.size(), 0.0);
  double value = loss_fn(inputs, analytic);
  if (!std::isfinite(value)) raise(Err::NumericalError, "loss is not finite");

  std::vector<double> scratch(inputs.size(), 0.0);
  GradCheckResult result;
  for (size_t i = 0; i < inputs.size(); ++i) {
    double saved = inputs[i];
    inputs[i] = saved + step;
    double up = loss_fn(inputs, scratch);
    inputs[i] = saved - step;
    double down = loss_fn(inputs, scratch);
    inputs[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down))
      raise(Err::NumericalError, "loss is not finite under perturbation");
    double numeric = (up - down) / (2.0 * step);
    double rel = std::fabs(analytic[i] - numeric) / std::max(std::fabs(numeric), 1e-8);
    result.max_rel_error = std::max(result.max_rel_error, rel);
  }
  result.pass = result.max_rel_error <= tolerance;
  return result;
}

/// Pixel-link decoding: positive pixels become nodes, an undirected edge
/// exists when either directed link prediction clears the threshold, and each
/// surviving connected component emits its bounding box.
inline std::vector<Rect> decode_links(const LinkScoreMaps& scores, double theta_pixel = 0.5,
                                      double theta_link = 0.5, int min_area = 6) {
  scores.validate();
  if (theta_pixel <= 0.0 || theta_pixel >= 1.0 || theta_link <= 0.0 || theta_link >= 1.0)
    raise(Err::InvalidArgument, "thresholds must lie in (0,1)");

  const int w = scores.pixel.width, h = scores.pixel.height;
  const size_t n = static_cast<size_t>(w) * h;

  std::vector<uint8_t> positive(n, 0);
  for (size_t i = 0; i < n; ++i) positive[i] = scores.pixel.values[i] >= theta_pixel ? 1 : 0;

  std::vector<int32_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int32_t(int32_t)> find = [&](int32_t i) {
    while (parent[static_cast<size_t>(i)] != i) {
      parent[static_cast<size_t>(i)] = parent[static_cast<size_t>(parent[static_cast<size_t>(i)])];
      i = parent[static_cast<size_t>(i)];
    }
    return i;
  };

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      size_t i = static_cast<size_t>(y) * w + x;
      if (!positive[i]) continue;
      for (int k = 0; k < 8; ++k) {
        int nx = x + kLinkOffsets[static_cast<size_t>(k)].first;
        int ny = y + kLinkOffsets[static_cast<size_t>(k)].second;
        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
        size_t j = static_cast<size_t>(ny) * w + nx;
        if (!positive[j]) continue;
        double fwd = scores.links.at(x, y, k);
        double rev = scores.links.at(nx, ny, opposite_link(k));
        if (std::max(fwd, rev) >= theta_link) {
          int32_t ri = find(static_cast<int32_t>(i)), rj = find(static_cast<int32_t>(j));
          if (ri != rj) parent[static_cast<size_t>(std::max(ri, rj))] = std::min(ri, rj);
        }
      }
    }
  }

  struct Extent {
    int x0, y0, x1, y1;
    int count = 0;
  };
  std::vector<std::optional<Extent>> extents(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      size_t i = static_cast<size_t>(y) * w + x;
      if (!positive[i]) continue;
      size_t root = static_cast<size_t>(find(static_cast<int32_t>(i)));
      auto& e = extents[root];
      if (!e) e = Extent{x, y, x, y, 0};
      e->x0 = std::min(e->x0, x);
      e->y0 = std::min(e->y0, y);
      e->x1 = std::max(e->x1, x);
      e->y1 = std::max(e->y1, y);
      ++e->count;
    }
  }

  std::vector<Rect> boxes;
  for (const auto& e : extents) {
    if (!e || e->count < min_area) continue;
    boxes.push_back(Rect{e->x0, e->y0, e->x1 - e->x0 + 1, e->y1 - e->y0 + 1});
  }
  std::sort(boxes.begin(), boxes.end(), [](const Rect& a, const Rect& b) {
    return std::tie(a.y, a.x, a.w, a.h) < std::tie(b.y, b.x, b.w, b.h);
  });
  return boxes;
}

/// Fallback score synthesis for runs without a trained network: the pixel map
/// is the crop's min-max normalized fused image and each link channel carries
/// the similarity of the two endpoint values.
inline LinkScoreMaps synthesize_scores_from_fused(const FloatMap& fused_crop) {
  require_single_channel(fused_crop, "synthesize_scores_from_fused");
  const int w = fused_crop.width, h = fused_crop.height;

  float lo = *std::min_element(fused_crop.values.begin(), fused_crop.values.end());
  float hi = *std::max_element(fused_crop.values.begin(), fused_crop.values.end());
  float span = hi - lo;

  LinkScoreMaps out;
  out.pixel = FloatMap::zeros(w, h, 1);
  out.links = FloatMap::zeros(w, h, 8);
  for (size_t i = 0; i < out.pixel.values.size(); ++i)
    out.pixel.values[i] = span > 0 ? (fused_crop.values[i] - lo) / span : 0.0f;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float v = out.pixel.at(x, y);
      for (int k = 0; k < 8; ++k) {
        int nx = x + kLinkOffsets[static_cast<size_t>(k)].first;
        int ny = y + kLinkOffsets[static_cast<size_t>(k)].second;
        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
        out.links.at(x, y, k) = 1.0f - std::fabs(v - out.pixel.at(nx, ny));
      }
    }
  }
  return out;
}

}  // namespace torsotext
