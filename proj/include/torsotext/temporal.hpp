#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "torsotext/error.hpp"
#include "torsotext/gradient.hpp"
#include "torsotext/grid.hpp"

namespace torsotext {

/// Absolute difference between two fused images of identical shape.
inline FloatMap frame_difference(const FusedImage& reference, const FusedImage& current) {
  require_same_shape(reference.map, current.map, "frame_difference");
  FloatMap out = reference.map;
  for (size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = std::fabs(reference.map.values[i] - current.map.values[i]);
  return out;
}

enum class ClusterLabel : uint8_t { Max = 0, Avg = 1, Min = 2 };

struct ClusterPartition {
  std::vector<ClusterLabel> labels;        // one per input value
  std::array<double, 3> centroids{};       // indexed by label; Max >= Avg >= Min
  double inertia = 0.0;
  bool degenerate = false;                 // fewer than 3 distinct input values
};

struct KMeansParams {
  int restarts = 10;
  int max_iters = 100;
  double tol = 1e-9;
};

namespace detail {

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Segment sum of squared deviations from the mean, via prefix sums over sorted values.
struct SegmentCost {
  std::vector<double> pre, pre2;

  explicit SegmentCost(const std::vector<double>& sorted) {
    pre.assign(sorted.size() + 1, 0.0);
    pre2.assign(sorted.size() + 1, 0.0);
    for (size_t i = 0; i < sorted.size(); ++i) {
      pre[i + 1] = pre[i] + sorted[i];
      pre2[i + 1] = pre2[i] + sorted[i] * sorted[i];
    }
  }

  double sse(size_t i, size_t j) const {  // half-open [i, j)
    if (j <= i) return 0.0;
    double s = pre[j] - pre[i];
    double s2 = pre2[j] - pre2[i];
    double n = static_cast<double>(j - i);
    return std::max(0.0, s2 - s * s / n);
  }

  double mean(size_t i, size_t j) const { return (pre[j] - pre[i]) / static_cast<double>(j - i); }
};

// 1-D k-means on sorted values: k-means++ restarts, Lloyd via boundary bisection,
// then a deterministic single-boundary descent to a 2-opt local optimum.
struct KMeans1D {
  std::vector<size_t> boundaries;  // k+1 entries, ascending cluster segments
  std::vector<double> centroids;   // ascending
  double inertia = 0.0;
};

inline KMeans1D kmeans_1d_sorted(const std::vector<double>& v, int k, uint64_t seed,
                                 const KMeansParams& params) {
  const size_t n = v.size();
  SegmentCost cost(v);
  std::mt19937_64 rng(seed);

  auto assign_boundaries = [&](const std::vector<double>& centers) {
    std::vector<size_t> b(static_cast<size_t>(k) + 1);
    b[0] = 0;
    b[k] = n;
    for (int j = 1; j < k; ++j) {
      double mid = 0.5 * (centers[j - 1] + centers[j]);
      b[j] = static_cast<size_t>(
          std::lower_bound(v.begin() + static_cast<long>(b[j - 1]), v.end(), mid) - v.begin());
    }
    for (int j = 1; j < k; ++j) b[j] = std::max(b[j], b[j - 1]);
    return b;
  };

  auto total_sse = [&](const std::vector<size_t>& b) {
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += cost.sse(b[j], b[j + 1]);
    return s;
  };

  KMeans1D best;
  best.inertia = std::numeric_limits<double>::infinity();

  for (int restart = 0; restart < params.restarts; ++restart) {
    // k-means++ seeding over the sorted values.
    std::vector<double> centers;
    centers.push_back(v[rng() % n]);
    std::vector<double> d2(n);
    while (static_cast<int>(centers.size()) < k) {
      double total = 0.0;
      for (size_t i = 0; i < n; ++i) {
        double dmin = std::numeric_limits<double>::infinity();
        for (double c : centers) dmin = std::min(dmin, (v[i] - c) * (v[i] - c));
        d2[i] = dmin;
        total += dmin;
      }
      if (total <= 0.0) {
        centers.push_back(v[rng() % n]);
        continue;
      }
      double u = uniform01(rng) * total;
      double acc = 0.0;
      size_t pick = n - 1;
      for (size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= u && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
      centers.push_back(v[pick]);
    }
    std::sort(centers.begin(), centers.end());

    for (int iter = 0; iter < params.max_iters; ++iter) {
      auto b = assign_boundaries(centers);
      std::vector<double> next(static_cast<size_t>(k));
      for (int j = 0; j < k; ++j) {
        if (b[j + 1] > b[j]) {
          next[j] = cost.mean(b[j], b[j + 1]);
        } else {
          // empty cluster: reseed at the point farthest from every center
          double far_d = -1.0;
          size_t far_i = 0;
          for (size_t i = 0; i < n; ++i) {
            double dmin = std::numeric_limits<double>::infinity();
            for (double c : centers) dmin = std::min(dmin, (v[i] - c) * (v[i] - c));
            if (dmin > far_d) {
              far_d = dmin;
              far_i = i;
            }
          }
          next[j] = v[far_i];
        }
      }
      std::sort(next.begin(), next.end());
      double motion = 0.0;
      for (int j = 0; j < k; ++j) motion = std::max(motion, std::fabs(next[j] - centers[j]));
      centers = std::move(next);
      if (motion < params.tol) break;
    }

    auto b = assign_boundaries(centers);
    // Keep every segment nonempty before the boundary descent.
    for (int j = 1; j < k; ++j) b[j] = std::max(b[j], static_cast<size_t>(j));
    for (int j = k - 1; j >= 1; --j)
      b[j] = std::min(b[j], n - static_cast<size_t>(k - j));

    bool improved = true;
    double cur = total_sse(b);
    while (improved) {
      improved = false;
      for (int j = 1; j < k && !improved; ++j) {
        for (int dir : {-1, +1}) {
          size_t nb = b[j] + dir;
          if (nb <= b[j - 1] || nb >= b[j + 1]) continue;
          std::vector<size_t> cand = b;
          cand[j] = nb;
          double c = total_sse(cand);
          if (c < cur - 1e-15) {
            b = std::move(cand);
            cur = c;
            improved = true;
            break;
          }
        }
      }
    }

    if (cur < best.inertia) {
      best.boundaries = b;
      best.inertia = cur;
      best.centroids.assign(static_cast<size_t>(k), 0.0);
      for (int j = 0; j < k; ++j) best.centroids[j] = cost.mean(b[j], b[j + 1]);
    }
  }
  return best;
}

}  // namespace detail

/// k=3 clustering of difference values, relabeled Max/Avg/Min by descending
/// centroid. Deterministic for a fixed seed. Fewer than 3 distinct values
/// produce a flagged degenerate partition with labels assigned by value order.
inline ClusterPartition kmeans3(std::span<const float> values, uint64_t seed,
                                const KMeansParams& params = {}) {
  if (values.empty()) raise(Err::EmptyInput, "kmeans3 on empty input");
  const size_t n = values.size();
  constexpr int k = 3;

  std::vector<double> sorted(values.begin(), values.end());
  std::vector<size_t> perm(n);
  std::iota(perm.begin(), perm.end(), size_t{0});
  std::stable_sort(perm.begin(), perm.end(),
                   [&](size_t a, size_t b) { return values[a] < values[b]; });
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> distinct;
  for (double x : sorted)
    if (distinct.empty() || x != distinct.back()) distinct.push_back(x);

  ClusterPartition part;
  part.labels.resize(n);

  if (distinct.size() < k) {
    part.degenerate = true;
    // Descending distinct values map onto Max, Avg, Min in order.
    std::vector<double> desc(distinct.rbegin(), distinct.rend());
    for (size_t i = 0; i < n; ++i) {
      size_t which = 0;
      while (values[i] != desc[which]) ++which;
      part.labels[i] = static_cast<ClusterLabel>(which);
    }
    for (int j = 0; j < k; ++j)
      part.centroids[j] = desc[std::min<size_t>(j, desc.size() - 1)];
    part.inertia = 0.0;
    return part;
  }

  auto result = detail::kmeans_1d_sorted(sorted, k, seed, params);
  part.inertia = result.inertia;
  // ascending segment j becomes label (k-1-j): highest centroid is Max.
  for (int j = 0; j < k; ++j) part.centroids[k - 1 - j] = result.centroids[j];
  for (int j = 0; j < k; ++j) {
    for (size_t s = result.boundaries[j]; s < result.boundaries[j + 1]; ++s)
      part.labels[perm[s]] = static_cast<ClusterLabel>(k - 1 - j);
  }
  return part;
}

/// Per-window statistics read from the fused image at each cluster's pixels.
struct ClusterStats {
  int frame_offset = 0;
  double sd_max = 0.0;
  double sd_avg = 0.0;
  double median_min = 0.0;
  bool small_max = false;  // cluster had fewer than 2 members
  bool small_avg = false;
  bool small_min = false;  // Min cluster empty
  bool zero_difference = false;
};

namespace detail {

inline double sample_sd(const std::vector<double>& xs) {
  const size_t n = xs.size();
  double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

inline double median_of(std::vector<double> xs) {
  const size_t n = xs.size();
  std::sort(xs.begin(), xs.end());
  if (n % 2 == 1) return xs[n / 2];
  return 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace detail

inline ClusterStats cluster_stats(const ClusterPartition& partition, const FusedImage& fused) {
  if (partition.labels.size() != fused.map.values.size())
    raise(Err::ShapeError, "partition and fused image disagree on pixel count");

  std::array<std::vector<double>, 3> members;
  for (size_t i = 0; i < partition.labels.size(); ++i)
    members[static_cast<size_t>(partition.labels[i])].push_back(fused.map.values[i]);

  ClusterStats stats;
  stats.frame_offset = fused.frame_index;

  const auto& max_vals = members[static_cast<size_t>(ClusterLabel::Max)];
  const auto& avg_vals = members[static_cast<size_t>(ClusterLabel::Avg)];
  const auto& min_vals = members[static_cast<size_t>(ClusterLabel::Min)];

  if (max_vals.size() >= 2) stats.sd_max = detail::sample_sd(max_vals);
  else stats.small_max = true;
  if (avg_vals.size() >= 2) stats.sd_avg = detail::sample_sd(avg_vals);
  else stats.small_avg = true;
  if (!min_vals.empty()) stats.median_min = detail::median_of(min_vals);
  else stats.small_min = true;

  stats.zero_difference = partition.degenerate && partition.centroids[0] == 0.0;
  return stats;
}

struct TemporalWindow {
  int start_index = 0;
  int end_index = 0;    // inclusive
  int keyframe_index = 0;
  bool duplicate_frames = false;  // terminated by the all-zero-difference rule
  bool fired = false;             // terminated by the 2-of-3 sudden-change vote
  std::vector<ClusterStats> stats_trace;
  std::vector<std::array<double, 3>> z_trace;  // sd_max, sd_avg, median_min streams

  int length() const { return end_index - start_index + 1; }
};

/// Streaming sudden-change detector over the three statistic streams. A frame
/// fires a stream when its value deviates from the running mean of prior
/// entries by at least z_threshold running standard deviations; two of three
/// firing streams terminate the window.
class WindowDetector {
 public:
  WindowDetector(double z_threshold = 2.0, int min_frames = 3, int max_window = 30,
                 int start_index = 0)
      : z_threshold_(z_threshold),
        min_frames_(min_frames),
        max_window_(max_window),
        start_index_(start_index) {
    if (z_threshold <= 0.0) raise(Err::InvalidArgument, "z_threshold must be positive");
    if (min_frames < 1) raise(Err::InvalidArgument, "min_frames must be at least 1");
    if (max_window < 2) raise(Err::InvalidArgument, "max_window must be at least 2");
  }

  std::optional<TemporalWindow> push(const ClusterStats& stats) {
    if (done_) return result_;
    if (!trace_.empty() && stats.frame_offset <= trace_.back().frame_offset)
      raise(Err::InvalidArgument, "cluster stats must arrive in frame order");

    if (trace_.empty() && stats.zero_difference) {
      // Duplicate frames: nothing will ever change, keep the minimal window.
      trace_.push_back(stats);
      z_.push_back({0.0, 0.0, 0.0});
      return terminate(stats.frame_offset, /*fired=*/false, /*dup=*/true);
    }

    std::array<double, 3> x{stats.sd_max, stats.sd_avg, stats.median_min};
    std::array<double, 3> z{0.0, 0.0, 0.0};
    int firing = 0;
    for (int s = 0; s < 3; ++s) {
      if (streams_[s].count >= min_frames_) {
        double sd = streams_[s].sd();
        if (sd >= 1e-12) {
          z[s] = std::fabs(x[s] - streams_[s].mean) / sd;
          if (z[s] >= z_threshold_) ++firing;
        }
      }
    }
    trace_.push_back(stats);
    z_.push_back(z);

    if (firing >= 2) return terminate(stats.frame_offset, /*fired=*/true, /*dup=*/false);
    for (int s = 0; s < 3; ++s) streams_[s].push(x[s]);
    if (stats.frame_offset - start_index_ + 1 >= max_window_)
      return terminate(stats.frame_offset, /*fired=*/false, /*dup=*/false);
    return std::nullopt;
  }

  /// Call when the sequence ends without termination.
  std::optional<TemporalWindow> finish() {
    if (done_) return result_;
    if (trace_.empty()) return std::nullopt;
    return terminate(trace_.back().frame_offset, /*fired=*/false, /*dup=*/false);
  }

  bool terminated() const { return done_; }

 private:
  struct Welford {
    long long count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void push(double x) {
      ++count;
      double d = x - mean;
      mean += d / static_cast<double>(count);
      m2 += d * (x - mean);
    }
    double sd() const {
      return count >= 2 ? std::sqrt(m2 / static_cast<double>(count - 1)) : 0.0;
    }
  };

  std::optional<TemporalWindow> terminate(int end, bool fired, bool dup) {
    TemporalWindow w;
    w.start_index = start_index_;
    w.end_index = end;
    w.keyframe_index = start_index_;
    w.fired = fired;
    w.duplicate_frames = dup;
    w.stats_trace = trace_;
    w.z_trace = z_;
    result_ = w;
    done_ = true;
    return result_;
  }

  double z_threshold_;
  int min_frames_;
  int max_window_;
  int start_index_;
  std::array<Welford, 3> streams_;
  std::vector<ClusterStats> trace_;
  std::vector<std::array<double, 3>> z_;
  bool done_ = false;
  std::optional<TemporalWindow> result_;
};

inline TemporalWindow detect_window(std::span<const ClusterStats> stats, double z_threshold = 2.0,
                                    int min_frames = 3, int max_window = 30,
                                    int start_index = 0) {
  if (stats.empty()) raise(Err::InsufficientFrames, "need at least 2 frames (1 difference)");
  WindowDetector detector(z_threshold, min_frames, max_window, start_index);
  for (const auto& s : stats) {
    auto w = detector.push(s);
    if (w) return *w;
  }
  return *detector.finish();
}

}  // namespace torsotext
