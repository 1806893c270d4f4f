#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "torsotext/error.hpp"
#include "torsotext/grid.hpp"

namespace torsotext {

using json = nlohmann::json;

struct AnnotatedBox {
  Rect rect;
  std::string label;  // "bib", "text", or empty for detections
};

struct Annotation {
  int frame_index = 0;
  std::vector<AnnotatedBox> boxes;
};

inline double iou(const Rect& a, const Rect& b) {
  long long ix = std::max(0, std::min(a.right(), b.right()) - std::max(a.x, b.x));
  long long iy = std::max(0, std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y));
  long long inter = ix * iy;
  long long uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

/// Greedy one-to-one matching in descending IoU order; a pair counts when its
/// IoU reaches the threshold.
struct MatchResult {
  std::vector<std::pair<int, int>> pairs;  // (det index, gt index)
  int matched = 0;
};

inline MatchResult match_boxes(std::span<const Rect> dets, std::span<const Rect> gts,
                               double iou_threshold = 0.5) {
  struct Cand {
    double overlap;
    int det, gt;
  };
  std::vector<Cand> cands;
  for (int d = 0; d < static_cast<int>(dets.size()); ++d) {
    for (int g = 0; g < static_cast<int>(gts.size()); ++g) {
      double o = iou(dets[static_cast<size_t>(d)], gts[static_cast<size_t>(g)]);
      if (o >= iou_threshold) cands.push_back({o, d, g});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    return std::tie(b.overlap, a.det, a.gt) < std::tie(a.overlap, b.det, b.gt);
  });

  std::vector<char> det_used(dets.size(), 0), gt_used(gts.size(), 0);
  MatchResult result;
  for (const auto& c : cands) {
    if (det_used[static_cast<size_t>(c.det)] || gt_used[static_cast<size_t>(c.gt)]) continue;
    det_used[static_cast<size_t>(c.det)] = 1;
    gt_used[static_cast<size_t>(c.gt)] = 1;
    result.pairs.emplace_back(c.det, c.gt);
  }
  result.matched = static_cast<int>(result.pairs.size());
  return result;
}

/// F = P*R / (alpha*R + (1-alpha)*P); zero when the denominator vanishes.
inline double f_measure(double p, double r, double alpha = 0.5) {
  double den = alpha * r + (1.0 - alpha) * p;
  return den > 0.0 ? p * r / den : 0.0;
}

struct FrameCounts {
  int frame_index = 0;
  int matched = 0;
  int detections = 0;
  int ground_truths = 0;
};

struct MetricsReport {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
  int matched = 0;
  int detections = 0;
  int ground_truths = 0;
  std::vector<FrameCounts> per_frame;
};

inline std::vector<Rect> boxes_of(const Annotation& a, const std::string& label_filter = "") {
  std::vector<Rect> out;
  for (const auto& b : a.boxes)
    if (label_filter.empty() || b.label == label_filter) out.push_back(b.rect);
  return out;
}

inline MetricsReport evaluate(std::span<const Annotation> gt, std::span<const Annotation> det,
                              double iou_threshold = 0.5, const std::string& label_filter = "") {
  std::map<int, std::pair<std::vector<Rect>, std::vector<Rect>>> by_frame;
  for (const auto& a : gt) {
    auto boxes = boxes_of(a, label_filter);
    auto& slot = by_frame[a.frame_index].second;
    slot.insert(slot.end(), boxes.begin(), boxes.end());
  }
  for (const auto& a : det) {
    auto boxes = boxes_of(a, label_filter);
    auto& slot = by_frame[a.frame_index].first;
    slot.insert(slot.end(), boxes.begin(), boxes.end());
  }

  MetricsReport report;
  for (const auto& [frame, pair] : by_frame) {
    const auto& [dets, gts] = pair;
    MatchResult m = match_boxes(dets, gts, iou_threshold);
    FrameCounts fc;
    fc.frame_index = frame;
    fc.matched = m.matched;
    fc.detections = static_cast<int>(dets.size());
    fc.ground_truths = static_cast<int>(gts.size());
    report.per_frame.push_back(fc);
    report.matched += fc.matched;
    report.detections += fc.detections;
    report.ground_truths += fc.ground_truths;
  }
  report.precision = report.detections > 0
                         ? static_cast<double>(report.matched) / report.detections
                         : 0.0;
  report.recall = report.ground_truths > 0
                      ? static_cast<double>(report.matched) / report.ground_truths
                      : 0.0;
  report.f = f_measure(report.precision, report.recall);
  return report;
}

// --- JSON surfaces -------------------------------------------------------

inline json rect_to_json(const Rect& r) {
  return json{{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}};
}

inline Rect rect_from_json(const json& j) {
  Rect r{j.at("x").get<int>(), j.at("y").get<int>(), j.at("w").get<int>(), j.at("h").get<int>()};
  validate_rect(r, "rect_from_json");
  return r;
}

inline json annotations_to_json(std::span<const Annotation> annotations) {
  json frames = json::array();
  for (const auto& a : annotations) {
    json boxes = json::array();
    for (const auto& b : a.boxes) {
      json jb = rect_to_json(b.rect);
      if (!b.label.empty()) jb["label"] = b.label;
      boxes.push_back(jb);
    }
    frames.push_back(json{{"index", a.frame_index}, {"boxes", boxes}});
  }
  return json{{"frames", frames}};
}

inline std::vector<Annotation> annotations_from_json(const json& j) {
  std::vector<Annotation> out;
  for (const auto& jf : j.at("frames")) {
    Annotation a;
    a.frame_index = jf.at("index").get<int>();
    for (const auto& jb : jf.at("boxes"))
      a.boxes.push_back({rect_from_json(jb), jb.value("label", std::string())});
    out.push_back(std::move(a));
  }
  return out;
}

inline std::vector<Annotation> annotations_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Err::IoError, "cannot open " + path.string());
  json j;
  try {
    in >> j;
    return annotations_from_json(j);
  } catch (const json::exception& e) {
    raise(Err::FormatError, path.string() + ": " + e.what());
  }
}

inline void annotations_write(const std::filesystem::path& path,
                              std::span<const Annotation> annotations) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) raise(Err::IoError, "cannot write " + path.string());
  out << annotations_to_json(annotations).dump(2) << "\n";
}

inline json report_to_json(const MetricsReport& r) {
  json per_frame = json::array();
  for (const auto& fc : r.per_frame)
    per_frame.push_back(json{{"index", fc.frame_index},
                             {"matched", fc.matched},
                             {"detections", fc.detections},
                             {"ground_truths", fc.ground_truths}});
  return json{{"precision", r.precision}, {"recall", r.recall},   {"f_measure", r.f},
              {"matched", r.matched},     {"detections", r.detections},
              {"ground_truths", r.ground_truths}, {"per_frame", per_frame}};
}

inline std::string report_table(const MetricsReport& r) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof(line), "%-10s %-10s %-10s %-8s %-8s %-8s\n", "precision", "recall",
                "f-measure", "matched", "dets", "gts");
  out << line;
  std::snprintf(line, sizeof(line), "%-10.4f %-10.4f %-10.4f %-8d %-8d %-8d\n", r.precision,
                r.recall, r.f, r.matched, r.detections, r.ground_truths);
  out << line;
  return out.str();
}

}  // namespace torsotext
