#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <vector>

#include <json.hpp>

#include "torsotext/error.hpp"
#include "torsotext/evalx.hpp"
#include "torsotext/geometry.hpp"
#include "torsotext/skin.hpp"

namespace torsotext {

/// Replays precomputed detections (e.g. from an external Viola-Jones or DNN
/// run). score() is the best IoU against any stored face, weighted by that
/// face's confidence.
class FileBackedDetector : public FaceDetector {
 public:
  explicit FileBackedDetector(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise(Err::IoError, "cannot open " + path.string());
    json j;
    try {
      in >> j;
      for (const auto& jf : j.at("frames")) {
        int index = jf.at("index").get<int>();
        for (const auto& jb : jf.at("faces")) {
          FaceBox box;
          box.rect = rect_from_json(jb);
          box.confidence = jb.value("confidence", 1.0);
          faces_[index].push_back(box);
        }
      }
    } catch (const json::exception& e) {
      raise(Err::FormatError, path.string() + ": " + e.what());
    }
  }

  explicit FileBackedDetector(std::map<int, std::vector<FaceBox>> faces)
      : faces_(std::move(faces)) {}

  std::vector<FaceBox> detect(const Frame& frame, const Rect& region) const override {
    std::vector<FaceBox> out;
    auto it = faces_.find(frame.index);
    if (it == faces_.end()) return out;
    for (const auto& f : it->second)
      if (region.contains(f.rect.center_x(), f.rect.center_y())) out.push_back(f);
    return out;
  }

  double score(const Frame& frame, const Rect& rect) const override {
    auto it = faces_.find(frame.index);
    if (it == faces_.end()) return 0.0;
    double best = 0.0;
    for (const auto& f : it->second) best = std::max(best, iou(rect, f.rect) * f.confidence);
    return best;
  }

 private:
  std::map<int, std::vector<FaceBox>> faces_;
};

/// Proposes the topmost near-square skin blob as the face. score() rewards
/// skin fill and squareness, which the boundary refinement then climbs.
class SkinHeuristicDetector : public FaceDetector {
 public:
  SkinHeuristicDetector(SkinMask mask, const FusedImage& fused) : mask_(std::move(mask)) {
    components_ = group_components(mask_, fused, /*dilation_radius=*/2, /*min_area=*/5);
  }

  std::vector<FaceBox> detect(const Frame& frame, const Rect& region) const override {
    Rect reg = clamp_rect(region, frame.width, frame.height);
    std::vector<const SkinComponent*> inside;
    for (const auto& c : components_) {
      Rect overlap = clamp_rect(c.bbox, frame.width, frame.height);
      if (rect_distance(overlap, reg) == 0.0) inside.push_back(&c);
    }
    std::sort(inside.begin(), inside.end(),
              [](const SkinComponent* a, const SkinComponent* b) {
                return std::tie(a->bbox.y, a->bbox.x) < std::tie(b->bbox.y, b->bbox.x);
              });

    std::vector<FaceBox> out;
    for (const SkinComponent* c : inside) {
      Rect box = c->bbox;
      double aspect = static_cast<double>(box.w) / box.h;
      if (aspect < 0.25 || aspect > 3.0) continue;
      if (box.h > 3 * box.w / 2) box.h = std::max(1, 3 * box.w / 2);  // head sits on top of the blob
      FaceBox fb;
      fb.rect = clamp_rect(box, frame.width, frame.height);
      if (fb.rect.w < 1 || fb.rect.h < 1) continue;
      fb.confidence = score(frame, fb.rect);
      out.push_back(fb);
      break;  // topmost qualifying blob only
    }
    return out;
  }

  double score(const Frame& frame, const Rect& rect) const override {
    Rect r = clamp_rect(rect, frame.width, frame.height);
    if (r.w < 1 || r.h < 1) return 0.0;
    long long inside = 0;
    for (int y = r.y; y < r.bottom(); ++y)
      for (int x = r.x; x < r.right(); ++x)
        if (mask_.at(x, y)) ++inside;
    double fill = static_cast<double>(inside) / static_cast<double>(r.area());
    double aspect = static_cast<double>(std::min(r.w, r.h)) / std::max(r.w, r.h);
    return fill * aspect;
  }

  const std::vector<SkinComponent>& components() const { return components_; }

 private:
  SkinMask mask_;
  std::vector<SkinComponent> components_;
};

}  // namespace torsotext
