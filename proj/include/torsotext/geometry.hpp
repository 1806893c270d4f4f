#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "torsotext/error.hpp"
#include "torsotext/grid.hpp"
#include "torsotext/skin.hpp"

namespace torsotext {

/// Merged bounding region of nearby skin components; anchor for face/torso search.
struct SeedRegion {
  Rect rect;
  std::vector<int> member_ids;
};

/// Transitively merges components whose bounding rectangles are within `gap`
/// pixels of each other.
inline std::vector<SeedRegion> merge_seed_region(std::span<const SkinComponent> components,
                                                 double gap) {
  const size_t n = components.size();
  std::vector<size_t> parent(n);
  std::iota(parent.begin(), parent.end(), size_t{0});
  auto find = [&](size_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  };
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      if (rect_distance(components[i].bbox, components[j].bbox) <= gap)
        parent[find(i)] = find(j);

  std::vector<SeedRegion> seeds;
  std::vector<int> root_to_seed(n, -1);
  for (size_t i = 0; i < n; ++i) {
    size_t root = find(i);
    if (root_to_seed[root] < 0) {
      root_to_seed[root] = static_cast<int>(seeds.size());
      seeds.push_back(SeedRegion{components[i].bbox, {components[i].id}});
    } else {
      SeedRegion& s = seeds[static_cast<size_t>(root_to_seed[root])];
      s.rect = rect_union(s.rect, components[i].bbox);
      s.member_ids.push_back(components[i].id);
    }
  }
  for (auto& s : seeds) std::sort(s.member_ids.begin(), s.member_ids.end());
  return seeds;
}

struct FaceBox {
  Rect rect;
  double confidence = 0.0;
  bool refined = false;
};

/// Pluggable face detector seam. Implementations must be deterministic for
/// identical inputs and define score() for every in-bounds rect.
class FaceDetector {
 public:
  virtual ~FaceDetector() = default;
  virtual std::vector<FaceBox> detect(const Frame& frame, const Rect& region) const = 0;
  virtual double score(const Frame& frame, const Rect& rect) const = 0;
};

/// Iterative boundary refinement: grow and shrink each side by one pixel,
/// keeping only strictly score-improving moves; stops after three full sweeps
/// without improvement (or a hard sweep cap) and returns the best rect seen.
inline std::optional<FaceBox> refine_face(const FaceDetector& detector, const Frame& frame,
                                          const SeedRegion& seed, int max_sweeps = 200,
                                          int patience = 3) {
  Rect region = clamp_rect(seed.rect, frame.width, frame.height);
  if (region.w < 1 || region.h < 1) return std::nullopt;

  std::vector<FaceBox> detections = detector.detect(frame, region);
  if (detections.empty()) return std::nullopt;
  const FaceBox* best_det = &detections[0];
  for (const auto& d : detections)
    if (d.confidence > best_det->confidence) best_det = &d;

  Rect rect = clamp_rect(best_det->rect, frame.width, frame.height);
  if (rect.w < 1 || rect.h < 1) return std::nullopt;
  double best = detector.score(frame, rect);

  // (dx, dy, dw, dh) per side: grow/shrink left, top, right, bottom
  static constexpr int kMoves[8][4] = {
      {-1, 0, 1, 0}, {1, 0, -1, 0},   // left out / left in
      {0, -1, 0, 1}, {0, 1, 0, -1},   // top out / top in
      {0, 0, 1, 0},  {0, 0, -1, 0},   // right out / right in
      {0, 0, 0, 1},  {0, 0, 0, -1},   // bottom out / bottom in
  };

  int stale = 0;
  for (int sweep = 0; sweep < max_sweeps && stale < patience; ++sweep) {
    bool improved = false;
    for (const auto& m : kMoves) {
      Rect cand{rect.x + m[0], rect.y + m[1], rect.w + m[2], rect.h + m[3]};
      if (cand.w < 1 || cand.h < 1) continue;
      if (cand.x < 0 || cand.y < 0 || cand.right() > frame.width || cand.bottom() > frame.height)
        continue;
      double s = detector.score(frame, cand);
      if (s > best) {
        best = s;
        rect = cand;
        improved = true;
      }
    }
    stale = improved ? 0 : stale + 1;
  }

  return FaceBox{rect, best, true};
}

enum class TorsoProvenance { FromFace, FromSkinComponent };

struct TorsoBox {
  Rect rect;
  TorsoProvenance provenance = TorsoProvenance::FromFace;
  int head_height = 0;    // when FromFace
  bool clamped = false;   // frame boundary cut the estimate short
};

/// Torso from head geometry: twice the head height wide, anchored at the face
/// bottom, extending to seven head heights below the face top.
inline TorsoBox estimate_torso(const FaceBox& face, int frame_w, int frame_h,
                               int height_multiplier = 7, int width_multiplier = 2) {
  validate_rect(face.rect, "estimate_torso face");
  const int h = face.rect.h;

  Rect torso;
  torso.w = width_multiplier * h;
  torso.x = face.rect.x + face.rect.w / 2 - torso.w / 2;
  torso.y = face.rect.bottom();
  torso.h = face.rect.y + height_multiplier * h - torso.y;

  TorsoBox out;
  out.head_height = h;
  out.provenance = TorsoProvenance::FromFace;
  if (torso.h < 1) raise(Err::NoTorsoSpace, "face leaves no room below for a torso");
  Rect clamped = clamp_rect(torso, frame_w, frame_h);
  if (clamped.w < 1 || clamped.h < 1)
    raise(Err::NoTorsoSpace, "torso estimate clamped to nothing");
  out.clamped = clamped != torso;
  out.rect = clamped;
  return out;
}

/// Faceless case: a skin component itself proposes the torso when its shape
/// passes the body-measurement gates. The bbox grows 10% per side.
inline std::optional<TorsoBox> torso_without_face(const SkinComponent& component, int frame_w,
                                                  int frame_h, double aspect_min = 0.2,
                                                  double aspect_max = 1.2,
                                                  double min_area_frac = 0.001) {
  const Rect& b = component.bbox;
  double aspect = static_cast<double>(b.w) / static_cast<double>(b.h);
  if (aspect < aspect_min || aspect > aspect_max) return std::nullopt;
  double frame_area = static_cast<double>(frame_w) * frame_h;
  if (static_cast<double>(b.area()) < min_area_frac * frame_area) return std::nullopt;

  int grow_x = static_cast<int>(std::llround(0.1 * b.w));
  int grow_y = static_cast<int>(std::llround(0.1 * b.h));
  Rect dilated{b.x - grow_x, b.y - grow_y, b.w + 2 * grow_x, b.h + 2 * grow_y};
  Rect clamped = clamp_rect(dilated, frame_w, frame_h);
  if (clamped.w < 1 || clamped.h < 1) return std::nullopt;

  TorsoBox out;
  out.rect = clamped;
  out.provenance = TorsoProvenance::FromSkinComponent;
  out.clamped = clamped != dilated;
  return out;
}

/// The four seed outcomes: face+torso, face only, torso only, neither.
enum class TorsoCase { FaceAndTorso, FaceOnly, TorsoOnly, Neither };

inline TorsoCase classify_torso_case(bool has_face, bool has_torso) {
  if (has_face && has_torso) return TorsoCase::FaceAndTorso;
  if (has_face) return TorsoCase::FaceOnly;
  if (has_torso) return TorsoCase::TorsoOnly;
  return TorsoCase::Neither;
}

inline const char* to_string(TorsoCase c) {
  switch (c) {
    case TorsoCase::FaceAndTorso: return "face-and-torso";
    case TorsoCase::FaceOnly: return "face-only";
    case TorsoCase::TorsoOnly: return "torso-only";
    case TorsoCase::Neither: return "neither";
  }
  return "unknown";
}

}  // namespace torsotext
