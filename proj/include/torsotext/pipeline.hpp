#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "torsotext/config.hpp"
#include "torsotext/detectors.hpp"
#include "torsotext/error.hpp"
#include "torsotext/evalx.hpp"
#include "torsotext/f32m.hpp"
#include "torsotext/frames.hpp"
#include "torsotext/geometry.hpp"
#include "torsotext/gradient.hpp"
#include "torsotext/grid.hpp"
#include "torsotext/log.hpp"
#include "torsotext/overlay.hpp"
#include "torsotext/parallel.hpp"
#include "torsotext/skin.hpp"
#include "torsotext/temporal.hpp"
#include "torsotext/textdet.hpp"

namespace torsotext {

// --- window stage ---------------------------------------------------------

/// Streams fused frames through the sudden-change detector. `fused_at` must
/// return the fused image of frame i for 0 <= i < n_frames.
inline TemporalWindow scan_window(const std::function<const FusedImage&(int)>& fused_at,
                                  int n_frames, const PipelineConfig& config) {
  if (n_frames < 2) raise(Err::InsufficientFrames, "need at least 2 frames");
  WindowDetector detector(config.z_threshold, config.min_frames, config.max_window, 0);
  const FusedImage& reference = fused_at(0);
  for (int t = 1; t < n_frames; ++t) {
    FloatMap diff = frame_difference(reference, fused_at(t));
    ClusterPartition partition = kmeans3(diff.values, config.seed);
    ClusterStats stats = cluster_stats(partition, fused_at(t));
    if (auto w = detector.push(stats)) return *w;
  }
  return *detector.finish();
}

// --- skin stage -----------------------------------------------------------

struct SkinStageResult {
  SkinMask keyframe_mask;                        // pixel-level, keyframe
  std::vector<SkinComponent> final_components;   // component-level survivors, keyframe coords
  SkinMask component_mask;
  bool degenerate_fallback = false;  // difference clustering degenerate; fused values used
  bool single_component = false;

  struct PerFrame {
    int frame_index = 0;
    SkinPriors priors;
    SkinMask mask;
    std::vector<SkinComponent> components;
  };
  std::vector<PerFrame> per_frame;
};

namespace detail {

// Difference-map partition for frame t against the window's first frame; when
// degenerate (duplicate frames), falls back to clustering the frame's own
// fused values so the Bayesian stage keeps valid Max/Avg clusters.
inline ClusterPartition partition_for_skin(const FusedImage& reference, const FusedImage& current,
                                           const PipelineConfig& config, bool* used_fallback) {
  FloatMap diff = frame_difference(reference, current);
  ClusterPartition partition = kmeans3(diff.values, config.seed);
  if (partition.degenerate) {
    if (used_fallback) *used_fallback = true;
    return kmeans3(current.map.values, config.seed);
  }
  return partition;
}

}  // namespace detail

inline SkinStageResult stage_skin(const std::function<const FusedImage&(int)>& fused_at,
                                  const TemporalWindow& window, const PipelineConfig& config) {
  SkinStageResult result;
  const FusedImage& key_fused = fused_at(window.keyframe_index);
  const int w = key_fused.map.width, h = key_fused.map.height;

  // keyframe classified under the terminating frame's partition
  bool fallback = false;
  ClusterPartition terminating =
      detail::partition_for_skin(fused_at(window.start_index), fused_at(window.end_index),
                                 config, &fallback);

  std::vector<std::pair<int, std::vector<SkinComponent>>> per_frame_components;
  for (int t = window.start_index; t <= window.end_index; ++t) {
    const FusedImage& fused = fused_at(t);
    ClusterPartition partition =
        (t == window.keyframe_index)
            ? terminating
            : detail::partition_for_skin(fused_at(window.start_index), fused, config, &fallback);

    SkinStageResult::PerFrame pf;
    pf.frame_index = t;
    pf.priors = skin_priors(partition, fused, config.histogram_bins);
    pf.mask = classify_skin_pixels(fused, partition, pf.priors, config.likelihood_window,
                                   config.posterior_threshold);
    pf.components = group_components(pf.mask, fused, config.dilation_radius,
                                     config.min_component_area);
    per_frame_components.emplace_back(t, pf.components);
    if (t == window.keyframe_index) result.keyframe_mask = pf.mask;
    result.per_frame.push_back(std::move(pf));
  }
  result.degenerate_fallback = fallback;

  TemporalRefineResult refined = refine_components_temporal(per_frame_components, config.seed,
                                                            config.histogram_bins);
  result.single_component = refined.single_component;

  // survivors projected into the keyframe image, then regrouped
  SkinMask projected = mask_from_components(refined.components, w, h);
  result.final_components = group_components(projected, key_fused, config.dilation_radius,
                                             config.min_component_area);
  result.component_mask = mask_from_components(result.final_components, w, h);
  return result;
}

// --- geometry stage -------------------------------------------------------

struct GeometryStageResult {
  std::vector<SeedRegion> seeds;
  std::vector<std::optional<FaceBox>> faces;    // per seed
  std::vector<std::optional<TorsoBox>> torsos;  // per seed
  std::vector<TorsoCase> cases;                 // per seed
  std::vector<TorsoBox> torso_list;
  bool no_subject = false;
};

inline std::unique_ptr<FaceDetector> make_detector(const PipelineConfig& config,
                                                   const SkinStageResult& skin,
                                                   const FusedImage& key_fused) {
  if (config.detector == "file") return std::make_unique<FileBackedDetector>(config.detections_path);
  return std::make_unique<SkinHeuristicDetector>(skin.component_mask, key_fused);
}

inline GeometryStageResult stage_geometry(const Frame& keyframe, const FusedImage& key_fused,
                                          const SkinStageResult& skin,
                                          const PipelineConfig& config) {
  GeometryStageResult result;
  if (skin.final_components.empty()) {
    result.no_subject = true;
    return result;
  }

  double diag = std::sqrt(static_cast<double>(keyframe.width) * keyframe.width +
                          static_cast<double>(keyframe.height) * keyframe.height);
  result.seeds = merge_seed_region(skin.final_components, config.merge_gap_frac * diag);

  std::unique_ptr<FaceDetector> detector = make_detector(config, skin, key_fused);
  std::map<int, const SkinComponent*> by_id;
  for (const auto& c : skin.final_components) by_id[c.id] = &c;

  for (const auto& seed : result.seeds) {
    std::optional<FaceBox> face = refine_face(*detector, keyframe, seed);
    std::optional<TorsoBox> torso;
    if (face) {
      try {
        torso = estimate_torso(*face, keyframe.width, keyframe.height,
                               config.torso_height_multiplier, config.torso_width_multiplier);
      } catch (const Error& e) {
        if (e.code() != Err::NoTorsoSpace) throw;
      }
    } else {
      // faceless case: the largest member component may still be torso-shaped
      std::vector<const SkinComponent*> members;
      for (int id : seed.member_ids)
        if (auto it = by_id.find(id); it != by_id.end()) members.push_back(it->second);
      std::sort(members.begin(), members.end(), [](const auto* a, const auto* b) {
        return a->bbox.area() != b->bbox.area() ? a->bbox.area() > b->bbox.area()
                                                : a->id < b->id;
      });
      for (const auto* c : members) {
        auto cand = torso_without_face(*c, keyframe.width, keyframe.height,
                                       config.faceless_aspect_min, config.faceless_aspect_max,
                                       config.faceless_area_frac);
        if (cand) {
          torso = cand;
          break;
        }
      }
    }
    result.cases.push_back(classify_torso_case(face.has_value(), torso.has_value()));
    result.faces.push_back(face);
    if (torso) result.torso_list.push_back(*torso);
    result.torsos.push_back(std::move(torso));
  }
  if (result.torso_list.empty() &&
      std::none_of(result.faces.begin(), result.faces.end(),
                   [](const auto& f) { return f.has_value(); }))
    result.no_subject = true;
  return result;
}

// --- detection stage ------------------------------------------------------

inline FloatMap crop_map(const FloatMap& map, const Rect& rect) {
  Rect r = clamp_rect(rect, map.width, map.height);
  if (r.w < 1 || r.h < 1) raise(Err::InvalidArgument, "crop outside map");
  FloatMap out = FloatMap::zeros(r.w, r.h, map.channels);
  for (int y = 0; y < r.h; ++y)
    for (int x = 0; x < r.w; ++x)
      for (int c = 0; c < map.channels; ++c) out.at(x, y, c) = map.at(r.x + x, r.y + y, c);
  return out;
}

/// Decodes text boxes from each torso crop of a fused image and maps them back
/// to frame coordinates.
inline std::vector<Rect> stage_detect_frame(const FusedImage& fused,
                                            std::span<const TorsoBox> torsos,
                                            const PipelineConfig& config) {
  std::vector<Rect> detections;
  if (!config.baseline_from_fused) return detections;  // network score maps come via the CLI
  for (const auto& torso : torsos) {
    Rect r = clamp_rect(torso.rect, fused.map.width, fused.map.height);
    if (r.w < 3 || r.h < 3) continue;
    LinkScoreMaps scores = synthesize_scores_from_fused(crop_map(fused.map, r));
    for (Rect box : decode_links(scores, config.theta_pixel, config.theta_link,
                                 config.min_text_area)) {
      box.x += r.x;
      box.y += r.y;
      detections.push_back(box);
    }
  }
  std::sort(detections.begin(), detections.end(), [](const Rect& a, const Rect& b) {
    return std::tie(a.y, a.x, a.w, a.h) < std::tie(b.y, b.x, b.w, b.h);
  });
  detections.erase(std::unique(detections.begin(), detections.end()), detections.end());
  return detections;
}

// --- full pipeline --------------------------------------------------------

struct PipelineOutput {
  TemporalWindow window;
  SkinStageResult skin;
  GeometryStageResult geometry;
  std::vector<Rect> detections;                       // keyframe coordinates
  std::map<int, std::vector<Rect>> per_frame_detections;  // with detect_all_frames
  bool no_subject = false;
};

/// Runs the stages in order on an in-memory frame sequence. Fused images are
/// computed on demand (parallel across frames when jobs > 1), so duplicate
/// sequences stop after the second frame.
inline PipelineOutput run_pipeline(std::span<const Frame> frames, const PipelineConfig& config) {
  config.validate();
  if (frames.size() < 2) raise(Err::InsufficientFrames, "need at least 2 frames");
  const int n = static_cast<int>(frames.size());

  std::vector<std::optional<FusedImage>> cache(static_cast<size_t>(n));
  auto ensure_chunk = [&](int upto) {
    // fill [first missing, upto] in one parallel sweep
    int first = 0;
    while (first <= upto && cache[static_cast<size_t>(first)]) ++first;
    if (first > upto) return;
    parallel_for(first, upto + 1, config.jobs, [&](int i) {
      if (!cache[static_cast<size_t>(i)])
        cache[static_cast<size_t>(i)] =
            compute_fused(frames[static_cast<size_t>(i)], config.gm_window, config.range_window);
    });
  };
  std::function<const FusedImage&(int)> fused_at = [&](int i) -> const FusedImage& {
    if (!cache[static_cast<size_t>(i)]) ensure_chunk(i);
    return *cache[static_cast<size_t>(i)];
  };

  PipelineOutput out;
  out.window = scan_window(fused_at, n, config);
  TORSOTEXT_LOG_INFO("window [%d,%d] keyframe %d", out.window.start_index, out.window.end_index,
                     out.window.keyframe_index);

  out.skin = stage_skin(fused_at, out.window, config);
  const Frame& keyframe = frames[static_cast<size_t>(out.window.keyframe_index)];
  const FusedImage& key_fused = fused_at(out.window.keyframe_index);

  out.geometry = stage_geometry(keyframe, key_fused, out.skin, config);
  out.no_subject = out.geometry.no_subject;

  out.detections = stage_detect_frame(key_fused, out.geometry.torso_list, config);
  if (config.detect_all_frames) {
    for (int t = out.window.start_index; t <= out.window.end_index; ++t)
      out.per_frame_detections[t] = stage_detect_frame(fused_at(t), out.geometry.torso_list,
                                                       config);
  }
  return out;
}

// --- artifact serialization -----------------------------------------------

inline json window_to_json(const TemporalWindow& w) {
  json stats = json::array();
  for (size_t i = 0; i < w.stats_trace.size(); ++i) {
    const auto& s = w.stats_trace[i];
    json z = json::array();
    if (i < w.z_trace.size())
      for (double v : w.z_trace[i]) z.push_back(v);
    stats.push_back(json{{"t", s.frame_offset},
                         {"sd_max", s.sd_max},
                         {"sd_avg", s.sd_avg},
                         {"median_min", s.median_min},
                         {"z", z}});
  }
  return json{{"window",
               {{"start", w.start_index},
                {"end", w.end_index},
                {"keyframe", w.keyframe_index},
                {"fired", w.fired},
                {"duplicate_frames", w.duplicate_frames}}},
              {"stats", stats}};
}

inline json components_to_json(std::span<const SkinComponent> components) {
  json arr = json::array();
  for (const auto& c : components) {
    arr.push_back(json{{"id", c.id},
                       {"bbox", rect_to_json(c.bbox)},
                       {"area", c.pixels.size()},
                       {"mean_fused", c.mean_fused}});
  }
  return arr;
}

inline json torsos_to_json(const GeometryStageResult& g) {
  json arr = json::array();
  for (const auto& t : g.torso_list) {
    json jt{{"bbox", rect_to_json(t.rect)},
            {"provenance",
             t.provenance == TorsoProvenance::FromFace ? "from-face" : "from-skin-component"},
            {"clamped", t.clamped}};
    if (t.provenance == TorsoProvenance::FromFace) jt["head_height"] = t.head_height;
    arr.push_back(jt);
  }
  return arr;
}

inline std::vector<TorsoBox> torsos_from_json(const json& arr) {
  std::vector<TorsoBox> out;
  for (const auto& jt : arr) {
    TorsoBox t;
    t.rect = rect_from_json(jt.at("bbox"));
    t.provenance = jt.value("provenance", std::string("from-face")) == "from-skin-component"
                       ? TorsoProvenance::FromSkinComponent
                       : TorsoProvenance::FromFace;
    t.head_height = jt.value("head_height", 0);
    t.clamped = jt.value("clamped", false);
    out.push_back(t);
  }
  return out;
}

inline SkinMask mask_from_png(const PngImage& img) {
  SkinMask m = SkinMask::empty(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) m.set(x, y, img.at(x, y, 0) >= 128);
  return m;
}

inline PngImage mask_to_png(const SkinMask& mask) {
  PngImage img;
  img.width = mask.width;
  img.height = mask.height;
  img.channels = 1;
  img.data.assign(static_cast<size_t>(mask.width) * mask.height, 0);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(x, y)) img.data[static_cast<size_t>(y) * mask.width + x] = 255;
  return img;
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) raise(Err::IoError, "cannot write " + path.string());
  out << j.dump(2) << "\n";
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Err::IoError, "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    raise(Err::FormatError, path.string() + ": " + e.what());
  }
  return j;
}

/// Runs the pipeline and caches stage artifacts under out_dir with stable
/// names: fuse/, window.json, skin/, torso.json, det.json, overlay.png.
inline PipelineOutput run_pipeline_cached(std::span<const Frame> frames,
                                          const std::filesystem::path& out_dir,
                                          const PipelineConfig& config) {
  namespace fs = std::filesystem;
  PipelineOutput out = run_pipeline(frames, config);

  fs::create_directories(out_dir);
  char name[48];

  if (config.save_intermediates) {
    fs::create_directories(out_dir / "fuse");
    for (int t = out.window.start_index; t <= out.window.end_index; ++t) {
      FusedImage fused = compute_fused(frames[static_cast<size_t>(t)], config.gm_window,
                                       config.range_window);
      std::snprintf(name, sizeof(name), "frame_%03d_fuse.f32m", t);
      f32m_write(out_dir / "fuse" / name, fused.map);
    }
  }

  write_json_file(out_dir / "window.json", window_to_json(out.window));

  fs::create_directories(out_dir / "skin");
  png_write_file(out_dir / "skin" / "pixel_mask.png", mask_to_png(out.skin.keyframe_mask));
  png_write_file(out_dir / "skin" / "component_mask.png", mask_to_png(out.skin.component_mask));
  write_json_file(out_dir / "skin" / "components.json",
                  components_to_json(out.skin.final_components));

  write_json_file(out_dir / "torso.json", torsos_to_json(out.geometry));

  std::vector<Annotation> det_annotations;
  if (config.detect_all_frames) {
    for (const auto& [t, boxes] : out.per_frame_detections) {
      Annotation a;
      a.frame_index = t;
      for (const Rect& r : boxes) a.boxes.push_back({r, ""});
      det_annotations.push_back(std::move(a));
    }
  } else {
    Annotation a;
    a.frame_index = out.window.keyframe_index;
    for (const Rect& r : out.detections) a.boxes.push_back({r, ""});
    det_annotations.push_back(std::move(a));
  }
  annotations_write(out_dir / "det.json", det_annotations);

  std::vector<Rect> torso_rects;
  for (const auto& t : out.geometry.torso_list) torso_rects.push_back(t.rect);
  render_overlay(frames[static_cast<size_t>(out.window.keyframe_index)], torso_rects,
                 out.detections, out_dir / "overlay.png");

  if (config.per_frame_outputs) {
    for (const auto& pf : out.skin.per_frame) {
      std::snprintf(name, sizeof(name), "frame_%03d", pf.frame_index);
      fs::path dir = out_dir / "frames" / name;
      fs::create_directories(dir);
      png_write_file(dir / "skin_mask.png", mask_to_png(pf.mask));
      write_json_file(dir / "components.json", components_to_json(pf.components));

      // face/torso recomputed from this frame's own skin output
      const Frame& frame = frames[static_cast<size_t>(pf.frame_index)];
      FusedImage fused = compute_fused(frame, config.gm_window, config.range_window);
      SkinStageResult frame_skin;
      frame_skin.final_components = pf.components;
      frame_skin.component_mask = mask_from_components(pf.components, frame.width, frame.height);
      GeometryStageResult geo = stage_geometry(frame, fused, frame_skin, config);
      json faces = json::array();
      for (const auto& f : geo.faces)
        if (f)
          faces.push_back(json{{"bbox", rect_to_json(f->rect)},
                               {"confidence", f->confidence},
                               {"refined", f->refined}});
      write_json_file(dir / "faces.json", faces);
      write_json_file(dir / "torso.json", torsos_to_json(geo));
    }
  }
  return out;
}

}  // namespace torsotext
