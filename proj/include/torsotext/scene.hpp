#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "torsotext/error.hpp"
#include "torsotext/evalx.hpp"
#include "torsotext/f32m.hpp"
#include "torsotext/font5x7.hpp"
#include "torsotext/frames.hpp"
#include "torsotext/grid.hpp"

namespace torsotext {

// Desk-scale ground-truth generator: renders a textured background that
// jitters sub-pixel per frame and a near-static person (skin-toned head with
// mild texture and temporal flicker, clothing-toned torso carrying dark bib
// glyphs, skin-toned limbs). Fully deterministic for a fixed spec.

struct PersonSpec {
  double head_cx = 0.0, head_cy = 0.0;  // ellipse center
  double head_rx = 6.0, head_ry = 8.0;  // ellipse radii
  float skin_tone = 0.72f;
  Rect torso;
  float clothing_tone = 0.35f;
  std::string text;
  Rect text_box;
  int glyph_scale = 2;
};

struct SceneSpec {
  int width = 112;
  int height = 160;
  std::vector<PersonSpec> persons;
  uint64_t background_seed = 1;
  float background_base = 0.45f;
  float background_contrast = 0.06f;   // amplitude of the background texture
  int background_cell = 5;             // texture lattice spacing, px
  double jitter_amplitude = 0.6;       // background sub-pixel jitter, px
  double drift_amplitude = 0.0;        // person drift, px (kept at most 1)
  double skin_texture_amp = 0.16;      // head/limb micro-texture amplitude
  double skin_flicker = 0.25;          // relative temporal modulation of skin texture
};

namespace detail {

inline uint64_t hash_mix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline double hash_unit(uint64_t seed, int64_t a, int64_t b, int64_t c = 0) {
  uint64_t h = hash_mix(seed ^ hash_mix(static_cast<uint64_t>(a) ^
                                        hash_mix(static_cast<uint64_t>(b) ^
                                                 hash_mix(static_cast<uint64_t>(c)))));
  return static_cast<double>(h >> 11) * 0x1.0p-53;  // [0,1)
}

// Bilinear value noise over a hashed lattice; smooth under sub-pixel shifts.
inline double value_noise(uint64_t seed, double x, double y, int cell) {
  double gx = x / cell, gy = y / cell;
  int64_t x0 = static_cast<int64_t>(std::floor(gx));
  int64_t y0 = static_cast<int64_t>(std::floor(gy));
  double fx = gx - static_cast<double>(x0);
  double fy = gy - static_cast<double>(y0);
  double v00 = hash_unit(seed, x0, y0), v10 = hash_unit(seed, x0 + 1, y0);
  double v01 = hash_unit(seed, x0, y0 + 1), v11 = hash_unit(seed, x0 + 1, y0 + 1);
  double top = v00 + (v10 - v00) * fx;
  double bottom = v01 + (v11 - v01) * fx;
  return top + (bottom - top) * fy;  // [0,1)
}

}  // namespace detail

inline void validate_scene(const SceneSpec& spec) {
  if (spec.width < 16 || spec.height < 16)
    raise(Err::SceneSpecError, "scene must be at least 16x16");
  if (spec.jitter_amplitude < 0 || spec.drift_amplitude < 0 || spec.drift_amplitude > 1.0)
    raise(Err::SceneSpecError, "jitter must be nonnegative and drift at most 1 px");
  for (const auto& p : spec.persons) {
    validate_rect(p.torso, "torso");
    validate_rect(p.text_box, "text_box");
    Rect frame_rect{0, 0, spec.width, spec.height};
    auto inside = [&](const Rect& r) {
      return r.x >= 0 && r.y >= 0 && r.right() <= spec.width && r.bottom() <= spec.height;
    };
    if (!inside(p.torso)) raise(Err::SceneSpecError, "torso outside frame");
    if (p.text_box.x < p.torso.x || p.text_box.y < p.torso.y ||
        p.text_box.right() > p.torso.right() || p.text_box.bottom() > p.torso.bottom())
      raise(Err::SceneSpecError, "text box must lie inside the torso rect");
    if (p.head_rx < 2 || p.head_ry < 2) raise(Err::SceneSpecError, "head too small");
    (void)frame_rect;
  }
}

namespace detail {

struct GlyphLayout {
  int x0 = 0, y0 = 0;      // top-left of the rendered string
  int width = 0, height = 0;
};

inline GlyphLayout glyph_layout(const PersonSpec& p) {
  const int s = p.glyph_scale;
  const int n = static_cast<int>(p.text.size());
  GlyphLayout l;
  l.width = n > 0 ? (n * font5x7::kGlyphWidth + (n - 1)) * s : 0;
  l.height = font5x7::kGlyphHeight * s;
  l.x0 = p.text_box.x + (p.text_box.w - l.width) / 2;
  l.y0 = p.text_box.y + (p.text_box.h - l.height) / 2;
  return l;
}

inline bool glyph_hit(const PersonSpec& p, int x, int y) {
  if (p.text.empty()) return false;
  const int s = p.glyph_scale;
  GlyphLayout l = glyph_layout(p);
  if (x < l.x0 || y < l.y0 || x >= l.x0 + l.width || y >= l.y0 + l.height) return false;
  int gx = (x - l.x0) / s;
  int gy = (y - l.y0) / s;
  int stride = font5x7::kGlyphWidth + 1;  // one blank column between glyphs
  int ci = gx / stride;
  int col = gx % stride;
  if (col >= font5x7::kGlyphWidth) return false;
  const auto& rows = font5x7::glyph(p.text[static_cast<size_t>(ci)]);
  return (rows[static_cast<size_t>(gy)] >> (font5x7::kGlyphWidth - 1 - col)) & 1;
}

}  // namespace detail

inline Frame render_scene_frame(const SceneSpec& spec, int t) {
  validate_scene(spec);

  // per-frame deterministic offsets
  double jx = (detail::hash_unit(spec.background_seed, 101, t) * 2.0 - 1.0) * spec.jitter_amplitude;
  double jy = (detail::hash_unit(spec.background_seed, 202, t) * 2.0 - 1.0) * spec.jitter_amplitude;
  double flicker =
      1.0 + spec.skin_flicker * (detail::hash_unit(spec.background_seed, 303, t) * 2.0 - 1.0);
  if (t == 0) flicker = 1.0;  // reference frame carries the nominal texture
  int drift_x = static_cast<int>(std::lround(
      (detail::hash_unit(spec.background_seed, 404, t) * 2.0 - 1.0) * spec.drift_amplitude));
  int drift_y = static_cast<int>(std::lround(
      (detail::hash_unit(spec.background_seed, 505, t) * 2.0 - 1.0) * spec.drift_amplitude));
  if (t == 0) drift_x = drift_y = 0;

  std::vector<float> pixels(static_cast<size_t>(spec.width) * spec.height);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      double noise =
          detail::value_noise(spec.background_seed, x + jx, y + jy, spec.background_cell);
      double v = spec.background_base + (noise - 0.5) * 2.0 * spec.background_contrast;

      // person shapes drawn over the background, in spec order
      int px = x - drift_x, py = y - drift_y;
      for (const auto& p : spec.persons) {
        double ex = (px - p.head_cx) / p.head_rx;
        double ey = (py - p.head_cy) / p.head_ry;
        bool in_head = ex * ex + ey * ey <= 1.0;

        Rect arms_l{p.torso.x - std::max(2, p.torso.w / 6), p.torso.y + p.torso.h / 8,
                    std::max(2, p.torso.w / 6), p.torso.h / 2};
        Rect arms_r{p.torso.right(), p.torso.y + p.torso.h / 8, std::max(2, p.torso.w / 6),
                    p.torso.h / 2};
        int leg_w = std::max(2, p.torso.w / 3 - 1);
        Rect leg_l{p.torso.x + p.torso.w / 8, p.torso.bottom(), leg_w,
                   std::max(2, spec.height - p.torso.bottom() - 2)};
        Rect leg_r{p.torso.right() - p.torso.w / 8 - leg_w, p.torso.bottom(), leg_w,
                   std::max(2, spec.height - p.torso.bottom() - 2)};
        bool in_limb = arms_l.contains(px, py) || arms_r.contains(px, py) ||
                       leg_l.contains(px, py) || leg_r.contains(px, py);

        if (in_head || in_limb) {
          double freckle = detail::value_noise(spec.background_seed ^ 0xabcdULL, px, py, 2);
          v = p.skin_tone + (freckle - 0.5) * 2.0 * spec.skin_texture_amp * flicker;
        } else if (p.torso.contains(px, py)) {
          v = detail::glyph_hit(p, px, py) ? 0.06 : p.clothing_tone;
        }
      }
      pixels[static_cast<size_t>(y) * spec.width + x] =
          static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return make_frame(t, spec.width, spec.height, std::move(pixels));
}

struct GeneratedScene {
  std::vector<Frame> frames;
  std::vector<Annotation> ground_truth;  // per-frame text boxes, label "bib"
};

inline GeneratedScene generate_scene(const SceneSpec& spec, int n_frames) {
  validate_scene(spec);
  if (n_frames < 1) raise(Err::SceneSpecError, "need at least one frame");

  GeneratedScene out;
  out.frames.reserve(static_cast<size_t>(n_frames));
  for (int t = 0; t < n_frames; ++t) {
    out.frames.push_back(render_scene_frame(spec, t));
    Annotation a;
    a.frame_index = t;
    int drift_x = t == 0 ? 0
                         : static_cast<int>(std::lround(
                               (detail::hash_unit(spec.background_seed, 404, t) * 2.0 - 1.0) *
                               spec.drift_amplitude));
    int drift_y = t == 0 ? 0
                         : static_cast<int>(std::lround(
                               (detail::hash_unit(spec.background_seed, 505, t) * 2.0 - 1.0) *
                               spec.drift_amplitude));
    for (const auto& p : spec.persons) {
      Rect shifted = p.text_box;
      shifted.x += drift_x;
      shifted.y += drift_y;
      a.boxes.push_back({shifted, "bib"});
    }
    out.ground_truth.push_back(std::move(a));
  }
  return out;
}

// --- SceneSpec JSON -------------------------------------------------------

inline json scene_to_json(const SceneSpec& s) {
  json persons = json::array();
  for (const auto& p : s.persons) {
    persons.push_back(json{{"head_cx", p.head_cx},
                           {"head_cy", p.head_cy},
                           {"head_rx", p.head_rx},
                           {"head_ry", p.head_ry},
                           {"skin_tone", p.skin_tone},
                           {"torso", rect_to_json(p.torso)},
                           {"clothing_tone", p.clothing_tone},
                           {"text", p.text},
                           {"text_box", rect_to_json(p.text_box)},
                           {"glyph_scale", p.glyph_scale}});
  }
  return json{{"width", s.width},
              {"height", s.height},
              {"persons", persons},
              {"background_seed", s.background_seed},
              {"background_base", s.background_base},
              {"background_contrast", s.background_contrast},
              {"background_cell", s.background_cell},
              {"jitter_amplitude", s.jitter_amplitude},
              {"drift_amplitude", s.drift_amplitude},
              {"skin_texture_amp", s.skin_texture_amp},
              {"skin_flicker", s.skin_flicker}};
}

inline SceneSpec scene_from_json(const json& j) {
  SceneSpec s;
  s.width = j.value("width", s.width);
  s.height = j.value("height", s.height);
  s.background_seed = j.value("background_seed", s.background_seed);
  s.background_base = j.value("background_base", s.background_base);
  s.background_contrast = j.value("background_contrast", s.background_contrast);
  s.background_cell = j.value("background_cell", s.background_cell);
  s.jitter_amplitude = j.value("jitter_amplitude", s.jitter_amplitude);
  s.drift_amplitude = j.value("drift_amplitude", s.drift_amplitude);
  s.skin_texture_amp = j.value("skin_texture_amp", s.skin_texture_amp);
  s.skin_flicker = j.value("skin_flicker", s.skin_flicker);
  if (j.contains("persons")) {
    for (const auto& jp : j.at("persons")) {
      PersonSpec p;
      p.head_cx = jp.value("head_cx", p.head_cx);
      p.head_cy = jp.value("head_cy", p.head_cy);
      p.head_rx = jp.value("head_rx", p.head_rx);
      p.head_ry = jp.value("head_ry", p.head_ry);
      p.skin_tone = jp.value("skin_tone", p.skin_tone);
      if (jp.contains("torso")) p.torso = rect_from_json(jp.at("torso"));
      p.clothing_tone = jp.value("clothing_tone", p.clothing_tone);
      p.text = jp.value("text", p.text);
      if (jp.contains("text_box")) p.text_box = rect_from_json(jp.at("text_box"));
      p.glyph_scale = jp.value("glyph_scale", p.glyph_scale);
      s.persons.push_back(std::move(p));
    }
  }
  validate_scene(s);
  return s;
}

/// Writes frames (frame_NNN.png), gt.json and scene.json into `dir`.
inline void write_scene(const SceneSpec& spec, int n_frames, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  GeneratedScene scene = generate_scene(spec, n_frames);
  char name[32];
  for (const auto& f : scene.frames) {
    std::snprintf(name, sizeof(name), "frame_%03d.png", f.index);
    png_write_file(dir / name, frame_to_png(f));
  }
  annotations_write(dir / "gt.json", scene.ground_truth);
  std::ofstream out(dir / "scene.json", std::ios::trunc);
  if (!out) raise(Err::IoError, "cannot write scene.json");
  out << scene_to_json(spec).dump(2) << "\n";
}

/// Randomized single-runner scene whose drawn torso follows the head-anchored
/// body proportions, so the generator's ground truth is self-consistent.
inline SceneSpec make_runner_scene(uint64_t seed, int width = 112, int height = 160) {
  SceneSpec s;
  s.width = width;
  s.height = height;
  s.background_seed = seed;

  auto u = [&](int tag) { return detail::hash_unit(seed ^ 0x5eedULL, tag, 0); };

  s.background_base = static_cast<float>(0.40 + 0.12 * u(1));
  s.background_contrast = static_cast<float>(0.05 + 0.03 * u(2));
  s.background_cell = 4 + static_cast<int>(u(3) * 3.0);
  s.jitter_amplitude = 0.5 + 0.3 * u(4);
  s.drift_amplitude = 0.0;
  s.skin_texture_amp = 0.14 + 0.05 * u(5);
  s.skin_flicker = 0.2 + 0.15 * u(6);

  PersonSpec p;
  p.head_rx = 5.0 + 2.0 * u(7);
  p.head_ry = p.head_rx + 1.5;
  int face_h = static_cast<int>(std::lround(2.0 * p.head_ry));
  int face_top = 8 + static_cast<int>(u(8) * 10.0);
  p.head_cy = face_top + p.head_ry;
  p.head_cx = width / 2.0 + (u(9) * 2.0 - 1.0) * width * 0.1;
  p.skin_tone = static_cast<float>(0.66 + 0.12 * u(10));

  // torso drawn exactly where the head-anchored proportions put it
  int torso_w = 2 * face_h;
  int torso_top = face_top + face_h;
  int torso_bottom = std::min(face_top + 7 * face_h, height - 8);
  p.torso = Rect{static_cast<int>(std::lround(p.head_cx)) - torso_w / 2, torso_top, torso_w,
                 torso_bottom - torso_top};
  p.clothing_tone = static_cast<float>(0.30 + 0.10 * u(11));

  int bib = 10 + static_cast<int>(u(12) * 89.0);
  p.text = std::to_string(bib);
  p.glyph_scale = 2;
  int n = static_cast<int>(p.text.size());
  int text_w = (n * font5x7::kGlyphWidth + (n - 1)) * p.glyph_scale + 4;
  int text_h = font5x7::kGlyphHeight * p.glyph_scale + 4;
  p.text_box = Rect{p.torso.x + (p.torso.w - text_w) / 2,
                    p.torso.y + p.torso.h / 5, text_w, text_h};

  s.persons.push_back(std::move(p));
  validate_scene(s);
  return s;
}

}  // namespace torsotext
