#pragma once

#include <filesystem>
#include <span>

#include "torsotext/frames.hpp"
#include "torsotext/grid.hpp"
#include "torsotext/png_io.hpp"

namespace torsotext {

namespace detail {

// Recolors the 2 px border ring just inside the rect.
inline void stroke_rect(PngImage& img, const Rect& rect, uint8_t r, uint8_t g, uint8_t b,
                        int thickness = 2) {
  Rect c = clamp_rect(rect, img.width, img.height);
  for (int y = c.y; y < c.bottom(); ++y) {
    for (int x = c.x; x < c.right(); ++x) {
      bool on_ring = (x - c.x < thickness) || (c.right() - 1 - x < thickness) ||
                     (y - c.y < thickness) || (c.bottom() - 1 - y < thickness);
      if (!on_ring) continue;
      img.at(x, y, 0) = r;
      img.at(x, y, 1) = g;
      img.at(x, y, 2) = b;
    }
  }
}

}  // namespace detail

/// Frame with torso boxes (green) and text detections (red) burned in.
inline PngImage render_overlay_image(const Frame& frame, std::span<const Rect> torsos,
                                     std::span<const Rect> detections) {
  PngImage img;
  img.width = frame.width;
  img.height = frame.height;
  img.channels = 3;
  img.data.resize(static_cast<size_t>(frame.width) * frame.height * 3);
  for (size_t i = 0; i < frame.pixels.size(); ++i) {
    uint8_t v = static_cast<uint8_t>(std::lround(std::clamp(frame.pixels[i], 0.0f, 1.0f) * 255.0f));
    img.data[i * 3 + 0] = v;
    img.data[i * 3 + 1] = v;
    img.data[i * 3 + 2] = v;
  }
  for (const Rect& t : torsos) detail::stroke_rect(img, t, 40, 200, 40);
  for (const Rect& d : detections) detail::stroke_rect(img, d, 220, 40, 40);
  return img;
}

inline void render_overlay(const Frame& frame, std::span<const Rect> torsos,
                           std::span<const Rect> detections,
                           const std::filesystem::path& out_path) {
  png_write_file(out_path, render_overlay_image(frame, torsos, detections));
}

}  // namespace torsotext
