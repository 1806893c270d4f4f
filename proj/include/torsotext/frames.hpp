#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "torsotext/error.hpp"
#include "torsotext/grid.hpp"
#include "torsotext/png_io.hpp"

namespace torsotext {

/// Shell-style glob over a filename: '*' matches any run, '?' one character.
inline bool glob_match(const std::string& pattern, const std::string& name) {
  size_t p = 0, n = 0, star = std::string::npos, star_n = 0;
  while (n < name.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == name[n])) {
      ++p; ++n;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      star_n = n;
    } else if (star != std::string::npos) {
      p = star + 1;
      n = ++star_n;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

inline Frame frame_from_png(const PngImage& img, int index) {
  std::vector<float> pixels(static_cast<size_t>(img.width) * img.height);
  if (img.channels == 1) {
    for (size_t i = 0; i < pixels.size(); ++i) pixels[i] = img.data[i] / 255.0f;
  } else {
    for (size_t i = 0; i < pixels.size(); ++i) {
      pixels[i] = rgb_to_gray(img.data[i * 3] / 255.0f, img.data[i * 3 + 1] / 255.0f,
                              img.data[i * 3 + 2] / 255.0f);
    }
  }
  return make_frame(index, img.width, img.height, std::move(pixels));
}

/// Loads a PNG frame sequence in lexicographic filename order; all frames must
/// share dimensions. Zero-padded numbering keeps the order temporal.
inline std::vector<Frame> load_frame_sequence(const std::filesystem::path& dir,
                                              const std::string& pattern = "*.png") {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) raise(Err::NoFrames, "not a directory: " + dir.string());

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (glob_match(pattern, entry.path().filename().string())) files.push_back(entry.path());
  }
  if (files.empty()) raise(Err::NoFrames, "no files matching '" + pattern + "' in " + dir.string());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

  std::vector<Frame> frames;
  frames.reserve(files.size());
  for (size_t i = 0; i < files.size(); ++i) {
    PngImage img;
    try {
      img = png_read_file(files[i]);
    } catch (const Error& e) {
      if (e.code() == Err::DecodeError) throw;
      raise(Err::DecodeError, files[i].filename().string() + ": " + e.what());
    }
    Frame f = frame_from_png(img, static_cast<int>(i));
    if (!frames.empty() && (f.width != frames[0].width || f.height != frames[0].height))
      raise(Err::InconsistentSequence,
            files[i].filename().string() + " has different dimensions than the first frame");
    frames.push_back(std::move(f));
  }
  return frames;
}

inline PngImage frame_to_png(const Frame& frame) {
  PngImage img;
  img.width = frame.width;
  img.height = frame.height;
  img.channels = 1;
  img.data.resize(frame.pixels.size());
  for (size_t i = 0; i < frame.pixels.size(); ++i) {
    float v = std::clamp(frame.pixels[i], 0.0f, 1.0f);
    img.data[i] = static_cast<uint8_t>(std::lround(v * 255.0f));
  }
  return img;
}

/// Min-max normalized 8-bit visualization of a single-channel map.
inline PngImage map_to_png(const FloatMap& map) {
  require_single_channel(map, "map_to_png");
  float lo = map.values.empty() ? 0.0f : *std::min_element(map.values.begin(), map.values.end());
  float hi = map.values.empty() ? 0.0f : *std::max_element(map.values.begin(), map.values.end());
  float span = hi - lo;
  PngImage img;
  img.width = map.width;
  img.height = map.height;
  img.channels = 1;
  img.data.resize(map.values.size());
  for (size_t i = 0; i < map.values.size(); ++i) {
    float v = span > 0 ? (map.values[i] - lo) / span : 0.0f;
    img.data[i] = static_cast<uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
  }
  return img;
}

}  // namespace torsotext
