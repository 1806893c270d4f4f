#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "torsotext/error.hpp"

namespace torsotext {

/// Every pipeline tunable with its default. Unknown keys are rejected;
/// missing keys take the default, so "{}" is the default configuration.
struct PipelineConfig {
  int gm_window = 3;
  int range_window = 5;
  int likelihood_window = 3;

  double z_threshold = 2.0;
  int min_frames = 3;
  int max_window = 30;

  double posterior_threshold = 0.5;
  int dilation_radius = 2;
  int min_component_area = 5;
  int histogram_bins = 256;

  int torso_height_multiplier = 7;
  int torso_width_multiplier = 2;
  double faceless_aspect_min = 0.2;
  double faceless_aspect_max = 1.2;
  double faceless_area_frac = 0.001;

  double theta_pixel = 0.5;
  double theta_link = 0.5;
  int min_text_area = 6;

  double merge_gap_frac = 0.05;  // of the frame diagonal

  uint64_t seed = 1;
  int jobs = 1;

  std::string detector = "skin-heuristic";  // or "file"
  std::string detections_path;
  bool baseline_from_fused = true;
  bool detect_all_frames = false;
  bool save_intermediates = true;
  bool per_frame_outputs = false;

  bool operator==(const PipelineConfig& other) const = default;

  void validate() const {
    auto odd = [](int w) { return w >= 1 && w % 2 == 1; };
    if (!odd(gm_window) || !odd(range_window) || !odd(likelihood_window))
      raise(Err::InvalidArgument, "windows must be odd and positive");
    if (z_threshold <= 0) raise(Err::InvalidArgument, "z_threshold must be positive");
    if (min_frames < 1 || max_window < 2) raise(Err::InvalidArgument, "bad window bounds");
    if (posterior_threshold < 0 || posterior_threshold > 1)
      raise(Err::InvalidArgument, "posterior_threshold must lie in [0,1]");
    if (dilation_radius < 0 || min_component_area < 1 || histogram_bins < 2)
      raise(Err::InvalidArgument, "bad skin grouping parameters");
    if (torso_height_multiplier < 1 || torso_width_multiplier < 1)
      raise(Err::InvalidArgument, "torso multipliers must be positive");
    if (theta_pixel <= 0 || theta_pixel >= 1 || theta_link <= 0 || theta_link >= 1)
      raise(Err::InvalidArgument, "decoder thresholds must lie in (0,1)");
    if (min_text_area < 1) raise(Err::InvalidArgument, "min_text_area must be positive");
    if (merge_gap_frac < 0 || merge_gap_frac > 1)
      raise(Err::InvalidArgument, "merge_gap_frac must lie in [0,1]");
    if (jobs < 1) raise(Err::InvalidArgument, "jobs must be positive");
    if (detector != "skin-heuristic" && detector != "file")
      raise(Err::InvalidArgument, "detector must be 'skin-heuristic' or 'file'");
    if (detector == "file" && detections_path.empty())
      raise(Err::InvalidArgument, "file detector needs detections_path");
  }
};

inline nlohmann::json config_to_json(const PipelineConfig& c) {
  return nlohmann::json{
      {"gm_window", c.gm_window},
      {"range_window", c.range_window},
      {"likelihood_window", c.likelihood_window},
      {"z_threshold", c.z_threshold},
      {"min_frames", c.min_frames},
      {"max_window", c.max_window},
      {"posterior_threshold", c.posterior_threshold},
      {"dilation_radius", c.dilation_radius},
      {"min_component_area", c.min_component_area},
      {"histogram_bins", c.histogram_bins},
      {"torso_height_multiplier", c.torso_height_multiplier},
      {"torso_width_multiplier", c.torso_width_multiplier},
      {"faceless_aspect_min", c.faceless_aspect_min},
      {"faceless_aspect_max", c.faceless_aspect_max},
      {"faceless_area_frac", c.faceless_area_frac},
      {"theta_pixel", c.theta_pixel},
      {"theta_link", c.theta_link},
      {"min_text_area", c.min_text_area},
      {"merge_gap_frac", c.merge_gap_frac},
      {"seed", c.seed},
      {"jobs", c.jobs},
      {"detector", c.detector},
      {"detections_path", c.detections_path},
      {"baseline_from_fused", c.baseline_from_fused},
      {"detect_all_frames", c.detect_all_frames},
      {"save_intermediates", c.save_intermediates},
      {"per_frame_outputs", c.per_frame_outputs},
  };
}

inline PipelineConfig config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  nlohmann::json defaults = config_to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) raise(Err::FormatError, "unknown config key '" + key + "'");
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("gm_window", c.gm_window);
  get("range_window", c.range_window);
  get("likelihood_window", c.likelihood_window);
  get("z_threshold", c.z_threshold);
  get("min_frames", c.min_frames);
  get("max_window", c.max_window);
  get("posterior_threshold", c.posterior_threshold);
  get("dilation_radius", c.dilation_radius);
  get("min_component_area", c.min_component_area);
  get("histogram_bins", c.histogram_bins);
  get("torso_height_multiplier", c.torso_height_multiplier);
  get("torso_width_multiplier", c.torso_width_multiplier);
  get("faceless_aspect_min", c.faceless_aspect_min);
  get("faceless_aspect_max", c.faceless_aspect_max);
  get("faceless_area_frac", c.faceless_area_frac);
  get("theta_pixel", c.theta_pixel);
  get("theta_link", c.theta_link);
  get("min_text_area", c.min_text_area);
  get("merge_gap_frac", c.merge_gap_frac);
  get("seed", c.seed);
  get("jobs", c.jobs);
  get("detector", c.detector);
  get("detections_path", c.detections_path);
  get("baseline_from_fused", c.baseline_from_fused);
  get("detect_all_frames", c.detect_all_frames);
  get("save_intermediates", c.save_intermediates);
  get("per_frame_outputs", c.per_frame_outputs);
  c.validate();
  return c;
}

inline PipelineConfig config_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Err::IoError, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    raise(Err::FormatError, path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace torsotext
