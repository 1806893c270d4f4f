#pragma once

// Umbrella header for the torso text localization library.

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
#include "torsotext/pipeline.hpp"
#include "torsotext/png_io.hpp"
#include "torsotext/scene.hpp"
#include "torsotext/skin.hpp"
#include "torsotext/temporal.hpp"
#include "torsotext/textdet.hpp"
