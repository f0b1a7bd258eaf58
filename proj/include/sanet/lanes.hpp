#pragma once

#include <array>
#include <string>
#include <vector>

#include "sanet/image_io.hpp"
#include "sanet/mask.hpp"
#include "sanet/rng.hpp"

namespace sanet {

/// Key-point annotation of one lane: points ordered top to bottom with
/// strictly increasing y after canonicalize(); class 0 until assigned.
struct LanePolyline {
  std::vector<std::array<double, 2>> points;  // (x, y)
  int cls = 0;
};

/// Sorts points by y and drops duplicates with equal y; requires at least
/// two points afterwards.
void canonicalize(LanePolyline& lane);

/// Ego-relative class assignment by bottom-edge x-intercept: lanes are
/// ordered by the intercept of their lowest segment extrapolated to
/// y = bottom_y; the nearest lane left of ego_x gets class 2, nearest right
/// 3, next left 1, next right 4. When one side has no lane, the leftover
/// lanes take the remaining labels outermost-first in distance order.
/// Equal intercepts raise DataError (caller must perturb).
std::vector<LanePolyline> assign_classes(std::vector<LanePolyline> lanes,
                                         double ego_x, double bottom_y);

struct RasterResult {
  ClassMask mask;
  std::vector<uint8_t> binary;  // mask > 0
};

/// Connects each lane's key points into one continuous polyline (occluded
/// gaps included) and dilates it to a capsule of radius width_px/2; a thin
/// center trace is always stamped so every key point is covered. Pixels
/// claimed by several lanes go to the nearest centerline (ties to the
/// smaller class).
RasterResult rasterize(const std::vector<LanePolyline>& lanes, double width_px,
                       int width, int height);

struct SceneConfig {
  int size = 128;
  int lanes = 4;  // 1..4
  double vp_jitter = 0.08;          // vanishing point jitter, fraction of size
  int occluders = 2;
  double occluder_min_frac = 0.10;  // occluder side, fraction of size
  double occluder_max_frac = 0.24;
  double noise_density = 0.012;     // speckle pixels, fraction of the image
  int stroke_px = 1;                // rendered stroke thickness
  double draw_prob = 0.6;           // per-step stamp probability
  double lane_width_px = 6.0;       // mask capsule width
  uint64_t seed = 0;
};

struct Scene {
  GrayImage image;
  std::vector<LanePolyline> lanes;  // classed
  ClassMask mask;
};

/// Renders 1-4 lanes converging toward a jittered vanishing point as sparse
/// bright strokes on black, adds speckle noise, and erases image pixels
/// under rectangular occluders while the mask keeps labeling the occluded
/// parts. Deterministic per seed.
Scene gen_scene(const SceneConfig& config);

/// Line-delimited JSON, one lane per line:
/// {"class": c, "points": [[x, y], ...]}.
void write_annotations(const std::string& path,
                       const std::vector<LanePolyline>& lanes);
std::vector<LanePolyline> read_annotations(const std::string& path);

}  // namespace sanet
