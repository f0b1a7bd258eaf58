#include "sanet/lanes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace sanet {
namespace {

double point_segment_distance(double px, double py, double ax, double ay,
                              double bx, double by) {
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0)
    t = std::clamp(((px - ax) * dx + (py - ay) * dy) / len2, 0.0, 1.0);
  const double cx = ax + t * dx, cy = ay + t * dy;
  return std::hypot(px - cx, py - cy);
}

double lane_distance(const LanePolyline& lane, double px, double py) {
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i + 1 < lane.points.size(); ++i)
    best = std::min(best, point_segment_distance(
                              px, py, lane.points[i][0], lane.points[i][1],
                              lane.points[i + 1][0], lane.points[i + 1][1]));
  return best;
}

/// Bottom-edge x-intercept: the lowest segment extrapolated to y = bottom_y.
double bottom_intercept(const LanePolyline& lane, double bottom_y) {
  const auto& a = lane.points[lane.points.size() - 2];
  const auto& b = lane.points.back();
  const double dy = b[1] - a[1];
  return b[0] + (a[0] - b[0]) * (bottom_y - b[1]) / -dy;
}

}  // namespace

void canonicalize(LanePolyline& lane) {
  std::stable_sort(lane.points.begin(), lane.points.end(),
                   [](const auto& a, const auto& b) { return a[1] < b[1]; });
  lane.points.erase(
      std::unique(lane.points.begin(), lane.points.end(),
                  [](const auto& a, const auto& b) { return a[1] == b[1]; }),
      lane.points.end());
  if (lane.points.size() < 2)
    throw DataError("lane polyline needs at least two key points with distinct y");
}

std::vector<LanePolyline> assign_classes(std::vector<LanePolyline> lanes,
                                         double ego_x, double bottom_y) {
  if (lanes.empty()) return lanes;
  if (lanes.size() > 4) throw DataError("assign_classes: more than 4 lanes");
  for (auto& lane : lanes) canonicalize(lane);

  std::vector<double> intercepts(lanes.size());
  for (size_t i = 0; i < lanes.size(); ++i)
    intercepts[i] = bottom_intercept(lanes[i], bottom_y);
  for (size_t i = 0; i < lanes.size(); ++i)
    for (size_t j = i + 1; j < lanes.size(); ++j)
      if (intercepts[i] == intercepts[j])
        throw DataError("assign_classes: two lanes share a bottom intercept");

  std::vector<size_t> order(lanes.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return intercepts[a] < intercepts[b];
  });

  std::vector<size_t> left, right;  // both nearest-first
  for (size_t idx : order)
    (intercepts[idx] < ego_x ? left : right).push_back(idx);
  std::reverse(left.begin(), left.end());

  std::vector<int> assigned(lanes.size(), 0);
  std::vector<int> remaining = {2, 3, 1, 4};  // inner pair first
  auto take = [&](int label) {
    remaining.erase(std::find(remaining.begin(), remaining.end(), label));
  };
  if (!left.empty()) { assigned[left[0]] = 2; take(2); }
  if (!right.empty()) { assigned[right[0]] = 3; take(3); }
  if (left.size() > 1) { assigned[left[1]] = 1; take(1); }
  if (right.size() > 1) { assigned[right[1]] = 4; take(4); }

  // One-sided overflow: leftover lanes take the unused labels,
  // outermost label first, in distance order.
  std::vector<size_t> leftover;
  for (size_t i = 2; i < left.size(); ++i) leftover.push_back(left[i]);
  for (size_t i = 2; i < right.size(); ++i) leftover.push_back(right[i]);
  std::sort(leftover.begin(), leftover.end(), [&](size_t a, size_t b) {
    return std::abs(intercepts[a] - ego_x) < std::abs(intercepts[b] - ego_x);
  });
  std::sort(remaining.begin(), remaining.end(), [](int a, int b) {
    auto outerness = [](int label) { return label == 1 || label == 4 ? 2 : 1; };
    return outerness(a) > outerness(b) || (outerness(a) == outerness(b) && a < b);
  });
  for (size_t i = 0; i < leftover.size(); ++i)
    assigned[leftover[i]] = remaining[i];

  for (size_t i = 0; i < lanes.size(); ++i) lanes[i].cls = assigned[i];
  return lanes;
}

RasterResult rasterize(const std::vector<LanePolyline>& lanes, double width_px,
                       int width, int height) {
  if (width <= 0 || height <= 0)
    throw DimensionError("rasterize: image extents must be positive");
  if (width_px < 1.0) throw ConfigError("rasterize: width must be >= 1 pixel");

  std::vector<LanePolyline> classed = lanes;
  for (auto& lane : classed) {
    canonicalize(lane);
    if (lane.cls < 1 || lane.cls > 4)
      throw DataError("rasterize: lane without an assigned class");
    for (const auto& p : lane.points)
      if (p[0] < 0 || p[0] > width - 1 || p[1] < 0 || p[1] > height - 1)
        throw DataError("rasterize: key point out of image bounds");
  }

  RasterResult result;
  result.mask = ClassMask(height, width);
  result.binary.assign(static_cast<size_t>(height) * width, 0);
  std::vector<double> best_dist(static_cast<size_t>(height) * width,
                                std::numeric_limits<double>::infinity());

  const double radius = width_px / 2.0;
  auto claim = [&](int x, int y, const LanePolyline& lane) {
    if (x < 0 || x >= width || y < 0 || y >= height) return;
    const double d = lane_distance(lane, x, y);
    const size_t at = static_cast<size_t>(y) * width + x;
    auto& cur = result.mask.values[at];
    if (d < best_dist[at] ||
        (d == best_dist[at] && lane.cls < static_cast<int>(cur))) {
      best_dist[at] = d;
      cur = static_cast<uint8_t>(lane.cls);
    }
  };

  for (const auto& lane : classed) {
    if (width_px > 1.0) {
      // Capsule: every pixel center within radius of some segment.
      for (size_t i = 0; i + 1 < lane.points.size(); ++i) {
        const auto& a = lane.points[i];
        const auto& b = lane.points[i + 1];
        const int x0 = static_cast<int>(
            std::floor(std::min(a[0], b[0]) - radius - 1));
        const int x1 =
            static_cast<int>(std::ceil(std::max(a[0], b[0]) + radius + 1));
        const int y0 = static_cast<int>(
            std::floor(std::min(a[1], b[1]) - radius - 1));
        const int y1 =
            static_cast<int>(std::ceil(std::max(a[1], b[1]) + radius + 1));
        for (int y = std::max(0, y0); y <= std::min(height - 1, y1); ++y)
          for (int x = std::max(0, x0); x <= std::min(width - 1, x1); ++x) {
            if (point_segment_distance(x, y, a[0], a[1], b[0], b[1]) <= radius)
              claim(x, y, lane);
          }
      }
    }
    // Thin center trace: walk each segment in sub-pixel steps and stamp the
    // nearest pixel, keeping the line connected at any width.
    for (size_t i = 0; i + 1 < lane.points.size(); ++i) {
      const auto& a = lane.points[i];
      const auto& b = lane.points[i + 1];
      const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
      const int steps = std::max(1, static_cast<int>(std::ceil(len / 0.5)));
      for (int s = 0; s <= steps; ++s) {
        const double t = static_cast<double>(s) / steps;
        const int x = static_cast<int>(std::lround(a[0] + t * (b[0] - a[0])));
        const int y = static_cast<int>(std::lround(a[1] + t * (b[1] - a[1])));
        claim(x, y, lane);
      }
    }
  }

  for (size_t i = 0; i < result.binary.size(); ++i)
    result.binary[i] = result.mask.values[i] > 0 ? 1 : 0;
  return result;
}

Scene gen_scene(const SceneConfig& config) {
  if (config.size < 16) throw ConfigError("gen_scene: size must be >= 16");
  if (config.lanes < 1 || config.lanes > 4)
    throw ConfigError("gen_scene: lane count must be in [1, 4]");
  Rng rng(config.seed);
  const double s = config.size;

  const double vx = s * (0.5 + rng.uniform(-config.vp_jitter, config.vp_jitter));
  const double vy = s * (0.10 + rng.uniform(0.0, config.vp_jitter));

  // Bottom-edge slots around the ego column; a subset of the four
  // canonical positions keeps the ego-relative labeling exercised.
  std::array<double, 4> slots = {0.10, 0.34, 0.66, 0.90};
  std::vector<int> slot_ids = {0, 1, 2, 3};
  rng.shuffle(slot_ids);
  slot_ids.resize(static_cast<size_t>(config.lanes));
  std::sort(slot_ids.begin(), slot_ids.end());

  std::vector<LanePolyline> lanes;
  const double y_bottom = s - 1;
  const double y_top = vy + 0.22 * s;
  for (int id : slot_ids) {
    const double xb =
        s * (slots[static_cast<size_t>(id)] + rng.uniform(-0.035, 0.035));
    const double bend = rng.uniform(-0.25, 0.25) * s;
    LanePolyline lane;
    const int n_points = 10;
    for (int i = 0; i < n_points; ++i) {
      const double y = y_bottom - (y_bottom - y_top) * i / (n_points - 1);
      const double t = (y_bottom - y) / (y_bottom - vy);
      double x = xb + (vx - xb) * t + bend * t * (1.0 - t);
      x = std::clamp(x, 1.0, s - 2.0);
      lane.points.push_back({x, y});
    }
    std::reverse(lane.points.begin(), lane.points.end());
    lanes.push_back(std::move(lane));
  }

  lanes = assign_classes(std::move(lanes), s / 2.0, y_bottom);
  auto raster = rasterize(lanes, config.lane_width_px, config.size, config.size);

  GrayImage image(config.size, config.size);
  auto stamp = [&](int x, int y, uint8_t value) {
    for (int dy = 0; dy < config.stroke_px; ++dy)
      for (int dx = 0; dx < config.stroke_px; ++dx) {
        const int px = x + dx, py = y + dy;
        if (px >= 0 && px < config.size && py >= 0 && py < config.size)
          image.at(py, px) = value;
      }
  };
  for (const auto& lane : lanes) {
    for (size_t i = 0; i + 1 < lane.points.size(); ++i) {
      const auto& a = lane.points[i];
      const auto& b = lane.points[i + 1];
      const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
      const int steps = std::max(1, static_cast<int>(std::ceil(len / 0.6)));
      for (int st = 0; st <= steps; ++st) {
        const double t = static_cast<double>(st) / steps;
        const int x = static_cast<int>(std::lround(a[0] + t * (b[0] - a[0])));
        const int y = static_cast<int>(std::lround(a[1] + t * (b[1] - a[1])));
        const bool draw = rng.bernoulli(config.draw_prob);
        const auto value = static_cast<uint8_t>(rng.uniform_int(140, 255));
        if (draw) stamp(x, y, value);
      }
    }
  }

  for (int i = 0; i < config.occluders; ++i) {
    const int ow = static_cast<int>(
        s * rng.uniform(config.occluder_min_frac, config.occluder_max_frac));
    const int oh = static_cast<int>(
        s * rng.uniform(config.occluder_min_frac, config.occluder_max_frac));
    const int ox = static_cast<int>(rng.uniform_int(0, config.size - 1 - ow));
    const int oy = static_cast<int>(
        rng.uniform_int(config.size / 4, config.size - 1 - oh));
    for (int y = oy; y < oy + oh; ++y)
      for (int x = ox; x < ox + ow; ++x) image.at(y, x) = 0;
  }

  const auto n_noise = static_cast<long long>(config.noise_density * s * s);
  for (long long i = 0; i < n_noise; ++i) {
    const int x = static_cast<int>(rng.uniform_int(0, config.size - 1));
    const int y = static_cast<int>(rng.uniform_int(0, config.size - 1));
    image.at(y, x) = static_cast<uint8_t>(rng.uniform_int(90, 255));
  }

  return Scene{std::move(image), std::move(lanes), std::move(raster.mask)};
}

void write_annotations(const std::string& path,
                       const std::vector<LanePolyline>& lanes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write annotations: " + path);
  for (const auto& lane : lanes) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : lane.points) points.push_back({p[0], p[1]});
    nlohmann::json line = {{"class", lane.cls}, {"points", points}};
    out << line.dump() << '\n';
  }
}

std::vector<LanePolyline> read_annotations(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open annotations: " + path);
  std::vector<LanePolyline> lanes;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("annotations line " + std::to_string(line_no) + ": " +
                        e.what());
    }
    LanePolyline lane;
    lane.cls = parsed.value("class", 0);
    if (!parsed.contains("points") || !parsed["points"].is_array())
      throw FormatError("annotations line " + std::to_string(line_no) +
                        ": missing points array");
    for (const auto& p : parsed["points"]) {
      if (!p.is_array() || p.size() != 2)
        throw FormatError("annotations line " + std::to_string(line_no) +
                          ": point must be [x, y]");
      lane.points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    lanes.push_back(std::move(lane));
  }
  return lanes;
}

}  // namespace sanet
