#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <queue>

#include "sanet/lanes.hpp"

using namespace sanet;

namespace {

LanePolyline line(std::initializer_list<std::array<double, 2>> points,
                  int cls = 0) {
  LanePolyline lane;
  lane.points = points;
  lane.cls = cls;
  return lane;
}

/// Straight lane through bottom point (xb, bottom) toward (xt, top).
LanePolyline slanted(double xb, double xt, double bottom, double top) {
  return line({{xt, top}, {(xt + xb) / 2, (top + bottom) / 2}, {xb, bottom}});
}

double min_distance_to_lane(const LanePolyline& lane, double px, double py) {
  double best = 1e300;
  for (size_t i = 0; i + 1 < lane.points.size(); ++i) {
    const auto& a = lane.points[i];
    const auto& b = lane.points[i + 1];
    const double dx = b[0] - a[0], dy = b[1] - a[1];
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? ((px - a[0]) * dx + (py - a[1]) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    best = std::min(best, std::hypot(px - (a[0] + t * dx), py - (a[1] + t * dy)));
  }
  return best;
}

/// 4-connectivity of all pixels equal to cls.
bool four_connected(const ClassMask& mask, int cls) {
  std::vector<std::pair<int, int>> pixels;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(y, x) == cls) pixels.emplace_back(y, x);
  if (pixels.empty()) return false;
  std::vector<char> seen(mask.values.size(), 0);
  std::queue<std::pair<int, int>> frontier;
  frontier.push(pixels[0]);
  seen[static_cast<size_t>(pixels[0].first) * mask.width + pixels[0].second] = 1;
  size_t visited = 1;
  while (!frontier.empty()) {
    const auto [y, x] = frontier.front();
    frontier.pop();
    const int dy[4] = {1, -1, 0, 0};
    const int dx[4] = {0, 0, 1, -1};
    for (int i = 0; i < 4; ++i) {
      const int ny = y + dy[i], nx = x + dx[i];
      if (ny < 0 || ny >= mask.height || nx < 0 || nx >= mask.width) continue;
      const size_t at = static_cast<size_t>(ny) * mask.width + nx;
      if (seen[at] || mask.at(ny, nx) != cls) continue;
      seen[at] = 1;
      ++visited;
      frontier.emplace(ny, nx);
    }
  }
  return visited == pixels.size();
}

}  // namespace

TEST_CASE("canonicalize sorts by y and rejects degenerate lanes") {
  LanePolyline lane = line({{5, 30}, {2, 10}, {4, 20}, {3, 10}});
  canonicalize(lane);
  REQUIRE(lane.points.size() == 3);  // duplicate y dropped
  CHECK(lane.points[0][1] == 10);
  CHECK(lane.points[2][1] == 30);

  LanePolyline degenerate = line({{1, 5}, {2, 5}});
  CHECK_THROWS_AS(canonicalize(degenerate), DataError);
}

TEST_CASE("ego-relative class assignment") {
  SUBCASE("four lanes around the ego column") {
    std::vector<LanePolyline> lanes = {
        slanted(100, 300, 799, 400), slanted(300, 400, 799, 400),
        slanted(500, 420, 799, 400), slanted(700, 500, 799, 400)};
    const auto classed = assign_classes(lanes, 400, 799);
    CHECK(classed[0].cls == 1);
    CHECK(classed[1].cls == 2);
    CHECK(classed[2].cls == 3);
    CHECK(classed[3].cls == 4);
  }
  SUBCASE("single lane left of ego is class 2") {
    std::vector<LanePolyline> lanes = {slanted(100, 150, 99, 10)};
    CHECK(assign_classes(lanes, 200, 99)[0].cls == 2);
  }
  SUBCASE("both lanes right of ego take 3 and 4") {
    std::vector<LanePolyline> lanes = {slanted(500, 450, 799, 400),
                                       slanted(700, 500, 799, 400)};
    const auto classed = assign_classes(lanes, 400, 799);
    CHECK(classed[0].cls == 3);
    CHECK(classed[1].cls == 4);
  }
  SUBCASE("equal intercepts are a tie error") {
    std::vector<LanePolyline> lanes = {slanted(300, 200, 99, 10),
                                       slanted(300, 350, 99, 10)};
    CHECK_THROWS_AS(assign_classes(lanes, 400, 99), DataError);
  }
  SUBCASE("more than four lanes is a data error") {
    std::vector<LanePolyline> lanes(5, slanted(10, 10, 99, 10));
    CHECK_THROWS_AS(assign_classes(lanes, 400, 99), DataError);
  }
  SUBCASE("classes are invariant under horizontal translation") {
    std::vector<LanePolyline> lanes = {slanted(80, 120, 127, 40),
                                       slanted(40, 60, 127, 40),
                                       slanted(100, 110, 127, 40)};
    const auto base = assign_classes(lanes, 64, 127);
    for (double offset : {-30.0, 11.0, 25.0}) {
      auto moved = lanes;
      for (auto& lane : moved)
        for (auto& p : lane.points) p[0] += offset;
      const auto shifted = assign_classes(moved, 64 + offset, 127);
      for (size_t i = 0; i < base.size(); ++i)
        CHECK(shifted[i].cls == base[i].cls);
    }
  }
}

TEST_CASE("rasterize geometry") {
  SUBCASE("vertical band of the configured width") {
    std::vector<LanePolyline> lanes = {line({{32, 4}, {32, 59}}, 2)};
    const auto raster = rasterize(lanes, 20, 64, 64);
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        const double d = min_distance_to_lane(lanes[0], x, y);
        if (raster.mask.at(y, x) == 2) CHECK(d <= 10.0 + 0.75);
        if (d <= 9.0 && y >= 4 && y <= 59) CHECK(raster.mask.at(y, x) == 2);
      }
  }
  SUBCASE("width 1 yields only the thin trace") {
    std::vector<LanePolyline> lanes = {line({{10, 2}, {20, 30}}, 1)};
    const auto raster = rasterize(lanes, 1, 40, 40);
    int count = 0;
    for (int y = 0; y < 40; ++y)
      for (int x = 0; x < 40; ++x)
        if (raster.mask.at(y, x) == 1) {
          ++count;
          CHECK(min_distance_to_lane(lanes[0], x, y) <= 0.75);
        }
    CHECK(count >= 28);       // at least one pixel per crossed row
    CHECK(count <= 2 * 29 + 4);  // thin: no wide dilation
  }
  SUBCASE("parallel lanes 40 px apart stay disjoint at width 20") {
    std::vector<LanePolyline> lanes = {line({{30, 0}, {30, 99}}, 2),
                                       line({{70, 0}, {70, 99}}, 3)};
    const auto raster = rasterize(lanes, 20, 100, 100);
    bool saw2 = false, saw3 = false;
    for (int y = 0; y < 100; ++y)
      for (int x = 0; x < 100; ++x) {
        const uint8_t v = raster.mask.at(y, x);
        if (v == 2) {
          saw2 = true;
          CHECK(x < 50);
        }
        if (v == 3) {
          saw3 = true;
          CHECK(x > 50);
        }
      }
    CHECK(saw2);
    CHECK(saw3);
  }
  SUBCASE("binary mask marks exactly the labeled pixels") {
    std::vector<LanePolyline> lanes = {line({{8, 2}, {12, 29}}, 4)};
    const auto raster = rasterize(lanes, 5, 32, 32);
    for (size_t i = 0; i < raster.binary.size(); ++i)
      CHECK((raster.binary[i] != 0) == (raster.mask.values[i] != 0));
  }
  SUBCASE("contested pixels go to the nearest centerline") {
    // two crossing lanes; check pixels clearly nearer one centerline
    std::vector<LanePolyline> lanes = {line({{10, 0}, {10, 39}}, 3),
                                       line({{14, 0}, {14, 39}}, 1)};
    const auto raster = rasterize(lanes, 6, 40, 40);
    CHECK(raster.mask.at(20, 10) == 3);
    CHECK(raster.mask.at(20, 14) == 1);
    // midpoint x=12 ties at distance 2: smaller class wins
    CHECK(raster.mask.at(20, 12) == 1);
  }
  SUBCASE("error contracts") {
    std::vector<LanePolyline> unc = {line({{5, 0}, {5, 9}}, 0)};
    CHECK_THROWS_AS(rasterize(unc, 5, 10, 10), DataError);
    std::vector<LanePolyline> oob = {line({{5, 0}, {15, 9}}, 1)};
    CHECK_THROWS_AS(rasterize(oob, 5, 10, 10), DataError);
    std::vector<LanePolyline> ok = {line({{5, 0}, {5, 9}}, 1)};
    CHECK_THROWS_AS(rasterize(ok, 0.5, 10, 10), ConfigError);
  }
}

TEST_CASE("scene generation") {
  SUBCASE("deterministic per seed") {
    SceneConfig config;
    config.size = 96;
    config.seed = 42;
    const Scene a = gen_scene(config);
    const Scene b = gen_scene(config);
    CHECK(a.image == b.image);
    CHECK(a.mask == b.mask);
    config.seed = 43;
    const Scene c = gen_scene(config);
    CHECK(a.image.pixels != c.image.pixels);
  }
  SUBCASE("clean render stays inside the binary mask") {
    SceneConfig config;
    config.size = 96;
    config.occluders = 0;
    config.noise_density = 0.0;
    config.seed = 7;
    const Scene scene = gen_scene(config);
    for (int y = 0; y < config.size; ++y)
      for (int x = 0; x < config.size; ++x)
        if (scene.image.at(y, x) != 0) CHECK(scene.mask.at(y, x) != 0);
  }
  SUBCASE("four lanes cover all five classes") {
    SceneConfig config;
    config.size = 128;
    config.lanes = 4;
    config.seed = 11;
    const Scene scene = gen_scene(config);
    std::array<bool, 5> present{};
    for (uint8_t v : scene.mask.values) {
      REQUIRE(v < 5);
      present[v] = true;
    }
    for (bool p : present) CHECK(p);
  }
  SUBCASE("lane masks stay 4-connected under occlusion") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
      SceneConfig config;
      config.size = 96;
      config.occluders = 3;
      config.seed = seed;
      const Scene scene = gen_scene(config);
      for (const auto& lane : scene.lanes) {
        CAPTURE(seed);
        CAPTURE(lane.cls);
        CHECK(four_connected(scene.mask, lane.cls));
      }
    }
  }
  SUBCASE("mask pixels stay near their polyline") {
    SceneConfig config;
    config.size = 96;
    config.seed = 3;
    const Scene scene = gen_scene(config);
    const double limit = config.lane_width_px / 2 + 0.75;
    for (int y = 0; y < config.size; ++y)
      for (int x = 0; x < config.size; ++x) {
        const uint8_t cls = scene.mask.at(y, x);
        if (cls == 0) continue;
        for (const auto& lane : scene.lanes)
          if (lane.cls == cls)
            CHECK(min_distance_to_lane(lane, x, y) <= limit);
      }
  }
}

TEST_CASE("annotation files round trip") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "sanet_test_lanes.jsonl";
  std::vector<LanePolyline> lanes = {line({{1.5, 2}, {3, 40}}, 2),
                                     line({{10, 5}, {11, 44}}, 3)};
  write_annotations(path.string(), lanes);
  const auto loaded = read_annotations(path.string());
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].cls == 2);
  CHECK(loaded[0].points[0][0] == 1.5);
  CHECK(loaded[1].points[1][1] == 44);
  fs::remove(path);
}
