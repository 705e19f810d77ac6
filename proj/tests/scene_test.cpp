// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <sstream>

#include "rv/error.hpp"
#include "rv/scene.hpp"

namespace rv {
namespace {

TEST(AreaSpec, RejectsDegenerateSize) {
  EXPECT_THROW((AreaSpec{0.0, 10.0, {0, 0}}.validate()), ValidationError);
  EXPECT_THROW((AreaSpec{10.0, -1.0, {0, 0}}.validate()), ValidationError);
  EXPECT_NO_THROW(AreaSpec{}.validate());
}

TEST(Forest, HundredPerHectareOnDefaultAreaIsTenTrees) {
  AreaSpec area;
  ForestParams params;
  EXPECT_EQ(tree_count(area, params), 10);
  EXPECT_EQ(plant_trees(area, params).size(), 10u);
  EXPECT_EQ(generate_forest(area, params).vegetation_count(), 10u * 2000u);
}

TEST(Forest, TreeCountRoundsHalfAwayFromZero) {
  AreaSpec area{100.0, 50.0, {0, 0}};  // 0.5 ha
  ForestParams params;
  params.density_per_ha = 5.0;  // 2.5 trees
  EXPECT_EQ(tree_count(area, params), 3);
  params.density_per_ha = 4.0;
  EXPECT_EQ(tree_count(area, params), 2);
}

TEST(Forest, ZeroDensityGivesNoVegetation) {
  ForestParams params;
  params.density_per_ha = 0.0;
  params.seed = 99;
  EXPECT_EQ(generate_forest(AreaSpec{}, params).vegetation_count(), 0u);
}

TEST(Forest, IsDeterministicAndSeedSensitive) {
  ForestParams params;
  params.seed = 4;
  const PointCloud a = generate_forest(AreaSpec{}, params);
  const PointCloud b = generate_forest(AreaSpec{}, params);
  EXPECT_EQ(a, b);
  params.seed = 5;
  EXPECT_FALSE(generate_forest(AreaSpec{}, params) == a);
}

TEST(Forest, PointsLieOnTreesInsideTheExtendedFootprint) {
  AreaSpec area;
  ForestParams params;
  params.density_per_ha = 400.0;
  params.seed = 12;
  const std::vector<Tree> trees = plant_trees(area, params);
  const PointCloud cloud = generate_forest(area, params);
  EXPECT_NO_THROW(cloud.validate());
  const double r = params.crown_radius_m;
  for (const Tree& t : trees) {
    EXPECT_GE(t.height_m, 5.0);
    EXPECT_LE(t.height_m, 2.0 * params.mean_height_m);
  }
  for (const Vec3& p : cloud.points) {
    EXPECT_GT(p.z, 0.0);
    EXPECT_GE(p.x, area.origin.x - r);
    EXPECT_LE(p.x, area.max_x() + r);
    EXPECT_GE(p.y, area.origin.y - r);
    EXPECT_LE(p.y, area.max_y() + r);
    // Every point belongs to the trunk or crown of some tree.
    bool on_tree = false;
    for (const Tree& t : trees) {
      const double dx = p.x - t.base.x, dy = p.y - t.base.y;
      const double radial = std::hypot(dx, dy);
      const bool trunk = radial <= 0.15 + 1e-9 && p.z <= 0.7 * t.height_m;
      const double cz = (p.z - 0.7 * t.height_m) / (0.3 * t.height_m);
      const bool crown =
          (dx * dx + dy * dy) / (r * r) + cz * cz <= 1.0 + 1e-9;
      if (trunk || crown) {
        on_tree = true;
        break;
      }
    }
    ASSERT_TRUE(on_tree) << p.x << ' ' << p.y << ' ' << p.z;
  }
}

TEST(RectRoi, SinglePointSitsAtTheCentre) {
  AreaSpec area;
  const GroundPoints g = make_rect_roi(area, 1, 1, 1.0, area.center());
  ASSERT_EQ(g.size(), 1);
  EXPECT_EQ(g.points[0], (Vec2{16.0, 16.0}));
}

TEST(RectRoi, ThreeBySevenIsTwentyOnePointsRowMajorFromTop) {
  AreaSpec area;
  const GroundPoints g = make_rect_roi(area, 3, 7, 1.0, area.center());
  ASSERT_EQ(g.size(), 21);
  EXPECT_NO_THROW(g.validate(area));
  EXPECT_EQ(g.points.front(), (Vec2{13.0, 17.0}));
  EXPECT_EQ(g.points[6], (Vec2{19.0, 17.0}));
  EXPECT_EQ(g.points.back(), (Vec2{19.0, 15.0}));
}

TEST(RectRoi, RejectsPatternLeavingTheArea) {
  AreaSpec area;
  EXPECT_THROW(make_rect_roi(area, 3, 7, 10.0, area.center()),
               ValidationError);
}

TEST(PathRoi, SpacesPointsByArcLength) {
  const std::vector<Vec2> line{{0, 0}, {10, 0}};
  const GroundPoints g = make_path_roi(line, 3);
  ASSERT_EQ(g.size(), 3);
  EXPECT_DOUBLE_EQ(g.points[0].x, 0.0);
  EXPECT_DOUBLE_EQ(g.points[1].x, 5.0);
  EXPECT_DOUBLE_EQ(g.points[2].x, 10.0);

  const std::vector<Vec2> bend{{0, 0}, {4, 0}, {4, 4}};
  const GroundPoints b = make_path_roi(bend, 5);
  EXPECT_NEAR(b.points[2].x, 4.0, 1e-12);
  EXPECT_NEAR(b.points[2].y, 0.0, 1e-12);
  EXPECT_NEAR(b.points[3].y, 2.0, 1e-12);
}

TEST(PathRoi, TwoHundredFortyPoints) {
  AreaSpec area;
  const std::vector<Vec2> path{{3, 5}, {12, 13}, {20, 11}, {29, 27}};
  const GroundPoints g = make_path_roi(path, 240, area);
  EXPECT_EQ(g.size(), 240);
  EXPECT_NO_THROW(g.validate(area));
}

TEST(PathRoi, RejectsDegeneratePolyline) {
  const std::vector<Vec2> same{{1, 1}, {1, 1}, {1, 1}};
  EXPECT_THROW(make_path_roi(same, 4), ValidationError);
  const std::vector<Vec2> line{{0, 0}, {40, 0}};
  EXPECT_THROW(make_path_roi(line, 4, AreaSpec{}), ValidationError);
}

TEST(GroundPoints, RejectsDuplicatesAndOutsiders) {
  AreaSpec area;
  GroundPoints g{{{1, 1}, {1, 1}}};
  EXPECT_THROW(g.validate(area), ValidationError);
  g.points = {{1, 1}, {40, 1}};
  EXPECT_THROW(g.validate(area), ValidationError);
  g.points = {};
  EXPECT_THROW(g.validate(area), ValidationError);
}

PointCloud small_cloud() {
  PointCloud c;
  c.add({1.25, 2.5, 3.125}, PointLabel::kVegetation);
  c.add({0.375, 0.625, 0.0}, PointLabel::kGround);
  c.add({31.0, 7.0, 19.75}, PointLabel::kVegetation);
  return c;
}

TEST(CloudIo, XyzRoundTripsExactly) {
  const PointCloud c = small_cloud();
  std::stringstream s;
  write_xyz(c, s);
  EXPECT_EQ(read_xyz(s), c);
}

TEST(CloudIo, XyzInfersMissingLabelsFromHeight) {
  std::stringstream s("1 2 3\n4 5 0\n");
  const PointCloud c = read_xyz(s);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.labels[0], PointLabel::kVegetation);
  EXPECT_EQ(c.labels[1], PointLabel::kGround);
}

TEST(CloudIo, PlyRoundTripsFloatValues) {
  const PointCloud c = small_cloud();
  std::stringstream s;
  write_ply(c, s);
  EXPECT_EQ(read_ply(s), c);
}

TEST(CloudIo, RejectsMalformedInput) {
  std::stringstream bad_xyz("1 2\n");
  EXPECT_THROW(read_xyz(bad_xyz), std::runtime_error);
  std::stringstream bad_ply("ply\nformat ascii 1.0\nend_header\n");
  EXPECT_THROW(read_ply(bad_ply), std::runtime_error);
}

TEST(PointCloud, ValidateChecksLabelsAgainstHeight) {
  PointCloud c;
  c.add({0, 0, 0.0}, PointLabel::kVegetation);
  EXPECT_THROW(c.validate(), ValidationError);
  PointCloud g;
  g.add({0, 0, 1.0}, PointLabel::kGround);
  EXPECT_THROW(g.validate(), ValidationError);
}

}  // namespace
}  // namespace rv
