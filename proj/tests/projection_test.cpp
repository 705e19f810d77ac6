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

#include <cmath>
#include <filesystem>
#include <random>

#include "rv/error.hpp"
#include "rv/image_io.hpp"
#include "rv/projection.hpp"

namespace rv {
namespace {

PointCloud occluders_only(const PointCloud& cloud,
                          const RenderOptions& options) {
  PointCloud out;
  for (const Vec3& p : select_occluders(cloud, options)) {
    out.add(p, PointLabel::kVegetation);
  }
  return out;
}

PointCloud test_forest(double density, std::uint64_t seed) {
  ForestParams params;
  params.density_per_ha = density;
  params.seed = seed;
  params.points_per_tree = 400;
  return generate_forest(AreaSpec{}, params);
}

TEST(Camera, HalfExtentIsTangentOfHalfFov) {
  CameraIntrinsics intr;
  EXPECT_NEAR(intr.half_extent(), std::tan(25.0 * M_PI / 180.0), 1e-15);
  intr.fov_deg = 180.0;
  EXPECT_THROW(intr.validate(), ValidationError);
}

TEST(Camera, GroundFootprintOfCornerPixel) {
  CameraIntrinsics intr;
  const Pose pose{{16.0, 16.0, 35.0}, ViewDirection::kNadir};
  const double half = 35.0 * std::tan(25.0 * M_PI / 180.0);
  const double cell = 2.0 * half / 512.0;
  const Vec2 g = ground_hit(pose, intr, 0, 0);
  EXPECT_NEAR(g.x, 16.0 - half + 0.5 * cell, 1e-12);
  EXPECT_NEAR(g.y, 16.0 + half - 0.5 * cell, 1e-12);
}

TEST(Camera, PixelCoveringInvertsGroundHit) {
  CameraIntrinsics intr;
  intr.resolution = 97;
  const Pose pose{{3.0, 28.0, 20.0}, ViewDirection::kNadir};
  for (int r = 0; r < 97; r += 7) {
    for (int c = 0; c < 97; c += 5) {
      const auto px = pixel_covering(pose, intr, ground_hit(pose, intr, r, c));
      ASSERT_TRUE(px.has_value());
      EXPECT_EQ(*px, (PixelIndex{r, c}));
    }
  }
  EXPECT_FALSE(pixel_covering(pose, intr, {100.0, 100.0}).has_value());
}

TEST(Aperture, GridSpansTheExtentEdgeToEdge) {
  ApertureSpec spec;
  const std::vector<Pose> poses = aperture_poses(spec);
  ASSERT_EQ(poses.size(), 65u * 65u);
  EXPECT_EQ(poses.front().position, (Vec3{0.0, 32.0, 35.0}));
  EXPECT_EQ(poses.back().position, (Vec3{32.0, 0.0, 35.0}));
  EXPECT_EQ(poses[1].position, (Vec3{0.5, 32.0, 35.0}));
  spec.grid_n = 1;
  EXPECT_EQ(aperture_poses(spec).front().position, (Vec3{16.0, 16.0, 35.0}));
  EXPECT_EQ(reference_pose(spec).position, (Vec3{16.0, 16.0, 35.0}));
}

TEST(Aperture, CellCoveringInvertsCellCenter) {
  ApertureSpec spec;
  spec.raster_res = 64;
  for (int r = 0; r < 64; r += 3) {
    for (int c = 0; c < 64; c += 5) {
      EXPECT_EQ(aperture_cell_covering(spec, drop(aperture_cell_center(spec, r, c))),
                (PixelIndex{r, c}));
    }
  }
  EXPECT_EQ(aperture_cell_covering(spec, {-5.0, 50.0}), (PixelIndex{0, 0}));
}

TEST(Occluders, GroundThresholdFiltersLowPoints) {
  PointCloud c;
  c.add({1, 1, 0.5}, PointLabel::kVegetation);
  c.add({1, 1, 1.0}, PointLabel::kVegetation);
  c.add({1, 1, 1.5}, PointLabel::kVegetation);
  c.add({1, 1, 0.0}, PointLabel::kGround);
  const std::vector<Vec3> occ = select_occluders(c, RenderOptions{});
  ASSERT_EQ(occ.size(), 1u);
  EXPECT_EQ(occ[0].z, 1.5);
}

TEST(RayVisible, SymmetricAndRespectsRadius) {
  PointCloud c;
  c.add({5.0, 5.0, 10.0}, PointLabel::kVegetation);
  EXPECT_FALSE(ray_visible({5, 5, 0}, {5, 5, 30}, c, 0.05));
  EXPECT_FALSE(ray_visible({5, 5, 30}, {5, 5, 0}, c, 0.05));
  EXPECT_TRUE(ray_visible({5.2, 5, 0}, {5.2, 5, 30}, c, 0.05));
  EXPECT_FALSE(ray_visible({5.2, 5, 0}, {5.2, 5, 30}, c, 0.25));
  EXPECT_THROW(ray_visible({1, 1, 1}, {1, 1, 1}, c, 0.05), ValidationError);

  const PointCloud forest = test_forest(400, 3);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 32.0);
  for (int i = 0; i < 500; ++i) {
    const Vec3 a{u(rng), u(rng), 0.0}, b{u(rng), u(rng), 35.0};
    EXPECT_EQ(ray_visible(a, b, forest, 0.05), ray_visible(b, a, forest, 0.05));
  }
}

TEST(TopDown, EmptyCloudSeesTheWholeAreaAndNothingOutside) {
  CameraIntrinsics intr;
  intr.resolution = 64;
  const Pose pose{{16.0, 16.0, 35.0}, ViewDirection::kNadir};
  const AreaSpec area;
  const VisibilityMask m = render_top_down_mask(pose, intr, PointCloud{}, area);
  for (int r = 0; r < 64; ++r) {
    for (int c = 0; c < 64; ++c) {
      EXPECT_EQ(m.pixels.at(r, c), area.contains(ground_hit(pose, intr, r, c)));
    }
  }
}

TEST(TopDown, MatchesRayOracleOnEveryPixel) {
  const PointCloud forest = test_forest(400, 21);
  const RenderOptions options;
  const PointCloud occ = occluders_only(forest, options);
  CameraIntrinsics intr;
  intr.resolution = 48;
  const AreaSpec area;
  for (const Vec3 at : {Vec3{16, 16, 35}, Vec3{2, 30, 35}, Vec3{20, 9, 25}}) {
    const Pose pose{at, ViewDirection::kNadir};
    const VisibilityMask m = render_top_down_mask(pose, intr, forest, area);
    int occluded = 0;
    for (int r = 0; r < 48; ++r) {
      for (int c = 0; c < 48; ++c) {
        const Vec2 g = ground_hit(pose, intr, r, c);
        const bool expect = area.contains(g) &&
                            ray_visible(at, lift(g, 0.0), occ,
                                        options.occlusion_radius_m);
        ASSERT_EQ(m.pixels.at(r, c), expect) << r << ',' << c;
        occluded += area.contains(g) && !expect;
      }
    }
    EXPECT_GT(occluded, 0);
  }
}

TEST(BottomUp, MatchesRayOracleOnEveryCell) {
  const PointCloud forest = test_forest(400, 22);
  RenderOptions options;
  options.occlusion_radius_m = 0.1;
  const PointCloud occ = occluders_only(forest, options);
  ApertureSpec spec;
  spec.raster_res = 48;
  const AreaSpec area;
  for (const Vec2 g : {Vec2{16, 16}, Vec2{0.5, 31}, Vec2{25, 4}}) {
    const VisibilityMask m =
        render_bottom_up_mask(g, spec, forest, area, options);
    EXPECT_EQ(m.pose.view, ViewDirection::kZenith);
    for (int r = 0; r < 48; ++r) {
      for (int c = 0; c < 48; ++c) {
        const bool expect = ray_visible(lift(g, 0.0),
                                        aperture_cell_center(spec, r, c), occ,
                                        options.occlusion_radius_m);
        ASSERT_EQ(m.pixels.at(r, c), expect) << r << ',' << c;
      }
    }
  }
  EXPECT_THROW(render_bottom_up_mask({-1, 5}, spec, forest, area),
               ValidationError);
}

TEST(Registered, SamplesPoseOnReferenceGroundPixels) {
  const PointCloud forest = test_forest(400, 23);
  const RenderOptions options;
  const PointCloud occ = occluders_only(forest, options);
  CameraIntrinsics intr;
  intr.resolution = 40;
  const AreaSpec area;
  ApertureSpec spec;
  const Pose ref = reference_pose(spec);
  const Pose pose{{1.0, 2.0, 35.0}, ViewDirection::kNadir};
  const VisibilityMask m =
      render_registered_mask(pose, ref, intr, forest, area, options);
  int unseen = 0;
  for (int r = 0; r < 40; ++r) {
    for (int c = 0; c < 40; ++c) {
      const Vec2 g = ground_hit(ref, intr, r, c);
      const bool in_view =
          area.contains(g) && pixel_covering(pose, intr, g).has_value();
      unseen += !in_view;
      const bool expect =
          in_view && ray_visible(pose.position, lift(g, 0.0), occ,
                                 options.occlusion_radius_m);
      ASSERT_EQ(m.pixels.at(r, c), expect) << r << ',' << c;
    }
  }
  EXPECT_GT(unseen, 0);
  // At the reference pose registration is the identity.
  EXPECT_EQ(render_registered_mask(ref, ref, intr, forest, area).pixels,
            render_top_down_mask(ref, intr, forest, area).pixels);
}

TEST(Splat, StampsFixedDiscsScaledWithResolution) {
  PointCloud c;
  c.add({16.0, 16.0, 17.5}, PointLabel::kVegetation);
  RenderOptions options;
  options.splat_radius_px = 2.0;
  const Pose pose{{16.0, 16.0, 35.0}, ViewDirection::kNadir};
  // Pixels outside the area are 0 either way; count only what the point
  // covers.
  auto occluded = [&](int res) {
    CameraIntrinsics intr;
    intr.resolution = res;
    const VisibilityMask m =
        render_top_down_mask(pose, intr, c, AreaSpec{}, options);
    const VisibilityMask empty =
        render_top_down_mask(pose, intr, PointCloud{}, AreaSpec{}, options);
    int n = 0;
    for (std::size_t i = 0; i < m.pixels.size(); ++i) {
      n += m.pixels[i] == 0 && empty.pixels[i] == 1;
    }
    return n;
  };
  const int at512 = occluded(512);
  EXPECT_GE(at512, 12);
  EXPECT_LE(at512, 16);
  EXPECT_NEAR(occluded(1024), 4 * at512, 8);
}

TEST(MaskIo, WritesBinaryPgm) {
  VisibilityMask m;
  m.pixels = Raster<std::uint8_t>(3, 2, 1);
  m.pixels.at(1, 2) = 0;
  const auto path = std::filesystem::temp_directory_path() / "rv_mask.pgm";
  write_mask_pgm(m, path);
  const Raster<std::uint8_t> back = read_pgm(path);
  EXPECT_EQ(back.at(0, 0), 255);
  EXPECT_EQ(back.at(1, 2), 0);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace rv
