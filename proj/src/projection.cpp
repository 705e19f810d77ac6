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

#include "rv/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>

#include "rv/error.hpp"
#include "rv/image_io.hpp"

namespace rv {

namespace {

// Regular grid of cell centres on the horizontal plane z = `z`. Cell (0, 0)
// is the top-left one, i.e. minimum x and maximum y.
struct PlaneGrid {
  double z = 0.0;
  double left = 0.0;
  double top = 0.0;
  double cell_w = 1.0;
  double cell_h = 1.0;
  int width = 0;
  int height = 0;

  Vec3 center(int row, int col) const {
    return {left + (col + 0.5) * cell_w, top - (row + 0.5) * cell_h, z};
  }
};

PlaneGrid camera_ground_grid(const Pose& pose, const CameraIntrinsics& intr) {
  const double half = pose.position.z * intr.half_extent();
  const double cell = 2.0 * half / intr.resolution;
  return {0.0,
          pose.position.x - half,
          pose.position.y + half,
          cell,
          cell,
          intr.resolution,
          intr.resolution};
}

PlaneGrid aperture_grid(const ApertureSpec& spec) {
  const AreaSpec& e = spec.extent;
  return {spec.altitude_m,
          e.origin.x,
          e.max_y(),
          e.width_m / spec.raster_res,
          e.depth_m / spec.raster_res,
          spec.raster_res,
          spec.raster_res};
}

// Clears every still-set cell whose sight line from `apex` passes within the
// occlusion radius of an occluder. Only occluders strictly between the apex
// and the grid plane are considered.
void cast_occluders(const Vec3& apex, const PlaneGrid& grid,
                    std::span<const Vec3> occluders,
                    const RenderOptions& options,
                    Raster<std::uint8_t>& cells) {
  const double h = grid.z - apex.z;
  const double radius = options.occlusion_radius_m;
  const double radius2 = radius * radius;
  const bool fixed_splat = options.splat_radius_px > 0.0;
  const double splat_px = options.splat_radius_px * grid.width / 512.0;
  const double margin = std::max(grid.cell_w, grid.cell_h);

  for (const Vec3& q : occluders) {
    const double hq = q.z - apex.z;
    const double ratio = hq / h;
    if (!(ratio > 0.0 && ratio < 1.0)) continue;
    const double scale = 1.0 / ratio;
    const double ax = apex.x + scale * (q.x - apex.x);
    const double ay = apex.y + scale * (q.y - apex.y);
    const double fc = (ax - grid.left) / grid.cell_w - 0.5;
    const double fr = (grid.top - ay) / grid.cell_h - 0.5;

    if (fixed_splat) {
      const int r0 = std::max(0, static_cast<int>(std::ceil(fr - splat_px)));
      const int r1 = std::min(grid.height - 1,
                              static_cast<int>(std::floor(fr + splat_px)));
      const int c0 = std::max(0, static_cast<int>(std::ceil(fc - splat_px)));
      const int c1 = std::min(grid.width - 1,
                              static_cast<int>(std::floor(fc + splat_px)));
      for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
          const double dr = r - fr, dc = c - fc;
          if (dr * dr + dc * dc <= splat_px * splat_px) cells.at(r, c) = 0;
        }
      }
      continue;
    }

    // Bound the cone of sight lines passing within `radius` of q, then run
    // the exact segment test on the cells inside the bound.
    int r0 = 0, r1 = grid.height - 1, c0 = 0, c1 = grid.width - 1;
    const Vec3 d = q - apex;
    const double dist = norm(d);
    if (dist > radius) {
      const double alpha = std::asin(radius / dist);
      const double theta = std::atan2(std::hypot(d.x, d.y), std::abs(hq));
      if (theta + alpha < 0.5 * std::numbers::pi - 1e-3) {
        const double t = std::tan(theta);
        const double extent =
            std::abs(h) * std::max(std::tan(theta + alpha) - t,
                                   t - std::tan(theta - alpha)) * 1.01 +
            margin;
        const double ext_c = extent / grid.cell_w;
        const double ext_r = extent / grid.cell_h;
        if (fc + ext_c < -1.0 || fc - ext_c > grid.width ||
            fr + ext_r < -1.0 || fr - ext_r > grid.height) {
          continue;
        }
        r0 = std::max(r0, static_cast<int>(std::floor(fr - ext_r)));
        r1 = std::min(r1, static_cast<int>(std::ceil(fr + ext_r)));
        c0 = std::max(c0, static_cast<int>(std::floor(fc - ext_c)));
        c1 = std::min(c1, static_cast<int>(std::ceil(fc + ext_c)));
      }
    }
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        std::uint8_t& cell = cells.at(r, c);
        if (cell == 0) continue;
        if (squared_distance_to_segment(q, apex, grid.center(r, c)) <=
            radius2) {
          cell = 0;
        }
      }
    }
  }
}

}  // namespace

void CameraIntrinsics::validate() const {
  require(fov_deg > 0.0 && fov_deg < 180.0, "fov must be in (0, 180) degrees");
  require(resolution >= 2, "camera resolution must be >= 2");
}

double CameraIntrinsics::half_extent() const {
  return std::tan(0.5 * fov_deg * std::numbers::pi / 180.0);
}

void ApertureSpec::validate() const {
  require(std::isfinite(altitude_m) && altitude_m > 0.0,
          "aperture altitude must be > 0");
  extent.validate();
  require(grid_n >= 1, "aperture grid_n must be >= 1");
  require(raster_res >= 1, "aperture raster_res must be >= 1");
}

Vec3 ApertureSpec::grid_position(int row, int col) const {
  if (grid_n == 1) return lift(extent.center(), altitude_m);
  return {extent.origin.x + col * extent.width_m / (grid_n - 1),
          extent.max_y() - row * extent.depth_m / (grid_n - 1), altitude_m};
}

void RenderOptions::validate() const {
  require(std::isfinite(ground_threshold_m), "ground threshold must be finite");
  require(std::isfinite(occlusion_radius_m) && occlusion_radius_m >= 0.0,
          "occlusion radius must be >= 0");
  require(std::isfinite(splat_radius_px) && splat_radius_px >= 0.0,
          "splat radius must be >= 0");
}

std::vector<Pose> aperture_poses(const ApertureSpec& spec) {
  spec.validate();
  std::vector<Pose> poses;
  poses.reserve(spec.pose_count());
  for (int r = 0; r < spec.grid_n; ++r) {
    for (int c = 0; c < spec.grid_n; ++c) {
      poses.push_back({spec.grid_position(r, c), ViewDirection::kNadir});
    }
  }
  return poses;
}

Pose reference_pose(const ApertureSpec& spec) {
  return {lift(spec.extent.center(), spec.altitude_m), ViewDirection::kNadir};
}

Vec2 ground_hit(const Pose& pose, const CameraIntrinsics& intr, int row,
                int col) {
  return drop(camera_ground_grid(pose, intr).center(row, col));
}

std::optional<PixelIndex> pixel_covering(const Pose& pose,
                                         const CameraIntrinsics& intr,
                                         Vec2 ground) {
  const PlaneGrid grid = camera_ground_grid(pose, intr);
  const double fc = (ground.x - grid.left) / grid.cell_w;
  const double fr = (grid.top - ground.y) / grid.cell_h;
  if (fc < 0.0 || fr < 0.0 || fc >= grid.width || fr >= grid.height) {
    return std::nullopt;
  }
  return PixelIndex{static_cast<int>(fr), static_cast<int>(fc)};
}

Vec3 aperture_cell_center(const ApertureSpec& spec, int row, int col) {
  return aperture_grid(spec).center(row, col);
}

PixelIndex aperture_cell_covering(const ApertureSpec& spec, Vec2 position) {
  const PlaneGrid grid = aperture_grid(spec);
  const int col = static_cast<int>(
      std::floor((position.x - grid.left) / grid.cell_w));
  const int row = static_cast<int>(
      std::floor((grid.top - position.y) / grid.cell_h));
  return {std::clamp(row, 0, grid.height - 1),
          std::clamp(col, 0, grid.width - 1)};
}

std::vector<Vec3> select_occluders(const PointCloud& cloud,
                                   const RenderOptions& options) {
  std::vector<Vec3> out;
  out.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.labels[i] == PointLabel::kVegetation &&
        cloud.points[i].z > options.ground_threshold_m) {
      out.push_back(cloud.points[i]);
    }
  }
  return out;
}

VisibilityMask render_top_down_mask(const Pose& pose,
                                    const CameraIntrinsics& intr,
                                    const PointCloud& cloud,
                                    const AreaSpec& area,
                                    const RenderOptions& options) {
  intr.validate();
  area.validate();
  options.validate();
  require(pose.view == ViewDirection::kNadir, "top-down mask needs a nadir pose");
  require(pose.position.z > 0.0, "top-down pose must be above ground");

  const PlaneGrid grid = camera_ground_grid(pose, intr);
  VisibilityMask mask{Raster<std::uint8_t>(grid.width, grid.height), pose,
                      intr};
  for (int r = 0; r < grid.height; ++r) {
    for (int c = 0; c < grid.width; ++c) {
      mask.pixels.at(r, c) = area.contains(drop(grid.center(r, c))) ? 1 : 0;
    }
  }
  const std::vector<Vec3> occluders = select_occluders(cloud, options);
  cast_occluders(pose.position, grid, occluders, options, mask.pixels);
  return mask;
}

VisibilityMask render_registered_mask(const Pose& pose, const Pose& reference,
                                      const CameraIntrinsics& intr,
                                      const PointCloud& cloud,
                                      const AreaSpec& area,
                                      const RenderOptions& options) {
  intr.validate();
  area.validate();
  options.validate();
  require(pose.view == ViewDirection::kNadir &&
              reference.view == ViewDirection::kNadir,
          "registered masks need nadir poses");
  require(pose.position.z > 0.0 && reference.position.z > 0.0,
          "poses must be above ground");

  const PlaneGrid grid = camera_ground_grid(reference, intr);
  VisibilityMask mask{Raster<std::uint8_t>(grid.width, grid.height), pose,
                      intr};
  for (int r = 0; r < grid.height; ++r) {
    for (int c = 0; c < grid.width; ++c) {
      const Vec2 g = drop(grid.center(r, c));
      mask.pixels.at(r, c) =
          area.contains(g) && pixel_covering(pose, intr, g).has_value() ? 1
                                                                         : 0;
    }
  }
  const std::vector<Vec3> occluders = select_occluders(cloud, options);
  cast_occluders(pose.position, grid, occluders, options, mask.pixels);
  return mask;
}

VisibilityMask render_bottom_up_mask(Vec2 ground_point,
                                     const ApertureSpec& spec,
                                     const PointCloud& cloud,
                                     const AreaSpec& area,
                                     const RenderOptions& options) {
  spec.validate();
  area.validate();
  options.validate();
  require(area.contains(ground_point), "ground point outside the scene area");

  const PlaneGrid grid = aperture_grid(spec);
  VisibilityMask mask{Raster<std::uint8_t>(grid.width, grid.height, 1),
                      Pose{lift(ground_point, 0.0), ViewDirection::kZenith},
                      CameraIntrinsics{}};
  mask.intrinsics.resolution = spec.raster_res;
  const std::vector<Vec3> occluders = select_occluders(cloud, options);
  cast_occluders(lift(ground_point, 0.0), grid, occluders, options,
                 mask.pixels);
  return mask;
}

bool ray_visible(const Vec3& a, const Vec3& b, const PointCloud& cloud,
                 double occlusion_radius_m) {
  require(!(a == b), "ray endpoints must differ");
  const double r2 = occlusion_radius_m * occlusion_radius_m;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.labels[i] != PointLabel::kVegetation) continue;
    if (squared_distance_to_segment(cloud.points[i], a, b) <= r2) return false;
  }
  return true;
}

void write_mask_pgm(const VisibilityMask& mask,
                    const std::filesystem::path& path) {
  Raster<std::uint8_t> image(mask.pixels.width(), mask.pixels.height());
  for (std::size_t i = 0; i < image.size(); ++i) {
    image[i] = mask.pixels[i] ? 255 : 0;
  }
  write_pgm(image, path);
}

}  // namespace rv
