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

// Binary visibility masks from point clouds.
//
// Both renderers share one kernel: an apex (camera centre or ground point)
// looks through the occluder cloud onto a regular grid on a horizontal plane
// (the ground for top-down masks, the aperture plane for bottom-up masks).
// A cell is 0 when some occluder lies within the occlusion radius of the
// segment from the apex to the cell centre, so each mask is a rasterized
// version of ray_visible.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "rv/geometry.hpp"
#include "rv/raster.hpp"
#include "rv/scene.hpp"

namespace rv {

struct CameraIntrinsics {
  double fov_deg = 50.0;
  int resolution = 512;

  void validate() const;
  // tan(fov / 2)
  double half_extent() const;
};

struct ApertureSpec {
  double altitude_m = 35.0;
  AreaSpec extent;
  int grid_n = 65;
  int raster_res = 512;

  void validate() const;
  // World position of pose (row, col) on the grid_n x grid_n lattice. The
  // lattice spans the extent edge to edge; a single pose sits at the centre.
  Vec3 grid_position(int row, int col) const;
  int pose_count() const { return grid_n * grid_n; }
};

enum class ViewDirection { kNadir, kZenith };

struct Pose {
  Vec3 position;
  ViewDirection view = ViewDirection::kNadir;
};

struct RenderOptions {
  // Points at or below this height are treated as ground returns.
  double ground_threshold_m = 1.0;
  double occlusion_radius_m = 0.05;
  // When > 0, occluders are stamped as fixed discs of this many pixels
  // (given at 512 px, scaled linearly with resolution) instead of the
  // exact occlusion-radius test.
  double splat_radius_px = 0.0;

  void validate() const;
};

struct VisibilityMask {
  Raster<std::uint8_t> pixels;
  Pose pose;
  CameraIntrinsics intrinsics;

  int resolution() const { return pixels.width(); }
};

struct PixelIndex {
  int row = 0;
  int col = 0;

  friend bool operator==(const PixelIndex&, const PixelIndex&) = default;
};

// grid_n^2 nadir poses, row-major, row 0 at +y.
std::vector<Pose> aperture_poses(const ApertureSpec& spec);

// Pose at the centre of the aperture plane; its ground pixels define the
// rows of the visibility matrix.
Pose reference_pose(const ApertureSpec& spec);

// Ground intersection of the ray through the centre of pixel (row, col).
Vec2 ground_hit(const Pose& pose, const CameraIntrinsics& intr, int row,
                int col);
// Pixel of a nadir camera whose footprint contains `ground`, if in view.
std::optional<PixelIndex> pixel_covering(const Pose& pose,
                                         const CameraIntrinsics& intr,
                                         Vec2 ground);

// Aperture-plane position of bottom-up raster cell (row, col).
Vec3 aperture_cell_center(const ApertureSpec& spec, int row, int col);
PixelIndex aperture_cell_covering(const ApertureSpec& spec, Vec2 position);

// Vegetation points above the ground threshold.
std::vector<Vec3> select_occluders(const PointCloud& cloud,
                                   const RenderOptions& options);

// Camera image of a nadir pose: 1 where the ground inside `area` is visible
// through the pixel centre, 0 where it is occluded or outside the area.
VisibilityMask render_top_down_mask(const Pose& pose,
                                    const CameraIntrinsics& intr,
                                    const PointCloud& cloud,
                                    const AreaSpec& area,
                                    const RenderOptions& options = {});

// The same camera resampled onto the ground pixels of `reference`, so pixel
// m means the same ground point for every pose. Ground points that `pose`
// does not see at all are 0.
VisibilityMask render_registered_mask(const Pose& pose, const Pose& reference,
                                      const CameraIntrinsics& intr,
                                      const PointCloud& cloud,
                                      const AreaSpec& area,
                                      const RenderOptions& options = {});

// raster_res^2 orthographic map of the aperture plane as seen from a ground
// point; cell (r, c) is 1 iff the segment from the ground point to
// aperture_cell_center(r, c) is unobstructed. Throws if the ground point is
// outside `area`.
VisibilityMask render_bottom_up_mask(Vec2 ground_point,
                                     const ApertureSpec& spec,
                                     const PointCloud& cloud,
                                     const AreaSpec& area,
                                     const RenderOptions& options = {});

// Exact oracle: true iff no vegetation point is within `occlusion_radius_m`
// of the segment (a, b). Symmetric in a and b bit for bit.
bool ray_visible(const Vec3& a, const Vec3& b, const PointCloud& cloud,
                 double occlusion_radius_m);

// Binary PGM (P5, maxval 255): 0 occluded, 255 visible.
void write_mask_pgm(const VisibilityMask& mask,
                    const std::filesystem::path& path);

}  // namespace rv
