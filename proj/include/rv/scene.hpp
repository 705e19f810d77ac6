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

// Procedural forest scenes and ground regions of interest.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rv/geometry.hpp"

namespace rv {

// Axis-aligned rectangle on the ground plane (z = 0). `origin` is the
// minimum corner.
struct AreaSpec {
  double width_m = 32.0;
  double depth_m = 32.0;
  Vec2 origin{0.0, 0.0};

  void validate() const;
  double hectares() const { return width_m * depth_m / 10000.0; }
  Vec2 center() const {
    return {origin.x + 0.5 * width_m, origin.y + 0.5 * depth_m};
  }
  double max_x() const { return origin.x + width_m; }
  double max_y() const { return origin.y + depth_m; }
  // Boundary inclusive.
  bool contains(Vec2 p) const {
    return p.x >= origin.x && p.x <= max_x() && p.y >= origin.y &&
           p.y <= max_y();
  }
};

enum class SpeciesPreset { kBirch };

std::string to_string(SpeciesPreset species);
SpeciesPreset parse_species(const std::string& name);

struct ForestParams {
  double density_per_ha = 100.0;
  SpeciesPreset species = SpeciesPreset::kBirch;
  std::uint64_t seed = 0;
  double mean_height_m = 20.0;
  double height_stddev_m = 3.0;
  double crown_radius_m = 2.5;
  int points_per_tree = 2000;

  void validate() const;
};

enum class PointLabel : std::uint8_t { kVegetation = 0, kGround = 1 };

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<PointLabel> labels;

  std::size_t size() const { return points.size(); }
  void add(const Vec3& p, PointLabel label) {
    points.push_back(p);
    labels.push_back(label);
  }
  std::size_t vegetation_count() const;
  // Throws ValidationError unless every coordinate is finite, vegetation
  // lies above the ground and ground points sit exactly on z = 0.
  void validate() const;

  friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

// Ordered ground points of interest. Index k is the code bit of point k.
struct GroundPoints {
  std::vector<Vec2> points;

  int size() const { return static_cast<int>(points.size()); }
  void validate(const AreaSpec& area) const;
};

struct Tree {
  Vec2 base;
  double height_m = 0.0;
};

// round(density * hectares), halves rounded away from zero.
int tree_count(const AreaSpec& area, const ForestParams& params);

// Stem positions and heights; the first stage of generate_forest.
std::vector<Tree> plant_trees(const AreaSpec& area, const ForestParams& params);

// Deterministic forest: each tree is a trunk cylinder plus an ellipsoidal
// crown, both sampled uniformly by surface area.
PointCloud generate_forest(const AreaSpec& area, const ForestParams& params);

// rows x cols lattice centered on `center`, row-major with row 0 at +y.
GroundPoints make_rect_roi(const AreaSpec& area, int rows, int cols,
                           double spacing_m, Vec2 center);

// n_points spaced evenly by arc length along the polyline, both ends
// included. When `area` is given every vertex must lie inside it.
GroundPoints make_path_roi(std::span<const Vec2> polyline, int n_points,
                           const std::optional<AreaSpec>& area = std::nullopt);

// ASCII "x y z label" lines; label 0 = vegetation, 1 = ground.
void write_xyz(const PointCloud& cloud, std::ostream& out);
PointCloud read_xyz(std::istream& in);
// Binary little-endian PLY, float32 x/y/z plus uint8 label per vertex.
void write_ply(const PointCloud& cloud, std::ostream& out);
PointCloud read_ply(std::istream& in);

// Dispatch on extension (.xyz/.txt or .ply).
void save_point_cloud(const PointCloud& cloud,
                      const std::filesystem::path& path);
PointCloud load_point_cloud(const std::filesystem::path& path);

}  // namespace rv
