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

// Run configuration: INI sections mapped onto the library's parameter
// structs. Every key has a default; unknown sections and keys are errors.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rv/projection.hpp"
#include "rv/sampler.hpp"
#include "rv/scene.hpp"
#include "rv/visibility.hpp"

namespace rv {

enum class RoiType { kRect, kPath, kPoints };

struct RoiSpec {
  RoiType type = RoiType::kRect;
  int rows = 3;
  int cols = 7;
  double spacing_m = 1.0;
  // Defaults to the scene centre.
  std::optional<Vec2> center;
  std::vector<Vec2> path;
  int n_points = 240;
  std::vector<Vec2> points;
};

struct VerifyConfig {
  int symmetry_pairs = 10000;
  int ground_samples = 64;
  int pose_samples = 48;
  int min_pairs = 1000;
  double agreement_threshold_percent = 95.0;
  int roundtrip_instances = 20;
  int monotonicity_maps = 20;
};

struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 0;
  std::filesystem::path out_dir = "out";

  AreaSpec area;
  ForestParams forest;
  // Use this cloud instead of generating a forest.
  std::optional<std::filesystem::path> cloud_path;

  CameraIntrinsics camera;
  ApertureSpec aperture;
  RenderOptions render;
  RoiSpec roi;
  int batch_bits = 24;
  GreedyConfig greedy;
  int exhaustive_budget = 0;
  int reconstruction_res = 256;
  int drones = 1;
  // Defaults to the aperture centre at flight altitude.
  std::optional<Vec3> route_start;
  VerifyConfig verify;
  std::string cloud_format = "ply";

  GroundPoints ground_points() const;
  ApertureGeoref georef() const;
  Vec3 start_position() const;
  std::filesystem::path cloud_file() const;
  // Seeds of the independent random streams derived from `seed`.
  std::uint64_t forest_seed() const;
  std::uint64_t greedy_seed() const;
  std::uint64_t verify_seed() const;
  void validate() const;
};

// Missing keys keep their defaults. The aperture extent follows the scene
// area unless set explicitly.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

// Every key with its resolved value; parse_config reads it back unchanged.
void write_config(const RunConfig& config, std::ostream& out);

}  // namespace rv
