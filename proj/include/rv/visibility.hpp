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

// Visibility matrix, forward and reciprocal integrals, and the coded
// bottom-up visibility map.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "rv/image_io.hpp"
#include "rv/projection.hpp"
#include "rv/raster.hpp"

namespace rv {

// Dense M x N binary matrix; column n is the row-major vectorization of mask
// n. Only meant for small instances: at full scale the list of masks is the
// matrix.
class VisibilityMatrix {
 public:
  VisibilityMatrix(int rows, int cols);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::uint8_t at(int m, int n) const {
    return data_[static_cast<std::size_t>(n) * rows_ + m];
  }
  std::span<const std::uint8_t> column(int n) const {
    return {data_.data() + static_cast<std::size_t>(n) * rows_,
            static_cast<std::size_t>(rows_)};
  }
  std::span<std::uint8_t> column(int n) {
    return {data_.data() + static_cast<std::size_t>(n) * rows_,
            static_cast<std::size_t>(rows_)};
  }

 private:
  int rows_;
  int cols_;
  std::vector<std::uint8_t> data_;
};

// Per-pixel mean of the selected masks; `normalization` is the number of
// masks averaged.
struct IntegralMap {
  Raster<double> values;
  int normalization = 0;
};

// Binary; entry n != 0 selects mask n.
using SelectionVector = std::vector<std::uint8_t>;

VisibilityMatrix assemble_matrix(std::span<const VisibilityMask> masks);

IntegralMap integrate_forward(std::span<const VisibilityMask> masks,
                              const SelectionVector& selection);

// Mean over the selected rows of V, reshaped to grid_width x grid_height
// (grid_width * grid_height must equal the column count).
IntegralMap integrate_reciprocal_lowres(const VisibilityMatrix& matrix,
                                        const SelectionVector& ground_selection,
                                        int grid_width, int grid_height);

enum class DownsampleMode {
  // The cell containing the pose, i.e. the same single ray a V entry uses.
  kNearestCell,
  // Majority vote over the cells within half a grid step of the pose.
  kBoxMajority,
};

// Reduces a bottom-up mask to one entry per aperture grid pose. Result is
// grid_n x grid_n, row-major in pose order.
Raster<std::uint8_t> downsample_to_grid(
    const VisibilityMask& bottom_up, const ApertureSpec& spec,
    DownsampleMode mode = DownsampleMode::kNearestCell);

struct ReciprocityOptions {
  int ground_samples = 48;
  int pose_samples = 32;
  std::uint64_t seed = 0;
  int threads = 0;
  DownsampleMode downsample = DownsampleMode::kNearestCell;
};

struct ReciprocityReport {
  int pairs = 0;
  int agreements = 0;
  double agreement() const {
    return pairs > 0 ? static_cast<double>(agreements) / pairs : 0.0;
  }
};

// Compares entries of V (registered top-down masks) against the downsampled
// bottom-up mask of the same ground pixel, over random reference ground
// pixels and random aperture poses. Only pairs where the pose actually sees
// the ground point count.
ReciprocityReport measure_reciprocity(const PointCloud& cloud,
                                      const AreaSpec& area,
                                      const CameraIntrinsics& intr,
                                      const ApertureSpec& spec,
                                      const RenderOptions& render,
                                      const ReciprocityOptions& options = {});

// World placement of a coded map's cells.
struct ApertureGeoref {
  AreaSpec extent;
  double altitude_m = 0.0;
};

// K-bit code word per aperture cell: bit k is set iff ground point k is
// visible from that cell. Words are split into B = ceil(K / L) batch planes
// of L bits; plane b holds bits [b*L, (b+1)*L).
class CodedVisibilityMap {
 public:
  static bool valid_batch_bits(int bits);

  CodedVisibilityMap(int width, int height, int num_points, int batch_bits);
  CodedVisibilityMap(int width, int height, int num_points, int batch_bits,
                     const ApertureGeoref& georef);

  int width() const { return width_; }
  int height() const { return height_; }
  int cell_count() const { return width_ * height_; }
  int num_points() const { return num_points_; }
  int batch_bits() const { return batch_bits_; }
  int num_batches() const { return static_cast<int>(planes_.size()); }
  const ApertureGeoref& georef() const { return georef_; }

  std::uint64_t word(int batch, int cell) const {
    return planes_[batch][cell];
  }
  // Throws if `value` has bits outside the batch's valid range.
  void set_word(int batch, int cell, std::uint64_t value);
  std::span<const std::uint64_t> plane(int batch) const {
    return planes_[batch];
  }
  // Mask of the bits a word in `batch` may carry.
  std::uint64_t batch_mask(int batch) const;

  bool bit(int cell, int k) const {
    return (planes_[k / batch_bits_][cell] >> (k % batch_bits_)) & 1u;
  }
  void set_bit(int cell, int k);

  // All K bits of a cell packed into 64-bit words, bit k at word k / 64.
  std::vector<std::uint64_t> packed_code(int cell) const;
  // Number of visible ground points at the cell.
  int popcount(int cell) const;

  Vec3 cell_center(int cell) const;

  friend bool operator==(const CodedVisibilityMap& a,
                         const CodedVisibilityMap& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ &&
           a.num_points_ == b.num_points_ && a.batch_bits_ == b.batch_bits_ &&
           a.planes_ == b.planes_;
  }

 private:
  int width_;
  int height_;
  int num_points_;
  int batch_bits_;
  ApertureGeoref georef_;
  std::vector<std::vector<std::uint64_t>> planes_;
};

// Word of every cell is sum_k 2^k * mask_k(cell), unnormalized.
CodedVisibilityMap build_coded_map(std::span<const VisibilityMask> masks,
                                   int batch_bits);
CodedVisibilityMap build_coded_map(std::span<const VisibilityMask> masks,
                                   int batch_bits,
                                   const ApertureGeoref& georef);

VisibilityMask decode(const CodedVisibilityMap& map, int k);

Raster<std::uint16_t> magnitude(const CodedVisibilityMap& map);

// "RVCODE1 width height K L B\n" then B planes of width*height little-endian
// L-bit words, row-major. The georeference is not stored; readers supply it.
void write_coded_map(const CodedVisibilityMap& map, std::ostream& out);
CodedVisibilityMap read_coded_map(std::istream& in,
                                  const ApertureGeoref& georef);
void save_coded_map(const CodedVisibilityMap& map,
                    const std::filesystem::path& path);
CodedVisibilityMap load_coded_map(const std::filesystem::path& path,
                                  const ApertureGeoref& georef);

// Magnitudes scaled so that K maps to 255.
Raster<std::uint8_t> magnitude_image(const CodedVisibilityMap& map);
// Each distinct code word gets a colour from a fixed hash; empty cells are
// black.
Raster<Rgb> code_color_image(const CodedVisibilityMap& map);

}  // namespace rv
