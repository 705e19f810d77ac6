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

#include "rv/visibility.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "rv/error.hpp"
#include "rv/parallel.hpp"

namespace rv {

namespace {

int count_selected(const SelectionVector& selection) {
  return static_cast<int>(
      std::count_if(selection.begin(), selection.end(),
                    [](std::uint8_t v) { return v != 0; }));
}

void require_same_resolution(std::span<const VisibilityMask> masks) {
  for (const VisibilityMask& m : masks) {
    require(m.pixels.width() == masks.front().pixels.width() &&
                m.pixels.height() == masks.front().pixels.height(),
            "masks must share one resolution");
  }
}

}  // namespace

VisibilityMatrix::VisibilityMatrix(int rows, int cols)
    : rows_(rows),
      cols_(cols),
      data_(static_cast<std::size_t>(rows) * cols, 0) {
  require(rows >= 0 && cols >= 0, "matrix dimensions must be non-negative");
}

VisibilityMatrix assemble_matrix(std::span<const VisibilityMask> masks) {
  require(!masks.empty(), "at least one mask is required");
  require_same_resolution(masks);
  const int rows = static_cast<int>(masks.front().pixels.size());
  VisibilityMatrix matrix(rows, static_cast<int>(masks.size()));
  for (std::size_t n = 0; n < masks.size(); ++n) {
    std::span<std::uint8_t> col = matrix.column(static_cast<int>(n));
    std::span<const std::uint8_t> px = masks[n].pixels.values();
    std::transform(px.begin(), px.end(), col.begin(),
                   [](std::uint8_t v) -> std::uint8_t { return v ? 1 : 0; });
  }
  return matrix;
}

IntegralMap integrate_forward(std::span<const VisibilityMask> masks,
                              const SelectionVector& selection) {
  require(selection.size() == masks.size(),
          "selection length must equal the mask count");
  const int z = count_selected(selection);
  require(z >= 1, "selection must include at least one mask");
  require_same_resolution(masks);

  const Raster<std::uint8_t>& first = masks.front().pixels;
  std::vector<int> sums(first.size(), 0);
  for (std::size_t n = 0; n < masks.size(); ++n) {
    if (!selection[n]) continue;
    std::span<const std::uint8_t> px = masks[n].pixels.values();
    for (std::size_t i = 0; i < px.size(); ++i) sums[i] += px[i] ? 1 : 0;
  }
  IntegralMap out{Raster<double>(first.width(), first.height()), z};
  for (std::size_t i = 0; i < sums.size(); ++i) {
    out.values[i] = static_cast<double>(sums[i]) / z;
  }
  return out;
}

IntegralMap integrate_reciprocal_lowres(const VisibilityMatrix& matrix,
                                        const SelectionVector& ground_selection,
                                        int grid_width, int grid_height) {
  require(static_cast<int>(ground_selection.size()) == matrix.rows(),
          "ground selection length must equal the matrix row count");
  require(grid_width >= 1 && grid_height >= 1 &&
              grid_width * grid_height == matrix.cols(),
          "grid shape must match the matrix column count");
  const int z = count_selected(ground_selection);
  require(z >= 1, "ground selection must include at least one pixel");

  IntegralMap out{Raster<double>(grid_width, grid_height), z};
  for (int n = 0; n < matrix.cols(); ++n) {
    std::span<const std::uint8_t> col = matrix.column(n);
    int sum = 0;
    for (int m = 0; m < matrix.rows(); ++m) {
      if (ground_selection[m]) sum += col[m];
    }
    out.values[n] = static_cast<double>(sum) / z;
  }
  return out;
}

Raster<std::uint8_t> downsample_to_grid(const VisibilityMask& bottom_up,
                                        const ApertureSpec& spec,
                                        DownsampleMode mode) {
  spec.validate();
  const Raster<std::uint8_t>& px = bottom_up.pixels;
  require(px.width() == spec.raster_res && px.height() == spec.raster_res,
          "bottom-up mask resolution must match the aperture raster");
  const AreaSpec& e = spec.extent;
  const double cw = e.width_m / spec.raster_res;
  const double ch = e.depth_m / spec.raster_res;
  const double half_x =
      spec.grid_n > 1 ? 0.5 * e.width_m / (spec.grid_n - 1) : 0.5 * e.width_m;
  const double half_y =
      spec.grid_n > 1 ? 0.5 * e.depth_m / (spec.grid_n - 1) : 0.5 * e.depth_m;

  Raster<std::uint8_t> out(spec.grid_n, spec.grid_n);
  for (int gr = 0; gr < spec.grid_n; ++gr) {
    for (int gc = 0; gc < spec.grid_n; ++gc) {
      const Vec3 pos = spec.grid_position(gr, gc);
      if (mode == DownsampleMode::kNearestCell) {
        const PixelIndex cell = aperture_cell_covering(spec, drop(pos));
        out.at(gr, gc) = px.at(cell.row, cell.col) ? 1 : 0;
        continue;
      }
      // Cells whose centres fall within half a grid step of the pose.
      int c0 = static_cast<int>(
          std::ceil((pos.x - half_x - e.origin.x) / cw - 0.5));
      int c1 = static_cast<int>(
          std::floor((pos.x + half_x - e.origin.x) / cw - 0.5));
      int r0 = static_cast<int>(
          std::ceil((e.max_y() - pos.y - half_y) / ch - 0.5));
      int r1 = static_cast<int>(
          std::floor((e.max_y() - pos.y + half_y) / ch - 0.5));
      c0 = std::max(c0, 0);
      r0 = std::max(r0, 0);
      c1 = std::min(c1, px.width() - 1);
      r1 = std::min(r1, px.height() - 1);
      if (c0 > c1 || r0 > r1) {
        const PixelIndex cell = aperture_cell_covering(spec, drop(pos));
        out.at(gr, gc) = px.at(cell.row, cell.col) ? 1 : 0;
        continue;
      }
      int visible = 0, total = 0;
      for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
          visible += px.at(r, c) ? 1 : 0;
          ++total;
        }
      }
      out.at(gr, gc) = 2 * visible >= total ? 1 : 0;
    }
  }
  return out;
}

ReciprocityReport measure_reciprocity(const PointCloud& cloud,
                                      const AreaSpec& area,
                                      const CameraIntrinsics& intr,
                                      const ApertureSpec& spec,
                                      const RenderOptions& render,
                                      const ReciprocityOptions& options) {
  require(options.ground_samples >= 1 && options.pose_samples >= 1,
          "reciprocity check needs ground and pose samples");
  const Pose reference = reference_pose(spec);
  const std::vector<Pose> poses = aperture_poses(spec);
  std::mt19937_64 rng(options.seed);

  std::vector<int> ground;  // reference pixel indices inside the area
  {
    std::uniform_int_distribution<int> pick(0, intr.resolution *
                                                   intr.resolution - 1);
    std::set<int> seen;
    for (int tries = 0; static_cast<int>(ground.size()) < options.ground_samples;
         ++tries) {
      require(tries < 100 * options.ground_samples,
              "reference camera sees too little of the scene area");
      const int m = pick(rng);
      if (seen.count(m)) continue;
      const Vec2 g = ground_hit(reference, intr, m / intr.resolution,
                                m % intr.resolution);
      if (!area.contains(g)) continue;
      seen.insert(m);
      ground.push_back(m);
    }
  }
  std::vector<int> pose_ids(poses.size());
  std::iota(pose_ids.begin(), pose_ids.end(), 0);
  std::shuffle(pose_ids.begin(), pose_ids.end(), rng);
  pose_ids.resize(std::min<std::size_t>(pose_ids.size(), options.pose_samples));

  const int threads =
      options.threads > 0 ? options.threads : default_thread_count();
  std::vector<Raster<std::uint8_t>> reciprocal(ground.size());
  parallel_for(static_cast<int>(ground.size()), threads, [&](int i) {
    const Vec2 g = ground_hit(reference, intr, ground[i] / intr.resolution,
                              ground[i] % intr.resolution);
    reciprocal[i] =
        downsample_to_grid(render_bottom_up_mask(g, spec, cloud, area, render),
                           spec, options.downsample);
  });
  std::vector<ReciprocityReport> per_pose(pose_ids.size());
  parallel_for(static_cast<int>(pose_ids.size()), threads, [&](int j) {
    const Pose& pose = poses[pose_ids[j]];
    const VisibilityMask v =
        render_registered_mask(pose, reference, intr, cloud, area, render);
    for (std::size_t i = 0; i < ground.size(); ++i) {
      const Vec2 g = ground_hit(reference, intr, ground[i] / intr.resolution,
                                ground[i] % intr.resolution);
      if (!pixel_covering(pose, intr, g)) continue;
      ++per_pose[j].pairs;
      if (v.pixels[ground[i]] == reciprocal[i][pose_ids[j]]) {
        ++per_pose[j].agreements;
      }
    }
  });
  ReciprocityReport total;
  for (const ReciprocityReport& r : per_pose) {
    total.pairs += r.pairs;
    total.agreements += r.agreements;
  }
  return total;
}

bool CodedVisibilityMap::valid_batch_bits(int bits) {
  return bits == 8 || bits == 16 || bits == 24 || bits == 32 || bits == 64;
}

CodedVisibilityMap::CodedVisibilityMap(int width, int height, int num_points,
                                       int batch_bits)
    : CodedVisibilityMap(width, height, num_points, batch_bits,
                         ApertureGeoref{AreaSpec{static_cast<double>(width),
                                                 static_cast<double>(height),
                                                 {0.0, 0.0}},
                                        0.0}) {}

CodedVisibilityMap::CodedVisibilityMap(int width, int height, int num_points,
                                       int batch_bits,
                                       const ApertureGeoref& georef)
    : width_(width),
      height_(height),
      num_points_(num_points),
      batch_bits_(batch_bits),
      georef_(georef) {
  require(width >= 1 && height >= 1, "coded map must have at least one cell");
  require(num_points >= 1, "coded map needs K >= 1");
  require(valid_batch_bits(batch_bits),
          "batch width L must be one of 8, 16, 24, 32, 64");
  georef.extent.validate();
  const int batches = (num_points + batch_bits - 1) / batch_bits;
  planes_.assign(batches,
                 std::vector<std::uint64_t>(
                     static_cast<std::size_t>(width) * height, 0));
}

std::uint64_t CodedVisibilityMap::batch_mask(int batch) const {
  const int bits = std::min(batch_bits_, num_points_ - batch * batch_bits_);
  return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
}

void CodedVisibilityMap::set_word(int batch, int cell, std::uint64_t value) {
  require(batch >= 0 && batch < num_batches(), "batch index out of range");
  require(cell >= 0 && cell < cell_count(), "cell index out of range");
  require((value & ~batch_mask(batch)) == 0,
          "code word has bits beyond K or the batch width");
  planes_[batch][cell] = value;
}

void CodedVisibilityMap::set_bit(int cell, int k) {
  require(k >= 0 && k < num_points_, "bit index out of range");
  planes_[k / batch_bits_][cell] |= std::uint64_t{1} << (k % batch_bits_);
}

std::vector<std::uint64_t> CodedVisibilityMap::packed_code(int cell) const {
  std::vector<std::uint64_t> packed((num_points_ + 63) / 64, 0);
  int offset = 0;
  for (const auto& plane : planes_) {
    std::uint64_t w = plane[cell];
    while (w) {
      const int b = std::countr_zero(w);
      const int k = offset + b;
      packed[k / 64] |= std::uint64_t{1} << (k % 64);
      w &= w - 1;
    }
    offset += batch_bits_;
  }
  return packed;
}

int CodedVisibilityMap::popcount(int cell) const {
  int total = 0;
  for (const auto& plane : planes_) total += std::popcount(plane[cell]);
  return total;
}

Vec3 CodedVisibilityMap::cell_center(int cell) const {
  const int row = cell / width_, col = cell % width_;
  const AreaSpec& e = georef_.extent;
  return {e.origin.x + (col + 0.5) * e.width_m / width_,
          e.max_y() - (row + 0.5) * e.depth_m / height_, georef_.altitude_m};
}

CodedVisibilityMap build_coded_map(std::span<const VisibilityMask> masks,
                                   int batch_bits) {
  require(!masks.empty(), "at least one bottom-up mask is required");
  const Raster<std::uint8_t>& first = masks.front().pixels;
  return build_coded_map(
      masks, batch_bits,
      ApertureGeoref{AreaSpec{static_cast<double>(first.width()),
                              static_cast<double>(first.height()),
                              {0.0, 0.0}},
                     0.0});
}

CodedVisibilityMap build_coded_map(std::span<const VisibilityMask> masks,
                                   int batch_bits,
                                   const ApertureGeoref& georef) {
  require(!masks.empty(), "at least one bottom-up mask is required");
  require_same_resolution(masks);
  const Raster<std::uint8_t>& first = masks.front().pixels;
  CodedVisibilityMap map(first.width(), first.height(),
                         static_cast<int>(masks.size()), batch_bits, georef);
  for (int b = 0; b < map.num_batches(); ++b) {
    const int k0 = b * batch_bits;
    const int k1 = std::min(k0 + batch_bits, map.num_points());
    for (int cell = 0; cell < map.cell_count(); ++cell) {
      std::uint64_t word = 0;
      for (int k = k0; k < k1; ++k) {
        if (masks[k].pixels[cell]) word |= std::uint64_t{1} << (k - k0);
      }
      map.set_word(b, cell, word);
    }
  }
  return map;
}

VisibilityMask decode(const CodedVisibilityMap& map, int k) {
  require(k >= 0 && k < map.num_points(), "ground point index out of range");
  VisibilityMask mask;
  mask.pixels = Raster<std::uint8_t>(map.width(), map.height());
  mask.intrinsics.resolution = map.width();
  const int batch = k / map.batch_bits();
  const int shift = k % map.batch_bits();
  std::span<const std::uint64_t> plane = map.plane(batch);
  for (int cell = 0; cell < map.cell_count(); ++cell) {
    mask.pixels[cell] = (plane[cell] >> shift) & 1u;
  }
  return mask;
}

Raster<std::uint16_t> magnitude(const CodedVisibilityMap& map) {
  Raster<std::uint16_t> out(map.width(), map.height());
  for (int cell = 0; cell < map.cell_count(); ++cell) {
    out[cell] = static_cast<std::uint16_t>(map.popcount(cell));
  }
  return out;
}

void write_coded_map(const CodedVisibilityMap& map, std::ostream& out) {
  out << "RVCODE1 " << map.width() << ' ' << map.height() << ' '
      << map.num_points() << ' ' << map.batch_bits() << ' '
      << map.num_batches() << '\n';
  const int bytes = map.batch_bits() / 8;
  std::vector<char> buffer(static_cast<std::size_t>(map.cell_count()) * bytes);
  for (int b = 0; b < map.num_batches(); ++b) {
    std::span<const std::uint64_t> plane = map.plane(b);
    for (int cell = 0; cell < map.cell_count(); ++cell) {
      for (int i = 0; i < bytes; ++i) {
        buffer[static_cast<std::size_t>(cell) * bytes + i] =
            static_cast<char>((plane[cell] >> (8 * i)) & 0xFF);
      }
    }
    out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  }
}

CodedVisibilityMap read_coded_map(std::istream& in,
                                  const ApertureGeoref& georef) {
  std::string header;
  if (!std::getline(in, header)) {
    throw std::runtime_error("coded map file is empty");
  }
  std::istringstream fields(header);
  std::string magic;
  int width = 0, height = 0, k = 0, l = 0, b = 0;
  if (!(fields >> magic >> width >> height >> k >> l >> b) ||
      magic != "RVCODE1") {
    throw std::runtime_error("not an RVCODE1 header: '" + header + "'");
  }
  require(width >= 1 && height >= 1 && k >= 1, "invalid RVCODE1 dimensions");
  require(CodedVisibilityMap::valid_batch_bits(l), "invalid RVCODE1 word width");
  require(b == (k + l - 1) / l, "RVCODE1 batch count does not match K and L");

  CodedVisibilityMap map(width, height, k, l, georef);
  const int bytes = l / 8;
  std::vector<unsigned char> buffer(static_cast<std::size_t>(width) * height *
                                    bytes);
  for (int batch = 0; batch < b; ++batch) {
    if (!in.read(reinterpret_cast<char*>(buffer.data()),
                 static_cast<std::streamsize>(buffer.size()))) {
      throw std::runtime_error("truncated RVCODE1 plane " + std::to_string(batch));
    }
    for (int cell = 0; cell < map.cell_count(); ++cell) {
      std::uint64_t word = 0;
      for (int i = bytes - 1; i >= 0; --i) {
        word = (word << 8) |
               buffer[static_cast<std::size_t>(cell) * bytes + i];
      }
      map.set_word(batch, cell, word);
    }
  }
  return map;
}

void save_coded_map(const CodedVisibilityMap& map,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_coded_map(map, out);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

CodedVisibilityMap load_coded_map(const std::filesystem::path& path,
                                  const ApertureGeoref& georef) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open coded map " + path.string());
  return read_coded_map(in, georef);
}

Raster<std::uint8_t> magnitude_image(const CodedVisibilityMap& map) {
  Raster<std::uint8_t> out(map.width(), map.height());
  for (int cell = 0; cell < map.cell_count(); ++cell) {
    out[cell] = static_cast<std::uint8_t>(
        std::lround(255.0 * map.popcount(cell) / map.num_points()));
  }
  return out;
}

Raster<Rgb> code_color_image(const CodedVisibilityMap& map) {
  Raster<Rgb> out(map.width(), map.height(), Rgb{0, 0, 0});
  for (int cell = 0; cell < map.cell_count(); ++cell) {
    std::uint64_t h = 0;
    bool any = false;
    for (int b = 0; b < map.num_batches(); ++b) {
      const std::uint64_t w = map.word(b, cell);
      any = any || w != 0;
      h = split_seed(h ^ w, static_cast<std::uint64_t>(b));
    }
    if (!any) continue;
    // Keep every channel above 48 so non-empty codes never read as black.
    out[cell] = Rgb{static_cast<std::uint8_t>(48 + (h & 0xFF) % 208),
                    static_cast<std::uint8_t>(48 + ((h >> 8) & 0xFF) % 208),
                    static_cast<std::uint8_t>(48 + ((h >> 16) & 0xFF) % 208)};
  }
  return out;
}

}  // namespace rv
