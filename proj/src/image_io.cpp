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

#include "rv/image_io.hpp"

#include <fstream>
#include <stdexcept>
#include <string>

namespace rv {

void write_pgm(const Raster<std::uint8_t>& image,
               const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.values().data()),
            static_cast<std::streamsize>(image.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Raster<std::uint8_t> read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string magic;
  int width = 0, height = 0, maxval = 0;
  in >> magic >> width >> height >> maxval;
  if (magic != "P5" || width <= 0 || height <= 0 || maxval != 255) {
    throw std::runtime_error(path.string() + " is not an 8-bit binary PGM");
  }
  in.get();
  Raster<std::uint8_t> image(width, height);
  in.read(reinterpret_cast<char*>(image.values().data()),
          static_cast<std::streamsize>(image.size()));
  if (!in) throw std::runtime_error("truncated PGM " + path.string());
  return image;
}

void write_ppm(const Raster<Rgb>& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P6\n" << image.width() << ' ' << image.height() << "\n255\n";
  for (const Rgb& px : image.values()) {
    out.write(reinterpret_cast<const char*>(px.data()), 3);
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace rv
