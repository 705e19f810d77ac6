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

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "rv/raster.hpp"

namespace rv {

using Rgb = std::array<std::uint8_t, 3>;

// P5, maxval 255.
void write_pgm(const Raster<std::uint8_t>& image,
               const std::filesystem::path& path);
Raster<std::uint8_t> read_pgm(const std::filesystem::path& path);

// P6, maxval 255.
void write_ppm(const Raster<Rgb>& image, const std::filesystem::path& path);

}  // namespace rv
