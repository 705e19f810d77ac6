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

#include "rv/scene.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "rv/error.hpp"
#include "rv/parallel.hpp"

namespace rv {

namespace {

constexpr double kTrunkRadius = 0.15;
constexpr double kCrownCenterFraction = 0.7;
constexpr double kCrownVerticalFraction = 0.3;
constexpr double kMinTreeSpacing = 1.0;
constexpr int kMaxPlacementRetries = 1000;
constexpr double kMinTreeHeight = 5.0;

// Knud Thomsen's approximation, relative error below 1.1%. Only used to split
// the per-tree point budget between trunk and crown.
double ellipsoid_area(double a, double b, double c) {
  constexpr double p = 1.6075;
  const double ap = std::pow(a, p), bp = std::pow(b, p), cp = std::pow(c, p);
  return 4.0 * std::numbers::pi *
         std::pow((ap * bp + ap * cp + bp * cp) / 3.0, 1.0 / p);
}

// Uniform-by-area sample on the ellipsoid surface: map a uniform sphere
// direction through the axes and accept proportionally to the local area
// stretch.
Vec3 sample_ellipsoid(std::mt19937_64& rng, double a, double b, double c) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double max_stretch = std::max({b * c, a * c, a * b});
  while (true) {
    Vec3 u{gauss(rng), gauss(rng), gauss(rng)};
    const double len = norm(u);
    if (len < 1e-12) continue;
    u = (1.0 / len) * u;
    const double stretch = std::sqrt((b * c * u.x) * (b * c * u.x) +
                                     (a * c * u.y) * (a * c * u.y) +
                                     (a * b * u.z) * (a * b * u.z));
    if (unit(rng) * max_stretch <= stretch) return {a * u.x, b * u.y, c * u.z};
  }
}

void append_tree(const Tree& tree, const ForestParams& params,
                 std::uint64_t seed, PointCloud& cloud) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double trunk_height = kCrownCenterFraction * tree.height_m;
  const double crown_a = params.crown_radius_m;
  const double crown_c = kCrownVerticalFraction * tree.height_m;
  const double trunk_area = 2.0 * std::numbers::pi * kTrunkRadius * trunk_height;
  const double crown_area = ellipsoid_area(crown_a, crown_a, crown_c);
  const int trunk_points = static_cast<int>(std::lround(
      params.points_per_tree * trunk_area / (trunk_area + crown_area)));
  const int crown_points = params.points_per_tree - trunk_points;

  for (int i = 0; i < trunk_points; ++i) {
    const double phi = 2.0 * std::numbers::pi * unit(rng);
    // 1 - U lies in (0, 1], keeping trunk samples strictly above ground.
    const double z = (1.0 - unit(rng)) * trunk_height;
    cloud.add({tree.base.x + kTrunkRadius * std::cos(phi),
               tree.base.y + kTrunkRadius * std::sin(phi), z},
              PointLabel::kVegetation);
  }
  const Vec3 crown_center = lift(tree.base, kCrownCenterFraction * tree.height_m);
  for (int i = 0; i < crown_points; ++i) {
    cloud.add(crown_center + sample_ellipsoid(rng, crown_a, crown_a, crown_c),
              PointLabel::kVegetation);
  }
}

void append_number(std::string& line, double value) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  line.append(buf, end);
}

void put_u32_le(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xFF),
                         static_cast<char>((v >> 8) & 0xFF),
                         static_cast<char>((v >> 16) & 0xFF),
                         static_cast<char>((v >> 24) & 0xFF)};
  out.write(bytes, 4);
}

std::uint64_t get_le(const unsigned char* bytes, int n) {
  std::uint64_t v = 0;
  for (int i = n - 1; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

PointLabel label_from_int(long value) {
  if (value == 0) return PointLabel::kVegetation;
  if (value == 1) return PointLabel::kGround;
  throw std::runtime_error("point label must be 0 or 1, got " +
                           std::to_string(value));
}

std::string lowercase_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

void AreaSpec::validate() const {
  require(std::isfinite(width_m) && width_m > 0.0, "area width must be > 0");
  require(std::isfinite(depth_m) && depth_m > 0.0, "area depth must be > 0");
  require(std::isfinite(origin.x) && std::isfinite(origin.y),
          "area origin must be finite");
}

std::string to_string(SpeciesPreset species) {
  switch (species) {
    case SpeciesPreset::kBirch:
      return "birch";
  }
  return "unknown";
}

SpeciesPreset parse_species(const std::string& name) {
  if (name == "birch") return SpeciesPreset::kBirch;
  throw ValidationError("unknown species preset '" + name + "'");
}

void ForestParams::validate() const {
  require(std::isfinite(density_per_ha) && density_per_ha >= 0.0,
          "forest density must be >= 0");
  require(std::isfinite(mean_height_m) && mean_height_m > 0.0,
          "mean tree height must be > 0");
  require(std::isfinite(height_stddev_m) && height_stddev_m >= 0.0,
          "tree height stddev must be >= 0");
  require(std::isfinite(crown_radius_m) && crown_radius_m > 0.0,
          "crown radius must be > 0");
  require(points_per_tree >= 1, "points_per_tree must be >= 1");
}

std::size_t PointCloud::vegetation_count() const {
  return static_cast<std::size_t>(
      std::count(labels.begin(), labels.end(), PointLabel::kVegetation));
}

void PointCloud::validate() const {
  require(points.size() == labels.size(), "point/label count mismatch");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec3& p = points[i];
    require(std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z),
            "point " + std::to_string(i) + " is not finite");
    if (labels[i] == PointLabel::kVegetation) {
      require(p.z > 0.0, "vegetation point " + std::to_string(i) +
                             " must lie above the ground");
    } else {
      require(p.z == 0.0,
              "ground point " + std::to_string(i) + " must have z = 0");
    }
  }
}

void GroundPoints::validate(const AreaSpec& area) const {
  require(!points.empty(), "at least one ground point is required");
  std::set<std::pair<double, double>> seen;
  for (const Vec2& p : points) {
    require(area.contains(p), "ground point outside the scene area");
    require(seen.emplace(p.x, p.y).second, "duplicate ground point");
  }
}

int tree_count(const AreaSpec& area, const ForestParams& params) {
  return static_cast<int>(std::lround(params.density_per_ha * area.hectares()));
}

std::vector<Tree> plant_trees(const AreaSpec& area,
                              const ForestParams& params) {
  area.validate();
  params.validate();
  const int count = tree_count(area, params);
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> ux(area.origin.x, area.max_x());
  std::uniform_real_distribution<double> uy(area.origin.y, area.max_y());
  std::normal_distribution<double> height(params.mean_height_m,
                                          params.height_stddev_m);
  const double min_height = std::min(kMinTreeHeight, 2.0 * params.mean_height_m);
  const double max_height = 2.0 * params.mean_height_m;

  std::vector<Tree> trees;
  trees.reserve(count);
  for (int i = 0; i < count; ++i) {
    Vec2 base;
    for (int attempt = 0; attempt <= kMaxPlacementRetries; ++attempt) {
      base = {ux(rng), uy(rng)};
      const bool clear = std::none_of(
          trees.begin(), trees.end(), [&](const Tree& other) {
            return norm(other.base - base) < kMinTreeSpacing;
          });
      if (clear) break;
    }
    const double h = params.height_stddev_m > 0.0 ? height(rng)
                                                  : params.mean_height_m;
    trees.push_back({base, std::clamp(h, min_height, max_height)});
  }
  return trees;
}

PointCloud generate_forest(const AreaSpec& area, const ForestParams& params) {
  const std::vector<Tree> trees = plant_trees(area, params);
  PointCloud cloud;
  cloud.points.reserve(trees.size() * params.points_per_tree);
  cloud.labels.reserve(trees.size() * params.points_per_tree);
  for (std::size_t i = 0; i < trees.size(); ++i) {
    append_tree(trees[i], params, split_seed(params.seed, i), cloud);
  }
  return cloud;
}

GroundPoints make_rect_roi(const AreaSpec& area, int rows, int cols,
                           double spacing_m, Vec2 center) {
  area.validate();
  require(rows >= 1 && cols >= 1, "ROI needs at least one row and column");
  require(std::isfinite(spacing_m) && spacing_m > 0.0,
          "ROI spacing must be > 0");
  GroundPoints roi;
  roi.points.reserve(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const Vec2 p{center.x + (c - 0.5 * (cols - 1)) * spacing_m,
                   center.y + (0.5 * (rows - 1) - r) * spacing_m};
      require(area.contains(p), "rectangular ROI extends outside the area");
      roi.points.push_back(p);
    }
  }
  return roi;
}

GroundPoints make_path_roi(std::span<const Vec2> polyline, int n_points,
                           const std::optional<AreaSpec>& area) {
  require(polyline.size() >= 2, "path ROI needs at least two vertices");
  require(n_points >= 2, "path ROI needs at least two points");
  if (area) {
    area->validate();
    for (const Vec2& v : polyline) {
      require(area->contains(v), "path vertex outside the area");
    }
  }
  std::vector<double> cumulative(polyline.size(), 0.0);
  for (std::size_t i = 1; i < polyline.size(); ++i) {
    cumulative[i] = cumulative[i - 1] + norm(polyline[i] - polyline[i - 1]);
  }
  const double total = cumulative.back();
  require(total > 0.0, "path ROI polyline has zero length");

  GroundPoints roi;
  roi.points.reserve(n_points);
  std::size_t seg = 1;
  for (int i = 0; i < n_points; ++i) {
    if (i == n_points - 1) {
      roi.points.push_back(polyline.back());
      break;
    }
    const double s = total * i / (n_points - 1);
    while (seg + 1 < polyline.size() && cumulative[seg] < s) ++seg;
    const double len = cumulative[seg] - cumulative[seg - 1];
    const double t = len > 0.0 ? (s - cumulative[seg - 1]) / len : 0.0;
    roi.points.push_back(polyline[seg - 1] +
                         t * (polyline[seg] - polyline[seg - 1]));
  }
  return roi;
}

void write_xyz(const PointCloud& cloud, std::ostream& out) {
  std::string line;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    line.clear();
    append_number(line, cloud.points[i].x);
    line += ' ';
    append_number(line, cloud.points[i].y);
    line += ' ';
    append_number(line, cloud.points[i].z);
    line += ' ';
    line += std::to_string(static_cast<int>(cloud.labels[i]));
    line += '\n';
    out << line;
  }
}

PointCloud read_xyz(std::istream& in) {
  PointCloud cloud;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    Vec3 p;
    if (!(fields >> p.x >> p.y >> p.z)) {
      throw std::runtime_error("malformed XYZ line " + std::to_string(line_no));
    }
    long label = -1;
    if (fields >> label) {
      cloud.add(p, label_from_int(label));
    } else if (p.z == 0.0) {
      cloud.add(p, PointLabel::kGround);
    } else {
      cloud.add(p, PointLabel::kVegetation);
    }
  }
  cloud.validate();
  return cloud;
}

void write_ply(const PointCloud& cloud, std::ostream& out) {
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << cloud.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property uchar label\nend_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    put_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(p.x)));
    put_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(p.y)));
    put_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(p.z)));
    out.put(static_cast<char>(cloud.labels[i]));
  }
}

PointCloud read_ply(std::istream& in) {
  struct Property {
    std::string name;
    std::string type;
    int bytes;
  };
  auto type_size = [](const std::string& type) {
    if (type == "char" || type == "uchar" || type == "int8" || type == "uint8")
      return 1;
    if (type == "short" || type == "ushort" || type == "int16" ||
        type == "uint16")
      return 2;
    if (type == "int" || type == "uint" || type == "float" ||
        type == "int32" || type == "uint32" || type == "float32")
      return 4;
    if (type == "double" || type == "float64") return 8;
    throw std::runtime_error("unsupported PLY property type '" + type + "'");
  };

  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) {
    throw std::runtime_error("not a PLY file");
  }
  std::size_t vertex_count = 0;
  bool in_vertex = false, seen_vertex = false;
  std::vector<Property> props;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream words(line);
    std::string key;
    words >> key;
    if (key == "end_header") break;
    if (key == "format") {
      std::string format;
      words >> format;
      if (format != "binary_little_endian") {
        throw std::runtime_error("only binary_little_endian PLY is supported");
      }
    } else if (key == "element") {
      std::string name;
      std::size_t count = 0;
      words >> name >> count;
      in_vertex = name == "vertex";
      if (in_vertex) {
        vertex_count = count;
        seen_vertex = true;
      } else if (!seen_vertex) {
        throw std::runtime_error("PLY vertex element must come first");
      }
    } else if (key == "property" && in_vertex) {
      std::string type, name;
      words >> type >> name;
      if (type == "list") {
        throw std::runtime_error("list properties on vertices not supported");
      }
      props.push_back({name, type, type_size(type)});
    }
  }
  if (!seen_vertex) throw std::runtime_error("PLY has no vertex element");

  int stride = 0;
  for (const Property& p : props) stride += p.bytes;
  std::vector<unsigned char> record(stride);
  PointCloud cloud;
  cloud.points.reserve(vertex_count);
  cloud.labels.reserve(vertex_count);
  for (std::size_t v = 0; v < vertex_count; ++v) {
    if (!in.read(reinterpret_cast<char*>(record.data()), stride)) {
      throw std::runtime_error("truncated PLY vertex data");
    }
    Vec3 p;
    std::optional<PointLabel> label;
    int offset = 0;
    for (const Property& prop : props) {
      const unsigned char* bytes = record.data() + offset;
      offset += prop.bytes;
      double value = 0.0;
      if (prop.type == "float" || prop.type == "float32") {
        value = std::bit_cast<float>(
            static_cast<std::uint32_t>(get_le(bytes, 4)));
      } else if (prop.type == "double" || prop.type == "float64") {
        value = std::bit_cast<double>(get_le(bytes, 8));
      } else {
        value = static_cast<double>(get_le(bytes, prop.bytes));
      }
      if (prop.name == "x") p.x = value;
      else if (prop.name == "y") p.y = value;
      else if (prop.name == "z") p.z = value;
      else if (prop.name == "label") label = label_from_int(std::lround(value));
    }
    if (!label) {
      label = p.z == 0.0 ? PointLabel::kGround : PointLabel::kVegetation;
    }
    cloud.add(p, *label);
  }
  cloud.validate();
  return cloud;
}

void save_point_cloud(const PointCloud& cloud,
                      const std::filesystem::path& path) {
  const std::string ext = lowercase_extension(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  if (ext == ".ply") {
    write_ply(cloud, out);
  } else {
    write_xyz(cloud, out);
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

PointCloud load_point_cloud(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open point cloud " + path.string());
  return lowercase_extension(path) == ".ply" ? read_ply(in) : read_xyz(in);
}

}  // namespace rv
