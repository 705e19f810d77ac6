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

#include "rv/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "rv/error.hpp"
#include "rv/parallel.hpp"
#include "rv/text.hpp"

namespace rv {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  T value{};
  const char* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(t.data(), end, value);
  if (t.empty() || ec != std::errc() || ptr != end) {
    throw ValidationError("config key " + key + ": cannot parse '" + text +
                          "' as a number");
  }
  return value;
}

// "x y; x y; ..." with spaces or commas inside each pair.
std::vector<Vec2> parse_points(const std::string& key,
                               const std::string& text) {
  std::vector<Vec2> out;
  std::stringstream pairs(text);
  std::string pair;
  while (std::getline(pairs, pair, ';')) {
    std::replace(pair.begin(), pair.end(), ',', ' ');
    if (trim(pair).empty()) continue;
    std::istringstream fields(pair);
    std::string x, y, extra;
    if (!(fields >> x >> y) || (fields >> extra)) {
      throw ValidationError("config key " + key + ": expected 'x y' in '" +
                            pair + "'");
    }
    out.push_back({parse_number<double>(key, x), parse_number<double>(key, y)});
  }
  return out;
}

std::string format_points(const std::vector<Vec2>& points) {
  std::string out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i) out += "; ";
    out += format_number(points[i].x) + ' ' + format_number(points[i].y);
  }
  return out;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(c));
  return s;
}

RoiType parse_roi_type(const std::string& text) {
  const std::string t = lower(trim(text));
  if (t == "rect") return RoiType::kRect;
  if (t == "path") return RoiType::kPath;
  if (t == "points") return RoiType::kPoints;
  throw ValidationError("roi.type must be rect, path or points, not '" + text +
                        "'");
}

std::string to_string(RoiType type) {
  switch (type) {
    case RoiType::kRect: return "rect";
    case RoiType::kPath: return "path";
    case RoiType::kPoints: return "points";
  }
  return "";
}

struct Key {
  const char* section;
  const char* name;
  std::function<void(RunConfig&, const std::string&)> set;
  // Empty result means the key is omitted from the resolved file.
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Key number_key(const char* section, const char* name, T RunConfig::*field) {
  const std::string full = std::string(section) + "." + name;
  return {section, name,
          [field, full](RunConfig& c, const std::string& v) {
            c.*field = parse_number<T>(full, v);
          },
          [field](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_number(c.*field);
            } else {
              return std::to_string(c.*field);
            }
          }};
}

// Same, for a member of a nested struct.
template <typename S, typename T>
Key nested_key(const char* section, const char* name, S RunConfig::*outer,
               T S::*field) {
  const std::string full = std::string(section) + "." + name;
  return {section, name,
          [outer, field, full](RunConfig& c, const std::string& v) {
            (c.*outer).*field = parse_number<T>(full, v);
          },
          [outer, field](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_number((c.*outer).*field);
            } else {
              return std::to_string((c.*outer).*field);
            }
          }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    k.push_back(number_key("run", "seed", &RunConfig::seed));

    k.push_back(nested_key("scene", "width_m", &RunConfig::area,
                           &AreaSpec::width_m));
    k.push_back(nested_key("scene", "depth_m", &RunConfig::area,
                           &AreaSpec::depth_m));
    k.push_back({"scene", "origin_x",
                 [](RunConfig& c, const std::string& v) {
                   c.area.origin.x = parse_number<double>("scene.origin_x", v);
                 },
                 [](const RunConfig& c) {
                   return format_number(c.area.origin.x);
                 }});
    k.push_back({"scene", "origin_y",
                 [](RunConfig& c, const std::string& v) {
                   c.area.origin.y = parse_number<double>("scene.origin_y", v);
                 },
                 [](const RunConfig& c) {
                   return format_number(c.area.origin.y);
                 }});
    k.push_back(nested_key("scene", "density_per_ha", &RunConfig::forest,
                           &ForestParams::density_per_ha));
    k.push_back({"scene", "species",
                 [](RunConfig& c, const std::string& v) {
                   c.forest.species = parse_species(trim(v));
                 },
                 [](const RunConfig& c) { return to_string(c.forest.species); }});
    k.push_back(nested_key("scene", "mean_height_m", &RunConfig::forest,
                           &ForestParams::mean_height_m));
    k.push_back(nested_key("scene", "height_stddev_m", &RunConfig::forest,
                           &ForestParams::height_stddev_m));
    k.push_back(nested_key("scene", "crown_radius_m", &RunConfig::forest,
                           &ForestParams::crown_radius_m));
    k.push_back(nested_key("scene", "points_per_tree", &RunConfig::forest,
                           &ForestParams::points_per_tree));
    k.push_back({"scene", "cloud",
                 [](RunConfig& c, const std::string& v) {
                   const std::string t = trim(v);
                   if (t.empty()) {
                     c.cloud_path.reset();
                   } else {
                     c.cloud_path = t;
                   }
                 },
                 [](const RunConfig& c) {
                   return c.cloud_path ? c.cloud_path->string() : "";
                 }});

    k.push_back(nested_key("camera", "fov_deg", &RunConfig::camera,
                           &CameraIntrinsics::fov_deg));
    k.push_back(nested_key("camera", "resolution", &RunConfig::camera,
                           &CameraIntrinsics::resolution));

    k.push_back(nested_key("aperture", "altitude_m", &RunConfig::aperture,
                           &ApertureSpec::altitude_m));
    k.push_back({"aperture", "width_m",
                 [](RunConfig& c, const std::string& v) {
                   c.aperture.extent.width_m =
                       parse_number<double>("aperture.width_m", v);
                 },
                 [](const RunConfig& c) {
                   return format_number(c.aperture.extent.width_m);
                 }});
    k.push_back({"aperture", "depth_m",
                 [](RunConfig& c, const std::string& v) {
                   c.aperture.extent.depth_m =
                       parse_number<double>("aperture.depth_m", v);
                 },
                 [](const RunConfig& c) {
                   return format_number(c.aperture.extent.depth_m);
                 }});
    k.push_back({"aperture", "origin_x",
                 [](RunConfig& c, const std::string& v) {
                   c.aperture.extent.origin.x =
                       parse_number<double>("aperture.origin_x", v);
                 },
                 [](const RunConfig& c) {
                   return format_number(c.aperture.extent.origin.x);
                 }});
    k.push_back({"aperture", "origin_y",
                 [](RunConfig& c, const std::string& v) {
                   c.aperture.extent.origin.y =
                       parse_number<double>("aperture.origin_y", v);
                 },
                 [](const RunConfig& c) {
                   return format_number(c.aperture.extent.origin.y);
                 }});
    k.push_back(nested_key("aperture", "grid_n", &RunConfig::aperture,
                           &ApertureSpec::grid_n));
    k.push_back(nested_key("aperture", "raster_res", &RunConfig::aperture,
                           &ApertureSpec::raster_res));

    k.push_back(nested_key("render", "ground_threshold_m", &RunConfig::render,
                           &RenderOptions::ground_threshold_m));
    k.push_back(nested_key("render", "occlusion_radius_m", &RunConfig::render,
                           &RenderOptions::occlusion_radius_m));
    k.push_back(nested_key("render", "splat_radius_px", &RunConfig::render,
                           &RenderOptions::splat_radius_px));

    k.push_back({"roi", "type",
                 [](RunConfig& c, const std::string& v) {
                   c.roi.type = parse_roi_type(v);
                 },
                 [](const RunConfig& c) { return to_string(c.roi.type); }});
    k.push_back(nested_key("roi", "rows", &RunConfig::roi, &RoiSpec::rows));
    k.push_back(nested_key("roi", "cols", &RunConfig::roi, &RoiSpec::cols));
    k.push_back(nested_key("roi", "spacing_m", &RunConfig::roi,
                           &RoiSpec::spacing_m));
    k.push_back({"roi", "center",
                 [](RunConfig& c, const std::string& v) {
                   const std::vector<Vec2> p = parse_points("roi.center", v);
                   require(p.size() == 1, "roi.center takes one 'x y' pair");
                   c.roi.center = p.front();
                 },
                 [](const RunConfig& c) {
                   return format_points(
                       {c.roi.center.value_or(c.area.center())});
                 }});
    k.push_back({"roi", "path",
                 [](RunConfig& c, const std::string& v) {
                   c.roi.path = parse_points("roi.path", v);
                 },
                 [](const RunConfig& c) { return format_points(c.roi.path); }});
    k.push_back(nested_key("roi", "n_points", &RunConfig::roi,
                           &RoiSpec::n_points));
    k.push_back({"roi", "points",
                 [](RunConfig& c, const std::string& v) {
                   c.roi.points = parse_points("roi.points", v);
                 },
                 [](const RunConfig& c) {
                   return format_points(c.roi.points);
                 }});

    k.push_back(number_key("coding", "batch_bits", &RunConfig::batch_bits));

    k.push_back(nested_key("greedy", "variance_threshold_percent",
                           &RunConfig::greedy,
                           &GreedyConfig::variance_threshold_percent));
    k.push_back(nested_key("greedy", "restarts", &RunConfig::greedy,
                           &GreedyConfig::restarts));
    k.push_back(nested_key("greedy", "max_iterations", &RunConfig::greedy,
                           &GreedyConfig::max_iterations));
    k.push_back(nested_key("greedy", "empty_c_patience", &RunConfig::greedy,
                           &GreedyConfig::empty_c_patience));
    k.push_back({"greedy", "norm",
                 [](RunConfig& c, const std::string& v) {
                   c.greedy.norm = parse_norm(trim(v));
                 },
                 [](const RunConfig& c) { return to_string(c.greedy.norm); }});
    k.push_back({"greedy", "selection",
                 [](RunConfig& c, const std::string& v) {
                   c.greedy.selection = parse_selection_rule(trim(v));
                 },
                 [](const RunConfig& c) {
                   return to_string(c.greedy.selection);
                 }});

    k.push_back(number_key("plan", "exhaustive_budget",
                           &RunConfig::exhaustive_budget));
    k.push_back(number_key("plan", "reconstruction_res",
                           &RunConfig::reconstruction_res));

    k.push_back(number_key("route", "drones", &RunConfig::drones));
    k.push_back({"route", "start",
                 [](RunConfig& c, const std::string& v) {
                   std::string t = v;
                   std::replace(t.begin(), t.end(), ',', ' ');
                   std::istringstream f(t);
                   std::string x, y, z, extra;
                   require(static_cast<bool>(f >> x >> y >> z) && !(f >> extra),
                           "route.start takes 'x y z'");
                   c.route_start = Vec3{parse_number<double>("route.start", x),
                                        parse_number<double>("route.start", y),
                                        parse_number<double>("route.start", z)};
                 },
                 [](const RunConfig& c) {
                   const Vec3 s = c.start_position();
                   return format_number(s.x) + ' ' + format_number(s.y) + ' ' +
                          format_number(s.z);
                 }});

    k.push_back(nested_key("verify", "symmetry_pairs", &RunConfig::verify,
                           &VerifyConfig::symmetry_pairs));
    k.push_back(nested_key("verify", "ground_samples", &RunConfig::verify,
                           &VerifyConfig::ground_samples));
    k.push_back(nested_key("verify", "pose_samples", &RunConfig::verify,
                           &VerifyConfig::pose_samples));
    k.push_back(nested_key("verify", "min_pairs", &RunConfig::verify,
                           &VerifyConfig::min_pairs));
    k.push_back(nested_key("verify", "agreement_threshold_percent",
                           &RunConfig::verify,
                           &VerifyConfig::agreement_threshold_percent));
    k.push_back(nested_key("verify", "roundtrip_instances", &RunConfig::verify,
                           &VerifyConfig::roundtrip_instances));
    k.push_back(nested_key("verify", "monotonicity_maps", &RunConfig::verify,
                           &VerifyConfig::monotonicity_maps));

    k.push_back({"output", "cloud_format",
                 [](RunConfig& c, const std::string& v) {
                   const std::string t = lower(trim(v));
                   require(t == "ply" || t == "xyz",
                           "output.cloud_format must be ply or xyz");
                   c.cloud_format = t;
                 },
                 [](const RunConfig& c) { return c.cloud_format; }});
    return k;
  }();
  return table;
}

}  // namespace

GroundPoints RunConfig::ground_points() const {
  GroundPoints g;
  switch (roi.type) {
    case RoiType::kRect:
      g = make_rect_roi(area, roi.rows, roi.cols, roi.spacing_m,
                        roi.center.value_or(area.center()));
      break;
    case RoiType::kPath:
      require(roi.path.size() >= 2, "roi.path needs at least two vertices");
      g = make_path_roi(roi.path, roi.n_points, area);
      break;
    case RoiType::kPoints:
      g.points = roi.points;
      break;
  }
  g.validate(area);
  return g;
}

ApertureGeoref RunConfig::georef() const {
  return {aperture.extent, aperture.altitude_m};
}

Vec3 RunConfig::start_position() const {
  return route_start.value_or(
      lift(aperture.extent.center(), aperture.altitude_m));
}

std::filesystem::path RunConfig::cloud_file() const {
  return out_dir / ("forest." + cloud_format);
}

std::uint64_t RunConfig::forest_seed() const { return split_seed(seed, 1); }
std::uint64_t RunConfig::greedy_seed() const { return split_seed(seed, 2); }
std::uint64_t RunConfig::verify_seed() const { return split_seed(seed, 3); }

void RunConfig::validate() const {
  area.validate();
  forest.validate();
  camera.validate();
  aperture.validate();
  render.validate();
  greedy.validate();
  require(CodedVisibilityMap::valid_batch_bits(batch_bits),
          "coding.batch_bits must be one of 8, 16, 24, 32, 64");
  require(exhaustive_budget >= 0, "plan.exhaustive_budget must be >= 0");
  require(reconstruction_res >= 1, "plan.reconstruction_res must be >= 1");
  require(drones >= 1, "route.drones must be >= 1");
  require(threads >= 0, "threads must be >= 0");
  require(verify.symmetry_pairs >= 0 && verify.ground_samples >= 1 &&
              verify.pose_samples >= 1 && verify.min_pairs >= 0 &&
              verify.roundtrip_instances >= 0 &&
              verify.monotonicity_maps >= 0,
          "verify counts must be non-negative");
}

RunConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }

  RunConfig config;
  std::set<std::string> seen;
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) {
      throw ValidationError("config key '" + section +
                            "' must sit inside a [section]");
    }
    if (std::none_of(keys().begin(), keys().end(),
                     [&](const Key& k) { return section == k.section; })) {
      throw ValidationError("unknown config section [" + section + "]");
    }
    for (const auto& [name, value] : body) {
      const auto it = std::find_if(keys().begin(), keys().end(),
                                   [&](const Key& k) {
                                     return section == k.section &&
                                            name == k.name;
                                   });
      if (it == keys().end()) {
        throw ValidationError("unknown config key [" + section + "] " + name);
      }
      it->set(config, value.data());
      seen.insert(section + "." + name);
    }
  }
  const bool extent_set =
      seen.count("aperture.width_m") || seen.count("aperture.depth_m") ||
      seen.count("aperture.origin_x") || seen.count("aperture.origin_y");
  if (!extent_set) config.aperture.extent = config.area;
  config.validate();
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  return parse_config(in);
}

void write_config(const RunConfig& config, std::ostream& out) {
  std::string section;
  for (const Key& k : keys()) {
    const std::string value = k.get(config);
    if (value.empty()) continue;
    if (section != k.section) {
      if (!section.empty()) out << '\n';
      section = k.section;
      out << '[' << section << "]\n";
    }
    out << k.name << " = " << value << '\n';
  }
}

}  // namespace rv
