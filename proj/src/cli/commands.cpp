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

#include "rv/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "rv/config.hpp"
#include "rv/error.hpp"
#include "rv/image_io.hpp"
#include "rv/parallel.hpp"
#include "rv/projection.hpp"
#include "rv/route.hpp"
#include "rv/sampler.hpp"
#include "rv/scene.hpp"
#include "rv/text.hpp"
#include "rv/visibility.hpp"

namespace rv {

namespace {

struct CliOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  std::string map;
  std::string samples;
  std::optional<int> drones;
};

RunConfig resolve(const CliOptions& opts) {
  RunConfig config;
  if (!opts.config.empty()) {
    config = load_config(opts.config);
  } else {
    std::istringstream empty;
    config = parse_config(empty);
  }
  if (opts.seed) config.seed = *opts.seed;
  if (opts.out) config.out_dir = *opts.out;
  if (opts.threads) config.threads = *opts.threads;
  if (opts.drones) config.drones = *opts.drones;
  config.validate();
  return config;
}

int thread_count(const RunConfig& config) {
  return config.threads > 0 ? config.threads : default_thread_count();
}

void prepare_output(const RunConfig& config) {
  std::filesystem::create_directories(config.out_dir);
  std::ofstream echo(config.out_dir / "config.resolved.ini");
  if (!echo) {
    throw std::runtime_error("cannot write to " + config.out_dir.string());
  }
  write_config(config, echo);
}

template <typename Writer>
void write_text(const std::filesystem::path& path, Writer&& writer) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  writer(out);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

PointCloud make_cloud(const RunConfig& config) {
  ForestParams params = config.forest;
  params.seed = config.forest_seed();
  return generate_forest(config.area, params);
}

PointCloud obtain_cloud(const RunConfig& config) {
  if (!config.cloud_path) return make_cloud(config);
  if (!std::filesystem::exists(*config.cloud_path)) {
    throw ValidationError("point cloud " + config.cloud_path->string() +
                          " does not exist");
  }
  PointCloud cloud = load_point_cloud(*config.cloud_path);
  cloud.validate();
  return cloud;
}

int cmd_forest(const RunConfig& config, std::ostream& out) {
  ForestParams params = config.forest;
  params.seed = config.forest_seed();
  const PointCloud cloud = generate_forest(config.area, params);
  save_point_cloud(cloud, config.cloud_file());
  out << "trees " << tree_count(config.area, params) << '\n'
      << "points " << cloud.size() << '\n'
      << "wrote " << config.cloud_file().string() << '\n';
  return 0;
}

int cmd_rvmap(const RunConfig& config, std::ostream& out) {
  const GroundPoints ground = config.ground_points();
  const PointCloud cloud = obtain_cloud(config);
  std::vector<VisibilityMask> masks(ground.size());
  parallel_for(ground.size(), thread_count(config), [&](int k) {
    masks[k] = render_bottom_up_mask(ground.points[k], config.aperture, cloud,
                                     config.area, config.render);
  });
  const CodedVisibilityMap map =
      build_coded_map(masks, config.batch_bits, config.georef());
  save_coded_map(map, config.out_dir / "rvmap.rvcode");
  write_pgm(magnitude_image(map), config.out_dir / "magnitude.pgm");
  write_ppm(code_color_image(map), config.out_dir / "codes.ppm");
  out << "ground points " << map.num_points() << '\n'
      << "batches " << map.num_batches() << " x " << map.batch_bits()
      << "-bit\n"
      << "raster " << map.width() << 'x' << map.height() << '\n'
      << "wrote " << (config.out_dir / "rvmap.rvcode").string() << '\n';
  return 0;
}

// Ground points painted with 255 times their visibility on a black
// background, over the scene area.
Raster<std::uint8_t> reconstruction_image(const RunConfig& config,
                                          const GroundPoints& ground,
                                          const BitAverage& average) {
  const AreaSpec& a = config.area;
  const int w = config.reconstruction_res;
  const int h = std::max(1, static_cast<int>(std::lround(w * a.depth_m /
                                                         a.width_m)));
  const int half = std::max(1, w / 128);
  Raster<std::uint8_t> image(w, h, 0);
  for (int k = 0; k < ground.size(); ++k) {
    const Vec2 p = ground.points[k];
    const int col = std::min(
        w - 1, static_cast<int>((p.x - a.origin.x) / a.width_m * w));
    const int row = std::min(
        h - 1, static_cast<int>((a.max_y() - p.y) / a.depth_m * h));
    const auto value =
        static_cast<std::uint8_t>(std::lround(255.0 * average[k]));
    for (int r = row - half; r <= row + half; ++r) {
      for (int c = col - half; c <= col + half; ++c) {
        if (image.contains(r, c)) image.at(r, c) = value;
      }
    }
  }
  return image;
}

int cmd_plan(const RunConfig& config, const CliOptions& opts,
             std::ostream& out) {
  const std::filesystem::path map_path =
      opts.map.empty() ? config.out_dir / "rvmap.rvcode"
                       : std::filesystem::path(opts.map);
  if (!std::filesystem::exists(map_path)) {
    throw ValidationError("coded map " + map_path.string() +
                          " does not exist (run rvmap first or pass --map)");
  }
  const CodedVisibilityMap map = load_coded_map(map_path, config.georef());
  const GroundPoints ground = config.ground_points();
  require(ground.size() == map.num_points(),
          "the configured ROI has " + std::to_string(ground.size()) +
              " points but the coded map encodes " +
              std::to_string(map.num_points()));

  GreedyConfig greedy = config.greedy;
  greedy.rng_seed = config.greedy_seed();
  greedy.threads = thread_count(config);
  const MultiStartResult result = multi_start(map, greedy);
  const VisibilityMetrics m = metrics(result.samples, map.num_points());

  write_text(config.out_dir / "samples.csv", [&](std::ostream& f) {
    write_samples_csv(result.samples, map.num_points(), f);
  });
  write_text(config.out_dir / "gain_curve.csv", [&](std::ostream& f) {
    write_gain_curve_csv(gain_curve(result.samples, map.num_points()), f);
  });
  write_pgm(reconstruction_image(config, ground, m.per_point),
            config.out_dir / "reconstruction.pgm");

  out << "restarts " << result.restarts.size() << '\n'
      << "samples " << result.samples.size() << '\n'
      << "mean_visibility_percent " << format_number(m.mean_visibility_percent)
      << '\n'
      << "dispersion_percent " << format_number(m.dispersion_percent) << '\n';
  if (!result.constraint_satisfied) {
    out << "warning: no restart met the dispersion bound "
        << format_number(greedy.variance_threshold_percent)
        << "%; kept the most uniform result\n";
  }
  if (config.exhaustive_budget > 0) {
    const SamplingSet best =
        exhaustive_search(map, config.exhaustive_budget, greedy.norm);
    const double best_mean =
        metrics(best, map.num_points()).mean_visibility_percent;
    out << "exhaustive_budget " << config.exhaustive_budget << '\n'
        << "exhaustive_mean_visibility_percent " << format_number(best_mean)
        << '\n';
  }
  out << "wrote " << (config.out_dir / "samples.csv").string() << '\n';
  return 0;
}

int cmd_route(const RunConfig& config, const CliOptions& opts,
              std::ostream& out) {
  const std::filesystem::path samples_path =
      opts.samples.empty() ? config.out_dir / "samples.csv"
                           : std::filesystem::path(opts.samples);
  std::ifstream in(samples_path);
  if (!in) {
    throw ValidationError("cannot open samples " + samples_path.string());
  }
  const SamplingSet samples = read_samples_csv(in);
  require(!samples.empty(), "samples file has no samples");
  const std::filesystem::path route_path = config.out_dir / "route.csv";
  if (config.drones == 1) {
    const Route route = order_route(samples, config.start_position());
    write_text(route_path,
               [&](std::ostream& f) { write_route_csv(route, f); });
    out << "waypoints " << route.order.size() << '\n'
        << "total_length_m " << format_number(route.length_m) << '\n';
  } else {
    const BatchPlan plan = assign_batches(samples, config.drones);
    write_text(route_path, [&](std::ostream& f) {
      write_batch_csv(plan, samples, f);
    });
    out << "batches " << plan.batches.size() << " for " << plan.drone_count
        << " drones\n"
        << "total_length_m " << format_number(plan.transition_length_m)
        << '\n';
  }
  out << "wrote " << route_path.string() << '\n';
  return 0;
}

class Report {
 public:
  explicit Report(std::ostream& out) : out_(out) {}
  void check(bool ok, const std::string& name, const std::string& detail) {
    out_ << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
    failures_ += ok ? 0 : 1;
  }
  int failures() const { return failures_; }

 private:
  std::ostream& out_;
  int failures_ = 0;
};

void verify_roundtrip(const RunConfig& config, std::mt19937_64& rng,
                      Report& report) {
  static constexpr int kPointCounts[] = {1, 8, 21, 24, 240};
  std::bernoulli_distribution bit(0.5);
  int failures = 0;
  for (int i = 0; i < config.verify.roundtrip_instances; ++i) {
    const int k_count = kPointCounts[i % 5];
    std::vector<VisibilityMask> masks(k_count);
    for (VisibilityMask& m : masks) {
      m.pixels = Raster<std::uint8_t>(64, 64);
      for (std::uint8_t& v : m.pixels.values()) v = bit(rng);
    }
    const CodedVisibilityMap map = build_coded_map(masks, config.batch_bits);
    for (int k = 0; k < k_count; ++k) {
      if (!(decode(map, k).pixels == masks[k].pixels)) ++failures;
    }
  }
  report.check(failures == 0, "decode roundtrip",
               std::to_string(config.verify.roundtrip_instances) +
                   " random instances, " + std::to_string(failures) +
                   " mismatching masks");
}

void verify_symmetry(const RunConfig& config, const PointCloud& cloud,
                     std::mt19937_64& rng, Report& report) {
  const AreaSpec& a = config.area;
  std::uniform_real_distribution<double> ux(a.origin.x, a.max_x());
  std::uniform_real_distribution<double> uy(a.origin.y, a.max_y());
  std::uniform_real_distribution<double> uz(0.0, config.aperture.altitude_m);
  int asymmetric = 0;
  for (int i = 0; i < config.verify.symmetry_pairs; ++i) {
    const Vec3 p{ux(rng), uy(rng), 0.0};
    const Vec3 q{ux(rng), uy(rng), uz(rng)};
    if (ray_visible(p, q, cloud, config.render.occlusion_radius_m) !=
        ray_visible(q, p, cloud, config.render.occlusion_radius_m)) {
      ++asymmetric;
    }
  }
  report.check(asymmetric == 0, "ray symmetry",
               std::to_string(config.verify.symmetry_pairs) + " pairs, " +
                   std::to_string(asymmetric) + " asymmetric");
}

void verify_reciprocity(const RunConfig& config, const PointCloud& cloud,
                        Report& report) {
  ReciprocityOptions options;
  options.ground_samples = config.verify.ground_samples;
  options.pose_samples = config.verify.pose_samples;
  options.seed = split_seed(config.verify_seed(), 1);
  options.threads = thread_count(config);
  const ReciprocityReport r =
      measure_reciprocity(cloud, config.area, config.camera, config.aperture,
                          config.render, options);
  const double percent = 100.0 * r.agreement();
  report.check(r.pairs >= config.verify.min_pairs &&
                   percent >= config.verify.agreement_threshold_percent,
               "reciprocity",
               format_number(std::round(percent * 100.0) / 100.0) +
                   "% agreement over " + std::to_string(r.pairs) +
                   " pairs (need " +
                   format_number(config.verify.agreement_threshold_percent) +
                   "% over >= " + std::to_string(config.verify.min_pairs) +
                   ")");
}

void verify_monotonicity(const RunConfig& config, std::mt19937_64& rng,
                         Report& report) {
  std::bernoulli_distribution bit(0.4);
  GreedyConfig greedy = config.greedy;
  greedy.norm = Norm::kL1;
  greedy.selection = SelectionRule::kGain;
  int violations = 0, steps = 0;
  for (int i = 0; i < config.verify.monotonicity_maps; ++i) {
    CodedVisibilityMap map(16, 16, 8, 8);
    for (int cell = 0; cell < map.cell_count(); ++cell) {
      for (int k = 0; k < 8; ++k) {
        if (bit(rng)) map.set_bit(cell, k);
      }
    }
    std::uniform_int_distribution<int> start(0, map.cell_count() - 1);
    const std::vector<double> curve =
        gain_curve(greedy_sampling(map, start(rng), greedy), 8);
    for (std::size_t s = 1; s < curve.size(); ++s) {
      ++steps;
      if (!(curve[s] > curve[s - 1])) ++violations;
    }
  }
  report.check(violations == 0, "greedy monotonicity",
               std::to_string(steps) + " accepted steps on " +
                   std::to_string(config.verify.monotonicity_maps) +
                   " random maps, " + std::to_string(violations) +
                   " without strict gain");
}

int cmd_verify(const RunConfig& config, std::ostream& out) {
  std::mt19937_64 rng(config.verify_seed());
  const PointCloud cloud = obtain_cloud(config);
  Report report(out);
  verify_roundtrip(config, rng, report);
  verify_symmetry(config, cloud, rng, report);
  verify_reciprocity(config, cloud, report);
  verify_monotonicity(config, rng, report);
  out << (report.failures() == 0 ? "all checks passed"
                                 : std::to_string(report.failures()) +
                                       " check(s) failed")
      << '\n';
  return report.failures() == 0 ? 0 : 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Plan drone sampling positions that maximize the visibility "
               "of ground points through forest occlusion.",
               "rvplan"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  CliOptions opts;
  app.add_option("--config", opts.config, "INI run configuration");
  app.add_option("--seed", opts.seed, "master seed (overrides [run] seed)");
  app.add_option("--out", opts.out, "output directory (default: out)");
  app.add_option("--threads", opts.threads,
                 "worker threads (default: all cores)")
      ->check(CLI::NonNegativeNumber);

  CLI::App* forest = app.add_subcommand("forest", "generate a forest cloud");
  CLI::App* rvmap =
      app.add_subcommand("rvmap", "render the coded bottom-up visibility map");
  CLI::App* plan = app.add_subcommand("plan", "choose sampling positions");
  plan->add_option("--map", opts.map, "coded map (default: <out>/rvmap.rvcode)");
  CLI::App* route = app.add_subcommand("route", "order samples into routes");
  route->add_option("--samples", opts.samples,
                    "samples CSV (default: <out>/samples.csv)");
  route->add_option("--drones", opts.drones, "swarm size (default: 1)");
  CLI::App* verify =
      app.add_subcommand("verify", "run the built-in property checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    const RunConfig config = resolve(opts);
    prepare_output(config);
    if (forest->parsed()) return cmd_forest(config, out);
    if (rvmap->parsed()) return cmd_rvmap(config, out);
    if (plan->parsed()) return cmd_plan(config, opts, out);
    if (route->parsed()) return cmd_route(config, opts, out);
    if (verify->parsed()) return cmd_verify(config, out);
    return 2;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace rv
