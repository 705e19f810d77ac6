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

// Greedy selection of aperture cells from a coded visibility map, plus the
// baselines and brute-force search used to judge it.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rv/geometry.hpp"
#include "rv/visibility.hpp"

namespace rv {

enum class Norm { kL1, kL2 };

// How the winner is chosen among the candidates that raise the norm of the
// bit average. kGain maximizes the norm after adding the candidate; kDifference
// maximizes the norm of the change in the average vector.
enum class SelectionRule { kGain, kDifference };

std::string to_string(Norm norm);
Norm parse_norm(const std::string& name);
std::string to_string(SelectionRule rule);
SelectionRule parse_selection_rule(const std::string& name);

struct Sample {
  int row = 0;
  int col = 0;
  Vec3 position;
  // K bits packed into 64-bit words, bit k in word k / 64.
  std::vector<std::uint64_t> code;

  int cell(int width) const { return row * width + col; }
  friend bool operator==(const Sample&, const Sample&) = default;
};

// Insertion order is sampling order.
using SamplingSet = std::vector<Sample>;

// Per ground point: fraction of samples whose code has that bit set.
using BitAverage = std::vector<double>;

struct GreedyConfig {
  // Upper bound on the dispersion of per-point visibility, in percent.
  double variance_threshold_percent = 33.0;
  int restarts = 50;
  int max_iterations = 200;
  int empty_c_patience = 2;
  std::uint64_t rng_seed = 0;
  Norm norm = Norm::kL1;
  SelectionRule selection = SelectionRule::kGain;
  // Restart workers for multi_start; 0 uses every hardware thread.
  int threads = 0;

  void validate() const;
};

Sample make_sample(const CodedVisibilityMap& map, int cell);

BitAverage bitwise_average(const SamplingSet& samples, int num_points);

// Deterministic in (map, start_cell, config). The tie-break between equally
// good candidates is the squared aperture-plane distance to the most recent
// sample, then the lower row-major index.
SamplingSet greedy_sampling(const CodedVisibilityMap& map, int start_cell,
                            const GreedyConfig& config);

namespace detail {
// Same contract as greedy_sampling but always scans every cell. The public
// entry point uses popcount buckets for the default L1 gain rule.
SamplingSet greedy_sampling_scan(const CodedVisibilityMap& map, int start_cell,
                                 const GreedyConfig& config);
}  // namespace detail

struct VisibilityMetrics {
  double mean_visibility_percent = 0.0;
  // Population standard deviation of the per-point percentages.
  double dispersion_percent = 0.0;
  BitAverage per_point;
};

VisibilityMetrics metrics(const SamplingSet& samples, int num_points);

// Mean visibility percent after each prefix of the set.
std::vector<double> gain_curve(const SamplingSet& samples, int num_points);

struct RestartOutcome {
  int start_cell = 0;
  int sample_count = 0;
  double mean_visibility_percent = 0.0;
  double dispersion_percent = 0.0;
  bool feasible = false;
};

struct MultiStartResult {
  SamplingSet samples;
  int start_cell = 0;
  // False when no restart met the dispersion bound; `samples` is then the
  // lowest-dispersion result.
  bool constraint_satisfied = false;
  std::vector<RestartOutcome> restarts;
};

// Starts are drawn without replacement from the nonzero cells. Among
// feasible results the winner has the largest norm, then the lower
// dispersion, then the lower start cell.
MultiStartResult multi_start(const CodedVisibilityMap& map,
                             const GreedyConfig& config);

// Best subset of at most `budget` cells under `norm`; ties go to the
// lexicographically smaller sorted cell list. Refuses searches with more
// than 10^7 subsets.
SamplingSet exhaustive_search(const CodedVisibilityMap& map, int budget,
                              Norm norm = Norm::kL1);

enum class BaselineMode { kGrid, kUniformRandom };

std::string to_string(BaselineMode mode);
BaselineMode parse_baseline_mode(const std::string& name);

// Grid: ceil(sqrt(n)) columns, rows as needed, the lattice and its last
// partial row centred on the raster. Random: n distinct cells.
SamplingSet baseline_sampler(const CodedVisibilityMap& map, int n,
                             BaselineMode mode, std::uint64_t seed = 0);

// Most significant nibble first, ceil(K / 4) digits.
std::string code_hex(const Sample& sample, int num_points);

// order,row,col,x_m,y_m,z_m,code_hex,mean_visibility_percent_after
void write_samples_csv(const SamplingSet& samples, int num_points,
                       std::ostream& out);
// Inverse of write_samples_csv; the last column is ignored.
SamplingSet read_samples_csv(std::istream& in);

// step,mean_visibility_percent
void write_gain_curve_csv(const std::vector<double>& curve, std::ostream& out);

}  // namespace rv
