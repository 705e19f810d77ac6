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

#include "rv/sampler.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "rv/error.hpp"
#include "rv/parallel.hpp"
#include "rv/text.hpp"

namespace rv {

namespace {

using Wide = __int128;

// Calls fn(k) for every set bit k of the cell's code.
template <typename Fn>
void for_each_bit(const CodedVisibilityMap& map, int cell, Fn&& fn) {
  for (int b = 0; b < map.num_batches(); ++b) {
    std::uint64_t w = map.word(b, cell);
    const int offset = b * map.batch_bits();
    while (w) {
      fn(offset + std::countr_zero(w));
      w &= w - 1;
    }
  }
}

template <typename Fn>
void for_each_bit(const std::vector<std::uint64_t>& packed, Fn&& fn) {
  for (std::size_t i = 0; i < packed.size(); ++i) {
    std::uint64_t w = packed[i];
    while (w) {
      fn(static_cast<int>(i * 64) + std::countr_zero(w));
      w &= w - 1;
    }
  }
}

// Running per-point counts of a sample set. The bit average is counts / n;
// every comparison below is done on these integers so that ties are exact.
struct Tally {
  std::vector<std::int64_t> counts;
  std::int64_t n = 0;
  std::int64_t sum = 0;      // sum of counts
  std::int64_t sum_sq = 0;   // sum of squared counts

  explicit Tally(int num_points) : counts(num_points, 0) {}

  void add(int k) {
    sum_sq += 2 * counts[k] + 1;
    ++counts[k];
    ++sum;
  }
  void remove(int k) {
    --counts[k];
    --sum;
    sum_sq -= 2 * counts[k] + 1;
  }
  void add_cell(const CodedVisibilityMap& map, int cell) {
    for_each_bit(map, cell, [&](int k) { add(k); });
    ++n;
  }
  void remove_cell(const CodedVisibilityMap& map, int cell) {
    for_each_bit(map, cell, [&](int k) { remove(k); });
    --n;
  }
  void add_code(const std::vector<std::uint64_t>& code) {
    for_each_bit(code, [&](int k) {
      require(k < static_cast<int>(counts.size()),
              "sample code has bits beyond K");
      add(k);
    });
    ++n;
  }

  // Numerator of the norm (squared for L2); the norm is this over n (n^2).
  std::int64_t norm_numerator(Norm norm) const {
    return norm == Norm::kL1 ? sum : sum_sq;
  }
  Wide norm_denominator(Norm norm) const {
    return norm == Norm::kL1 ? Wide{n} : Wide{n} * n;
  }
  // K^2 n^2 times the variance of the bit average.
  Wide scaled_variance() const {
    return Wide{static_cast<std::int64_t>(counts.size())} * sum_sq -
           Wide{sum} * sum;
  }
};

// <0, 0, >0 as a's norm is below, equal to, above b's.
int compare_norm(const Tally& a, const Tally& b, Norm norm) {
  const Wide lhs = Wide{a.norm_numerator(norm)} * b.norm_denominator(norm);
  const Wide rhs = Wide{b.norm_numerator(norm)} * a.norm_denominator(norm);
  return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
}

int compare_variance(const Tally& a, const Tally& b) {
  const Wide lhs = a.scaled_variance() * (Wide{b.n} * b.n);
  const Wide rhs = b.scaled_variance() * (Wide{a.n} * a.n);
  return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
}

VisibilityMetrics metrics_from(const Tally& t) {
  require(t.n >= 1, "sampling set must not be empty");
  VisibilityMetrics m;
  const std::size_t k_count = t.counts.size();
  m.per_point.resize(k_count);
  double total = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    m.per_point[k] = static_cast<double>(t.counts[k]) / t.n;
    total += 100.0 * m.per_point[k];
  }
  m.mean_visibility_percent = total / k_count;
  double sq = 0.0;
  for (double v : m.per_point) {
    const double d = 100.0 * v - m.mean_visibility_percent;
    sq += d * d;
  }
  m.dispersion_percent = std::sqrt(sq / k_count);
  return m;
}

struct Candidate {
  int cell = -1;
  std::int64_t score = 0;
  double distance_sq = 0.0;
};

bool better(const Candidate& a, const Candidate& b) {
  if (b.cell < 0) return true;
  if (a.score != b.score) return a.score > b.score;
  if (a.distance_sq != b.distance_sq) return a.distance_sq < b.distance_sq;
  return a.cell < b.cell;
}

double distance_sq(const CodedVisibilityMap& map, int a, int b) {
  return squared_norm(map.cell_center(a) - map.cell_center(b));
}

// Whether adding a cell with `popcount` set bits whose current counts sum to
// `overlap` raises the norm, and its selection score.
bool raises_norm(const Tally& t, Norm norm, std::int64_t popcount,
                 std::int64_t overlap) {
  if (norm == Norm::kL1) return t.n * popcount > t.sum;
  const Wide grown = Wide{t.sum_sq} + 2 * overlap + popcount;
  return Wide{t.n} * t.n * grown > Wide{t.n + 1} * (t.n + 1) * t.sum_sq;
}

std::int64_t selection_score(const Tally& t, const GreedyConfig& config,
                             std::int64_t popcount, std::int64_t overlap) {
  if (config.selection == SelectionRule::kGain) {
    // The current norm is fixed, so ranking by the new norm ranks the gain.
    return config.norm == Norm::kL1 ? popcount : 2 * overlap + popcount;
  }
  // Scaled norm of the change in the average, n (n + 1) (I_b - I_a).
  if (config.norm == Norm::kL1) return t.sum + t.n * popcount - 2 * overlap;
  return t.sum_sq + t.n * t.n * popcount - 2 * t.n * overlap;
}

class GreedyRun {
 public:
  GreedyRun(const CodedVisibilityMap& map, const GreedyConfig& config,
            bool use_buckets)
      : map_(map),
        config_(config),
        tally_(map.num_points()),
        used_(map.cell_count(), 0) {
    if (use_buckets) {
      buckets_.resize(map.num_points() + 1);
      for (int cell = 0; cell < map.cell_count(); ++cell) {
        buckets_[map.popcount(cell)].push_back(cell);
      }
    }
  }

  SamplingSet run(int start_cell) {
    accept(start_cell);
    int empty_streak = 0;
    for (int it = 0; it < config_.max_iterations; ++it) {
      const Candidate best = buckets_.empty() ? scan() : bucket_search();
      if (best.cell < 0) {
        if (++empty_streak >= config_.empty_c_patience) break;
        continue;
      }
      empty_streak = 0;
      accept(best.cell);
    }
    return std::move(samples_);
  }

 private:
  void accept(int cell) {
    tally_.add_cell(map_, cell);
    used_[cell] = 1;
    last_ = cell;
    samples_.push_back(make_sample(map_, cell));
  }

  Candidate scan() const {
    Candidate best;
    for (int cell = 0; cell < map_.cell_count(); ++cell) {
      if (used_[cell]) continue;
      std::int64_t popcount = 0, overlap = 0;
      for_each_bit(map_, cell, [&](int k) {
        ++popcount;
        overlap += tally_.counts[k];
      });
      if (!raises_norm(tally_, config_.norm, popcount, overlap)) continue;
      Candidate c{cell, selection_score(tally_, config_, popcount, overlap),
                  distance_sq(map_, cell, last_)};
      if (better(c, best)) best = c;
    }
    return best;
  }

  // L1 gain only: the score is the popcount, so the first bucket from the
  // top holding an unused cell decides.
  Candidate bucket_search() const {
    for (int pc = map_.num_points(); pc >= 1; --pc) {
      if (tally_.n * pc <= tally_.sum) break;
      Candidate best;
      for (int cell : buckets_[pc]) {
        if (used_[cell]) continue;
        Candidate c{cell, pc, distance_sq(map_, cell, last_)};
        if (better(c, best)) best = c;
      }
      if (best.cell >= 0) return best;
    }
    return {};
  }

  const CodedVisibilityMap& map_;
  const GreedyConfig& config_;
  Tally tally_;
  std::vector<std::uint8_t> used_;
  std::vector<std::vector<int>> buckets_;
  int last_ = -1;
  SamplingSet samples_;
};

SamplingSet run_greedy(const CodedVisibilityMap& map, int start_cell,
                       const GreedyConfig& config, bool use_buckets) {
  config.validate();
  require(start_cell >= 0 && start_cell < map.cell_count(),
          "start cell is outside the aperture raster");
  return GreedyRun(map, config, use_buckets).run(start_cell);
}

Tally tally_of(const SamplingSet& samples, int num_points) {
  require(num_points >= 1, "K must be at least 1");
  Tally t(num_points);
  for (const Sample& s : samples) t.add_code(s.code);
  return t;
}

// Partial Fisher-Yates: the first `count` entries of a seeded shuffle.
std::vector<int> draw_without_replacement(std::vector<int> pool, int count,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(count);
  return pool;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(c));
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

template <typename T>
T parse_field(const std::string& text, const char* what) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw std::runtime_error(std::string("bad ") + what + " '" + text + "'");
  }
  return value;
}

}  // namespace

std::string to_string(Norm norm) { return norm == Norm::kL1 ? "l1" : "l2"; }

Norm parse_norm(const std::string& name) {
  const std::string n = lower(name);
  if (n == "l1") return Norm::kL1;
  if (n == "l2") return Norm::kL2;
  throw ValidationError("unknown norm '" + name + "' (expected l1 or l2)");
}

std::string to_string(SelectionRule rule) {
  return rule == SelectionRule::kGain ? "gain" : "difference";
}

SelectionRule parse_selection_rule(const std::string& name) {
  const std::string n = lower(name);
  if (n == "gain") return SelectionRule::kGain;
  if (n == "difference") return SelectionRule::kDifference;
  throw ValidationError("unknown selection rule '" + name +
                        "' (expected gain or difference)");
}

std::string to_string(BaselineMode mode) {
  return mode == BaselineMode::kGrid ? "grid" : "random";
}

BaselineMode parse_baseline_mode(const std::string& name) {
  const std::string n = lower(name);
  if (n == "grid") return BaselineMode::kGrid;
  if (n == "random" || n == "uniform_random") {
    return BaselineMode::kUniformRandom;
  }
  throw ValidationError("unknown baseline mode '" + name + "'");
}

void GreedyConfig::validate() const {
  require(variance_threshold_percent > 0.0,
          "variance threshold must be positive");
  require(restarts >= 1, "restarts must be at least 1");
  require(max_iterations >= 0, "max_iterations must be non-negative");
  require(empty_c_patience >= 1, "empty-candidate patience must be >= 1");
  require(threads >= 0, "threads must be non-negative");
}

Sample make_sample(const CodedVisibilityMap& map, int cell) {
  require(cell >= 0 && cell < map.cell_count(), "cell index out of range");
  return Sample{cell / map.width(), cell % map.width(), map.cell_center(cell),
                map.packed_code(cell)};
}

BitAverage bitwise_average(const SamplingSet& samples, int num_points) {
  return metrics(samples, num_points).per_point;
}

VisibilityMetrics metrics(const SamplingSet& samples, int num_points) {
  require(!samples.empty(), "sampling set must not be empty");
  return metrics_from(tally_of(samples, num_points));
}

std::vector<double> gain_curve(const SamplingSet& samples, int num_points) {
  require(num_points >= 1, "K must be at least 1");
  Tally t(num_points);
  std::vector<double> curve;
  curve.reserve(samples.size());
  for (const Sample& s : samples) {
    t.add_code(s.code);
    curve.push_back(100.0 * static_cast<double>(t.sum) /
                    (static_cast<double>(t.n) * num_points));
  }
  return curve;
}

SamplingSet greedy_sampling(const CodedVisibilityMap& map, int start_cell,
                            const GreedyConfig& config) {
  const bool buckets = config.norm == Norm::kL1 &&
                       config.selection == SelectionRule::kGain;
  return run_greedy(map, start_cell, config, buckets);
}

SamplingSet detail::greedy_sampling_scan(const CodedVisibilityMap& map,
                                         int start_cell,
                                         const GreedyConfig& config) {
  return run_greedy(map, start_cell, config, false);
}

MultiStartResult multi_start(const CodedVisibilityMap& map,
                             const GreedyConfig& config) {
  config.validate();
  std::vector<int> nonzero;
  for (int cell = 0; cell < map.cell_count(); ++cell) {
    if (map.popcount(cell) > 0) nonzero.push_back(cell);
  }
  require(!nonzero.empty(), "coded map has no visible ground point anywhere");
  const int runs = std::min<int>(config.restarts, nonzero.size());
  const std::vector<int> starts =
      draw_without_replacement(std::move(nonzero), runs, config.rng_seed);

  std::vector<SamplingSet> results(runs);
  const int threads =
      config.threads > 0 ? config.threads : default_thread_count();
  parallel_for(runs, threads, [&](int i) {
    results[i] = greedy_sampling(map, starts[i], config);
  });

  std::vector<Tally> tallies;
  MultiStartResult out;
  for (int i = 0; i < runs; ++i) {
    tallies.push_back(tally_of(results[i], map.num_points()));
    const VisibilityMetrics m = metrics_from(tallies.back());
    out.restarts.push_back(
        {starts[i], static_cast<int>(results[i].size()),
         m.mean_visibility_percent, m.dispersion_percent,
         m.dispersion_percent < config.variance_threshold_percent});
  }

  int best = -1;
  auto prefer = [&](int i, int j) {
    // Feasible runs rank by norm first; the fallback ranks by dispersion.
    const int by_norm = compare_norm(tallies[i], tallies[j], config.norm);
    const int by_var = compare_variance(tallies[i], tallies[j]);
    if (out.restarts[i].feasible) {
      if (by_norm != 0) return by_norm > 0;
      if (by_var != 0) return by_var < 0;
    } else {
      if (by_var != 0) return by_var < 0;
      if (by_norm != 0) return by_norm > 0;
    }
    return starts[i] < starts[j];
  };
  const bool any_feasible =
      std::any_of(out.restarts.begin(), out.restarts.end(),
                  [](const RestartOutcome& r) { return r.feasible; });
  for (int i = 0; i < runs; ++i) {
    if (any_feasible && !out.restarts[i].feasible) continue;
    if (best < 0 || prefer(i, best)) best = i;
  }
  out.samples = std::move(results[best]);
  out.start_cell = starts[best];
  out.constraint_satisfied = any_feasible;
  return out;
}

SamplingSet exhaustive_search(const CodedVisibilityMap& map, int budget,
                              Norm norm) {
  require(budget >= 1, "budget must be at least 1");
  const int cells = map.cell_count();
  budget = std::min(budget, cells);
  double subsets = 0.0, choose = 1.0;
  for (int j = 1; j <= budget; ++j) {
    choose = choose * (cells - j + 1) / j;
    subsets += choose;
  }
  require(subsets <= 1e7, "exhaustive search exceeds 10^7 subsets");

  Tally tally(map.num_points());
  Tally best_tally(map.num_points());
  std::vector<int> current, best;
  // Depth-first over increasing index lists visits subsets in lexicographic
  // order, so keeping only strict improvements applies the tie-break.
  auto visit = [&](auto&& self, int next) -> void {
    for (int cell = next; cell < cells; ++cell) {
      current.push_back(cell);
      tally.add_cell(map, cell);
      if (best.empty() || compare_norm(tally, best_tally, norm) > 0) {
        best = current;
        best_tally = tally;
      }
      if (static_cast<int>(current.size()) < budget) self(self, cell + 1);
      tally.remove_cell(map, cell);
      current.pop_back();
    }
  };
  visit(visit, 0);

  SamplingSet out;
  for (int cell : best) out.push_back(make_sample(map, cell));
  return out;
}

SamplingSet baseline_sampler(const CodedVisibilityMap& map, int n,
                             BaselineMode mode, std::uint64_t seed) {
  require(n >= 1, "baseline needs at least one sample");
  require(n <= map.cell_count(), "more baseline samples than raster cells");
  std::vector<int> cells;
  if (mode == BaselineMode::kUniformRandom) {
    std::vector<int> all(map.cell_count());
    std::iota(all.begin(), all.end(), 0);
    cells = draw_without_replacement(std::move(all), n, seed);
  } else {
    const int cols = static_cast<int>(std::ceil(std::sqrt(n)));
    const int rows = (n + cols - 1) / cols;
    const double dx = static_cast<double>(map.width()) / cols;
    const double dy = static_cast<double>(map.height()) / rows;
    for (int r = 0; r < rows; ++r) {
      const int in_row = std::min(cols, n - r * cols);
      const double shift = 0.5 * (cols - in_row);
      const int row = static_cast<int>(std::floor((r + 0.5) * dy));
      for (int c = 0; c < in_row; ++c) {
        const int col = static_cast<int>(std::floor((c + 0.5 + shift) * dx));
        cells.push_back(row * map.width() + col);
      }
    }
    std::vector<int> sorted = cells;
    std::sort(sorted.begin(), sorted.end());
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
            "grid baseline collapses onto repeated cells at this raster size");
  }
  SamplingSet out;
  for (int cell : cells) out.push_back(make_sample(map, cell));
  return out;
}

std::string code_hex(const Sample& sample, int num_points) {
  static constexpr char kDigits[] = "0123456789abcdef";
  const int digits = (num_points + 3) / 4;
  std::string out;
  out.reserve(digits);
  for (int d = digits - 1; d >= 0; --d) {
    const int bit = 4 * d;
    const std::size_t word = bit / 64;
    const unsigned nibble =
        word < sample.code.size() ? (sample.code[word] >> (bit % 64)) & 0xF : 0;
    out.push_back(kDigits[nibble]);
  }
  return out;
}

void write_samples_csv(const SamplingSet& samples, int num_points,
                       std::ostream& out) {
  const std::vector<double> curve = gain_curve(samples, num_points);
  out << "order,row,col,x_m,y_m,z_m,code_hex,mean_visibility_percent_after\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    out << i << ',' << s.row << ',' << s.col << ','
        << format_number(s.position.x) << ',' << format_number(s.position.y)
        << ',' << format_number(s.position.z) << ','
        << code_hex(s, num_points) << ',' << format_number(curve[i]) << '\n';
  }
}

SamplingSet read_samples_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("order,row,col,x_m,y_m,z_m", 0)) {
    throw std::runtime_error("samples CSV is missing its header");
  }
  SamplingSet out;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> f = split_csv(line);
    if (f.size() < 7) {
      throw std::runtime_error("short samples CSV line: '" + line + "'");
    }
    Sample s;
    s.row = parse_field<int>(f[1], "row");
    s.col = parse_field<int>(f[2], "col");
    s.position = {parse_field<double>(f[3], "x_m"),
                  parse_field<double>(f[4], "y_m"),
                  parse_field<double>(f[5], "z_m")};
    const std::string& hex = f[6];
    s.code.assign((4 * hex.size() + 63) / 64, 0);
    for (std::size_t i = 0; i < hex.size(); ++i) {
      const int bit = 4 * static_cast<int>(hex.size() - 1 - i);
      unsigned nibble = 0;
      auto [ptr, ec] = std::from_chars(&hex[i], &hex[i] + 1, nibble, 16);
      if (ec != std::errc()) {
        throw std::runtime_error("bad code_hex '" + hex + "'");
      }
      s.code[bit / 64] |= std::uint64_t{nibble} << (bit % 64);
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_gain_curve_csv(const std::vector<double>& curve,
                          std::ostream& out) {
  out << "step,mean_visibility_percent\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out << i + 1 << ',' << format_number(curve[i]) << '\n';
  }
}

}  // namespace rv
