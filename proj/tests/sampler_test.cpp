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

#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

#include "oracles/oracles.hpp"
#include "rv/error.hpp"
#include "rv/sampler.hpp"

namespace rv {
namespace {

std::vector<int> cells_of(const SamplingSet& s, int width) {
  std::vector<int> out;
  for (const Sample& x : s) out.push_back(x.cell(width));
  return out;
}

Sample sample_with(std::uint64_t bits) { return Sample{0, 0, {}, {bits}}; }

TEST(BitAverage, CountsBitsOverSamples) {
  EXPECT_EQ(bitwise_average({sample_with(0b0101)}, 4),
            (BitAverage{1, 0, 1, 0}));
  EXPECT_EQ(bitwise_average({sample_with(0b01), sample_with(0b11)}, 4),
            (BitAverage{1, 0.5, 0, 0}));
  const SamplingSet copies(5, sample_with(0b1101));
  EXPECT_EQ(bitwise_average(copies, 4), (BitAverage{1, 0, 1, 1}));
  EXPECT_THROW(bitwise_average({}, 4), ValidationError);
  EXPECT_THROW(bitwise_average({sample_with(0b10000)}, 4), ValidationError);
}

TEST(Metrics, MeanAndDispersionInPercent) {
  const VisibilityMetrics half =
      metrics({sample_with(0b01), sample_with(0b11)}, 2);
  EXPECT_DOUBLE_EQ(half.mean_visibility_percent, 75.0);
  EXPECT_DOUBLE_EQ(half.dispersion_percent, 25.0);
  const VisibilityMetrics full = metrics({sample_with(0b111)}, 3);
  EXPECT_DOUBLE_EQ(full.mean_visibility_percent, 100.0);
  EXPECT_DOUBLE_EQ(full.dispersion_percent, 0.0);
  const VisibilityMetrics split = metrics({sample_with(0b01)}, 2);
  EXPECT_DOUBLE_EQ(split.dispersion_percent, 50.0);
}

TEST(Metrics, GainCurveFollowsPrefixes) {
  const SamplingSet s{sample_with(0b01), sample_with(0b11), sample_with(0b10)};
  const std::vector<double> curve = gain_curve(s, 2);
  ASSERT_EQ(curve.size(), 3u);
  EXPECT_DOUBLE_EQ(curve[0], 50.0);
  EXPECT_DOUBLE_EQ(curve[1], 75.0);
  EXPECT_DOUBLE_EQ(curve[2], 200.0 / 3.0);
}

TEST(Greedy, FullStartAddsNothing) {
  CodedVisibilityMap map = oracle::random_map(5, 5, 6, 8, 1);
  map.set_word(0, 12, 0x3F);
  const SamplingSet s = greedy_sampling(map, 12, GreedyConfig{});
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].cell(5), 12);
}

TEST(Greedy, SingleBitTakesEverySetCellNearestFirst) {
  CodedVisibilityMap map(7, 1, 1, 8);
  for (int c : {0, 4, 6}) map.set_bit(c, 0);
  const SamplingSet s = greedy_sampling(map, 2, GreedyConfig{});
  // Cells 0 and 4 are equally close to 2; the lower index wins. The zero
  // start stays in the set, so the average tops out at 3/4.
  EXPECT_EQ(cells_of(s, 7), (std::vector<int>{2, 0, 4, 6}));
  EXPECT_DOUBLE_EQ(bitwise_average(s, 1)[0], 0.75);
}

TEST(Greedy, RejectsStartOutsideRaster) {
  const CodedVisibilityMap map = oracle::random_map(3, 3, 4, 8, 2);
  EXPECT_THROW(greedy_sampling(map, 9, GreedyConfig{}), ValidationError);
  EXPECT_THROW(greedy_sampling(map, -1, GreedyConfig{}), ValidationError);
}

TEST(Greedy, MatchesStraightLineOracleForEveryRule) {
  for (Norm norm : {Norm::kL1, Norm::kL2}) {
    for (SelectionRule rule :
         {SelectionRule::kGain, SelectionRule::kDifference}) {
      GreedyConfig config;
      config.norm = norm;
      config.selection = rule;
      config.max_iterations = 30;
      for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const CodedVisibilityMap map =
            oracle::random_map(5, 5, 8, 8, 500 + seed, 0.4);
        const int start = static_cast<int>(seed * 3 % 25);
        EXPECT_EQ(cells_of(greedy_sampling(map, start, config), 5),
                  oracle::greedy_cells(map, start, config))
            << to_string(norm) << ' ' << to_string(rule) << ' ' << seed;
      }
    }
  }
}

TEST(Greedy, BucketSearchEqualsFullScan) {
  GreedyConfig config;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const CodedVisibilityMap map =
        oracle::random_map(24, 20, 21, 24, 900 + seed, 0.3 + 0.1 * seed);
    for (int start : {0, 77, 479}) {
      EXPECT_EQ(greedy_sampling(map, start, config),
                detail::greedy_sampling_scan(map, start, config));
    }
  }
}

TEST(Greedy, NormStrictlyIncreasesOnEveryStep) {
  for (Norm norm : {Norm::kL1, Norm::kL2}) {
    GreedyConfig config;
    config.norm = norm;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const CodedVisibilityMap map =
          oracle::random_map(12, 12, 16, 8, 40 + seed, 0.35);
      const SamplingSet s = greedy_sampling(map, 5, config);
      std::vector<std::vector<int>> codes;
      oracle::Fraction last{0, 1};
      for (const Sample& x : s) {
        codes.push_back(oracle::bits_of(map, x.cell(12)));
        const oracle::Fraction now = oracle::average_norm(codes, norm);
        if (codes.size() > 1) EXPECT_GT(oracle::compare(now, last), 0);
        last = now;
      }
    }
  }
}

TEST(Greedy, RespectsIterationCapAndNeverRepeatsCells) {
  const CodedVisibilityMap map = oracle::random_map(10, 10, 8, 8, 77, 0.5);
  GreedyConfig config;
  config.max_iterations = 3;
  EXPECT_LE(greedy_sampling(map, 0, config).size(), 4u);
  config.max_iterations = 1000;
  const SamplingSet s = greedy_sampling(map, 0, config);
  std::vector<int> cells = cells_of(s, 10);
  std::sort(cells.begin(), cells.end());
  EXPECT_EQ(std::adjacent_find(cells.begin(), cells.end()), cells.end());
  EXPECT_LE(s.size(), 100u);
}

TEST(Greedy, IsDeterministic) {
  const CodedVisibilityMap map = oracle::random_map(16, 16, 21, 8, 5, 0.4);
  GreedyConfig config;
  EXPECT_EQ(greedy_sampling(map, 33, config), greedy_sampling(map, 33, config));
}

TEST(Greedy, ArgmaxStartMatchesBudgetOneOptimum) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const CodedVisibilityMap map = oracle::random_map(6, 6, 8, 8, 60 + seed);
    const SamplingSet best = exhaustive_search(map, 1);
    ASSERT_EQ(best.size(), 1u);
    const Raster<std::uint16_t> mag = magnitude(map);
    const int argmax = static_cast<int>(
        std::max_element(mag.values().begin(), mag.values().end()) -
        mag.values().begin());
    EXPECT_EQ(best[0].cell(6), argmax);
    const SamplingSet greedy = greedy_sampling(map, argmax, GreedyConfig{});
    EXPECT_EQ(greedy, best);
  }
}

TEST(Exhaustive, MatchesEnumerationOracle) {
  for (Norm norm : {Norm::kL1, Norm::kL2}) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      const CodedVisibilityMap map = oracle::random_map(3, 3, 4, 8, 10 + seed);
      for (int budget : {1, 2, 3, 9}) {
        EXPECT_EQ(cells_of(exhaustive_search(map, budget, norm), 3),
                  oracle::best_subset(map, budget, norm));
      }
    }
  }
}

TEST(Exhaustive, GuardsAgainstHugeSearches) {
  const CodedVisibilityMap map(64, 64, 4, 8);
  EXPECT_THROW(exhaustive_search(map, 3), ValidationError);
  EXPECT_THROW(exhaustive_search(map, 0), ValidationError);
}

TEST(MultiStart, OneRestartEqualsGreedyFromItsStart) {
  const CodedVisibilityMap map = oracle::random_map(10, 10, 12, 8, 3, 0.4);
  GreedyConfig config;
  config.restarts = 1;
  config.rng_seed = 17;
  const MultiStartResult r = multi_start(map, config);
  ASSERT_EQ(r.restarts.size(), 1u);
  EXPECT_EQ(r.samples, greedy_sampling(map, r.start_cell, config));
  EXPECT_GT(map.popcount(r.start_cell), 0);
}

TEST(MultiStart, PicksTheLowerStartAmongEqualOptima) {
  CodedVisibilityMap map(3, 1, 2, 8);
  map.set_word(0, 0, 0x3);
  map.set_word(0, 2, 0x3);
  GreedyConfig config;
  config.restarts = 5;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    config.rng_seed = seed;
    const MultiStartResult r = multi_start(map, config);
    EXPECT_EQ(r.restarts.size(), 2u);
    EXPECT_EQ(r.start_cell, 0);
    EXPECT_TRUE(r.constraint_satisfied);
  }
}

TEST(MultiStart, IndependentOfThreadCount) {
  const CodedVisibilityMap map = oracle::random_map(20, 20, 21, 24, 4, 0.4);
  GreedyConfig config;
  config.restarts = 12;
  config.threads = 1;
  const MultiStartResult a = multi_start(map, config);
  config.threads = 4;
  const MultiStartResult b = multi_start(map, config);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(a.start_cell, b.start_cell);
}

TEST(MultiStart, FallsBackToMostUniformWhenNothingIsFeasible) {
  const CodedVisibilityMap map = oracle::random_map(12, 12, 10, 8, 9, 0.4);
  GreedyConfig config;
  config.restarts = 10;
  config.variance_threshold_percent = 1e-9;
  const MultiStartResult r = multi_start(map, config);
  EXPECT_FALSE(r.constraint_satisfied);
  const double chosen = metrics(r.samples, 10).dispersion_percent;
  for (const RestartOutcome& o : r.restarts) {
    EXPECT_FALSE(o.feasible);
    EXPECT_LE(chosen, o.dispersion_percent + 1e-12);
  }
}

TEST(MultiStart, FeasibleWinnerHasTheHighestMean) {
  const CodedVisibilityMap map = oracle::random_map(12, 12, 10, 8, 10, 0.4);
  GreedyConfig config;
  config.restarts = 10;
  config.variance_threshold_percent = 1000.0;
  const MultiStartResult r = multi_start(map, config);
  EXPECT_TRUE(r.constraint_satisfied);
  const double chosen = metrics(r.samples, 10).mean_visibility_percent;
  for (const RestartOutcome& o : r.restarts) {
    EXPECT_GE(chosen, o.mean_visibility_percent - 1e-12);
  }
}

TEST(MultiStart, RejectsAllZeroMap) {
  EXPECT_THROW(multi_start(CodedVisibilityMap(4, 4, 3, 8), GreedyConfig{}),
               ValidationError);
}

TEST(Baseline, GridLatticeIsCentred) {
  const CodedVisibilityMap map(8, 8, 1, 8);
  EXPECT_EQ(cells_of(baseline_sampler(map, 1, BaselineMode::kGrid), 8),
            (std::vector<int>{4 * 8 + 4}));
  EXPECT_EQ(cells_of(baseline_sampler(map, 4, BaselineMode::kGrid), 8),
            (std::vector<int>{2 * 8 + 2, 2 * 8 + 6, 6 * 8 + 2, 6 * 8 + 6}));
  EXPECT_EQ(cells_of(baseline_sampler(map, 3, BaselineMode::kGrid), 8),
            (std::vector<int>{2 * 8 + 2, 2 * 8 + 6, 6 * 8 + 4}));
}

TEST(Baseline, RandomIsSeededAndDistinct) {
  const CodedVisibilityMap map(10, 10, 1, 8);
  const SamplingSet a =
      baseline_sampler(map, 30, BaselineMode::kUniformRandom, 5);
  EXPECT_EQ(a, baseline_sampler(map, 30, BaselineMode::kUniformRandom, 5));
  EXPECT_NE(a, baseline_sampler(map, 30, BaselineMode::kUniformRandom, 6));
  std::vector<int> cells = cells_of(a, 10);
  std::sort(cells.begin(), cells.end());
  EXPECT_EQ(std::adjacent_find(cells.begin(), cells.end()), cells.end());
  EXPECT_THROW(baseline_sampler(map, 101, BaselineMode::kGrid),
               ValidationError);
  EXPECT_THROW(baseline_sampler(map, 0, BaselineMode::kUniformRandom),
               ValidationError);
}

TEST(Sampling, BitAverageEqualsForwardIntegralOfPerSampleMasks) {
  // A sample's code bit k is the visibility of ground point k from that
  // position, so stacking the codes as K x 1 masks and integrating them must
  // reproduce the bit average exactly.
  const CodedVisibilityMap map = oracle::random_map(9, 9, 13, 8, 31, 0.45);
  const SamplingSet s = greedy_sampling(map, 40, GreedyConfig{});
  std::vector<VisibilityMask> masks;
  for (const Sample& x : s) {
    VisibilityMask m;
    m.pixels = Raster<std::uint8_t>(1, 13);
    for (int k = 0; k < 13; ++k) m.pixels[k] = map.bit(x.cell(9), k);
    masks.push_back(m);
  }
  const IntegralMap i =
      integrate_forward(masks, SelectionVector(masks.size(), 1));
  const BitAverage avg = bitwise_average(s, 13);
  for (int k = 0; k < 13; ++k) EXPECT_DOUBLE_EQ(i.values[k], avg[k]);
}

TEST(SamplesCsv, WritesHexCodesAndReadsBack) {
  CodedVisibilityMap map(4, 4, 21, 24,
                         ApertureGeoref{AreaSpec{32, 32, {0, 0}}, 35.0});
  map.set_bit(5, 0);
  map.set_bit(5, 20);
  map.set_bit(10, 3);
  const SamplingSet s{make_sample(map, 5), make_sample(map, 10)};
  EXPECT_EQ(code_hex(s[0], 21), "100001");
  std::stringstream csv;
  write_samples_csv(s, 21, csv);
  const std::string text = csv.str();
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "order,row,col,x_m,y_m,z_m,code_hex,mean_visibility_percent_after");
  EXPECT_NE(text.find("0,1,1,12,20,35,100001,"), std::string::npos);
  EXPECT_EQ(read_samples_csv(csv), s);

  std::stringstream curve;
  write_gain_curve_csv({50.0, 62.5}, curve);
  EXPECT_EQ(curve.str(), "step,mean_visibility_percent\n1,50\n2,62.5\n");
}

TEST(SamplesCsv, RejectsMalformedFiles) {
  std::stringstream none("x,y\n");
  EXPECT_THROW(read_samples_csv(none), std::runtime_error);
  std::stringstream bad(
      "order,row,col,x_m,y_m,z_m,code_hex,mean_visibility_percent_after\n"
      "0,1,1,abc,2,3,ff,1\n");
  EXPECT_THROW(read_samples_csv(bad), std::runtime_error);
}

TEST(Names, ParseAndPrintRoundTrip) {
  EXPECT_EQ(parse_norm("L2"), Norm::kL2);
  EXPECT_EQ(parse_selection_rule(to_string(SelectionRule::kDifference)),
            SelectionRule::kDifference);
  EXPECT_EQ(parse_baseline_mode("uniform_random"),
            BaselineMode::kUniformRandom);
  EXPECT_THROW(parse_norm("linf"), ValidationError);
}

}  // namespace
}  // namespace rv
