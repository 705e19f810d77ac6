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

// Visiting order for one drone and batch assignment for a swarm.

#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "rv/geometry.hpp"
#include "rv/sampler.hpp"

namespace rv {

// Sum of distances between consecutive points of `order`.
double path_length(std::span<const Vec3> points, std::span<const int> order);

std::vector<int> nearest_neighbor_order(std::span<const Vec3> points,
                                        const Vec3& start);

// First-improvement 2-opt on an open path until no reversal shortens it or
// `max_passes` full scans have run.
std::vector<int> two_opt(std::span<const Vec3> points, std::vector<int> order,
                         int max_passes = 10000);

struct Route {
  // Indices into the sampling set, in visiting order.
  std::vector<int> order;
  std::vector<Vec3> waypoints;
  // Between waypoints; the approach from the start position is not counted.
  double length_m = 0.0;
};

Route order_route(const SamplingSet& samples, const Vec3& start);

// Minimum-cost assignment of each row to a distinct column of a rows x cols
// matrix (rows <= cols). Returns the column of every row.
std::vector<int> min_cost_assignment(
    const std::vector<std::vector<double>>& cost);

struct BatchPlan {
  int drone_count = 0;
  // batches[b][d] is the sample flown by drone d in batch b, or -1 when the
  // drone holds position.
  std::vector<std::vector<int>> batches;
  // Travel between consecutive batches summed over drones.
  double transition_length_m = 0.0;
};

// Batches follow sampling order. Drone d takes sample d of the first batch;
// later batches are matched to the drones' previous positions.
BatchPlan assign_batches(const SamplingSet& samples, int drone_count);

// leg,drone,order,x_m,y_m,z_m then "# total_length_m,<length>". For a single
// route the leg is the position in the route and `order` the sample index.
void write_route_csv(const Route& route, std::ostream& out);
void write_batch_csv(const BatchPlan& plan, const SamplingSet& samples,
                     std::ostream& out);

}  // namespace rv
