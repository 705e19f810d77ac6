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

#include "rv/route.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "rv/error.hpp"
#include "rv/text.hpp"

namespace rv {

namespace {

double dist(const Vec3& a, const Vec3& b) { return norm(a - b); }

std::vector<Vec3> positions_of(const SamplingSet& samples) {
  std::vector<Vec3> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) out.push_back(s.position);
  return out;
}

}  // namespace

double path_length(std::span<const Vec3> points, std::span<const int> order) {
  double total = 0.0;
  for (std::size_t i = 1; i < order.size(); ++i) {
    total += dist(points[order[i - 1]], points[order[i]]);
  }
  return total;
}

std::vector<int> nearest_neighbor_order(std::span<const Vec3> points,
                                        const Vec3& start) {
  const int n = static_cast<int>(points.size());
  std::vector<int> order;
  order.reserve(n);
  std::vector<bool> visited(n, false);
  Vec3 here = start;
  for (int step = 0; step < n; ++step) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      if (visited[i]) continue;
      const double d = dist(here, points[i]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    visited[best] = true;
    order.push_back(best);
    here = points[best];
  }
  return order;
}

std::vector<int> two_opt(std::span<const Vec3> points, std::vector<int> order,
                         int max_passes) {
  const int n = static_cast<int>(order.size());
  auto at = [&](int i) -> const Vec3& { return points[order[i]]; };
  constexpr double kEps = 1e-12;
  for (int pass = 0; pass < max_passes; ++pass) {
    bool improved = false;
    for (int i = 0; i < n - 1; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (i == 0 && j == n - 1) continue;
        // Reversing [i, j] swaps the edges entering i and leaving j; an open
        // end contributes nothing.
        double delta = 0.0;
        if (i > 0) delta += dist(at(i - 1), at(j)) - dist(at(i - 1), at(i));
        if (j < n - 1) delta += dist(at(i), at(j + 1)) - dist(at(j), at(j + 1));
        if (delta < -kEps) {
          std::reverse(order.begin() + i, order.begin() + j + 1);
          improved = true;
        }
      }
    }
    if (!improved) break;
  }
  return order;
}

Route order_route(const SamplingSet& samples, const Vec3& start) {
  require(!samples.empty(), "cannot route an empty sampling set");
  const std::vector<Vec3> points = positions_of(samples);
  Route route;
  route.order = two_opt(points, nearest_neighbor_order(points, start));
  for (int i : route.order) route.waypoints.push_back(points[i]);
  route.length_m = path_length(points, route.order);
  return route;
}

std::vector<int> min_cost_assignment(
    const std::vector<std::vector<double>>& cost) {
  const int rows = static_cast<int>(cost.size());
  if (rows == 0) return {};
  const int cols = static_cast<int>(cost.front().size());
  require(rows <= cols, "assignment needs at least as many columns as rows");
  // Shortest augmenting path with potentials; 1-based with a virtual
  // column 0.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0);
  std::vector<int> match(cols + 1, 0), way(cols + 1, 0);
  for (int r = 1; r <= rows; ++r) {
    match[0] = r;
    int c0 = 0;
    std::vector<double> min_v(cols + 1, kInf);
    std::vector<bool> used(cols + 1, false);
    do {
      used[c0] = true;
      const int r0 = match[c0];
      double delta = kInf;
      int c1 = 0;
      for (int c = 1; c <= cols; ++c) {
        if (used[c]) continue;
        const double cur = cost[r0 - 1][c - 1] - u[r0] - v[c];
        if (cur < min_v[c]) {
          min_v[c] = cur;
          way[c] = c0;
        }
        if (min_v[c] < delta) {
          delta = min_v[c];
          c1 = c;
        }
      }
      for (int c = 0; c <= cols; ++c) {
        if (used[c]) {
          u[match[c]] += delta;
          v[c] -= delta;
        } else {
          min_v[c] -= delta;
        }
      }
      c0 = c1;
    } while (match[c0] != 0);
    do {
      const int c1 = way[c0];
      match[c0] = match[c1];
      c0 = c1;
    } while (c0 != 0);
  }
  std::vector<int> out(rows, -1);
  for (int c = 1; c <= cols; ++c) {
    if (match[c] != 0) out[match[c] - 1] = c - 1;
  }
  return out;
}

BatchPlan assign_batches(const SamplingSet& samples, int drone_count) {
  require(drone_count >= 1, "need at least one drone");
  BatchPlan plan;
  plan.drone_count = drone_count;
  const int n = static_cast<int>(samples.size());
  std::vector<Vec3> drone_at(drone_count);
  for (int first = 0; first < n; first += drone_count) {
    const int size = std::min(drone_count, n - first);
    std::vector<int> batch(drone_count, -1);
    if (first == 0) {
      for (int i = 0; i < size; ++i) batch[i] = i;
    } else {
      std::vector<std::vector<double>> cost(size,
                                            std::vector<double>(drone_count));
      for (int i = 0; i < size; ++i) {
        for (int d = 0; d < drone_count; ++d) {
          cost[i][d] = dist(drone_at[d], samples[first + i].position);
        }
      }
      const std::vector<int> drone_of = min_cost_assignment(cost);
      for (int i = 0; i < size; ++i) {
        batch[drone_of[i]] = first + i;
        plan.transition_length_m += cost[i][drone_of[i]];
      }
    }
    for (int d = 0; d < drone_count; ++d) {
      if (batch[d] >= 0) drone_at[d] = samples[batch[d]].position;
    }
    plan.batches.push_back(std::move(batch));
  }
  return plan;
}

void write_route_csv(const Route& route, std::ostream& out) {
  out << "leg,drone,order,x_m,y_m,z_m\n";
  for (std::size_t i = 0; i < route.order.size(); ++i) {
    const Vec3& p = route.waypoints[i];
    out << i << ",0," << route.order[i] << ',' << format_number(p.x) << ','
        << format_number(p.y) << ',' << format_number(p.z) << '\n';
  }
  out << "# total_length_m," << format_number(route.length_m) << '\n';
}

void write_batch_csv(const BatchPlan& plan, const SamplingSet& samples,
                     std::ostream& out) {
  out << "leg,drone,order,x_m,y_m,z_m\n";
  for (std::size_t b = 0; b < plan.batches.size(); ++b) {
    for (int d = 0; d < plan.drone_count; ++d) {
      const int s = plan.batches[b][d];
      if (s < 0) continue;
      const Vec3& p = samples[s].position;
      out << b << ',' << d << ',' << s << ',' << format_number(p.x) << ','
          << format_number(p.y) << ',' << format_number(p.z) << '\n';
    }
  }
  out << "# total_length_m," << format_number(plan.transition_length_m)
      << '\n';
}

}  // namespace rv
