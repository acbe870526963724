#include "lineens/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

namespace lineens {

double bridge_min_tail(double a, double b, double x, double y, double beta) {
  if (!(a < b)) throw InvalidInterval("bridge_min_tail requires a < b");
  const double m = std::min({beta, x, y});
  return std::exp(-2.0 / (b - a) * (x - m) * (y - m));
}

double bridge_max_tail(double a, double b, double x, double y, double beta) {
  if (!(a < b)) throw InvalidInterval("bridge_max_tail requires a < b");
  const double m = std::max({beta, x, y});
  return std::exp(-2.0 / (b - a) * (m - x) * (m - y));
}

double gaussian_tail_bound(double a) {
  if (!(a > 0.0)) throw NonPositiveArgument("gaussian_tail_bound requires a > 0");
  return std::exp(-0.5 * a * a) / (a * std::sqrt(2.0 * std::numbers::pi));
}

double log_no_crossing_above(std::span<const double> path, double level, double dt) {
  double acc = 0.0;
  for (std::size_t j = 0; j < path.size(); ++j) {
    if (!(path[j] > level)) return -kInf;
    if (j + 1 < path.size()) {
      acc += std::log1p(-segment_crossing_probability(path[j], path[j + 1], level, level, dt));
    }
  }
  return acc;
}

double log_no_crossing_below(std::span<const double> path, double level, double dt) {
  double acc = 0.0;
  for (std::size_t j = 0; j < path.size(); ++j) {
    if (!(path[j] < level)) return -kInf;
    if (j + 1 < path.size()) {
      acc += std::log1p(-segment_crossing_probability(-path[j], -path[j + 1], -level, -level, dt));
    }
  }
  return acc;
}

double sample_segment_minimum(double x, double y, double dt, double floor, Rng& rng) {
  // P(min <= m) = exp(-2 (x - m)(y - m) / dt) for m <= min(x, y).
  double lo_mass = 0.0;
  if (floor != -kInf) lo_mass = segment_crossing_probability(x, y, floor, floor, dt);
  const double u = lo_mass + (1.0 - lo_mass) * rng.uniform();
  const double c = -0.5 * dt * std::log(u);
  return 0.5 * ((x + y) - std::sqrt((x - y) * (x - y) + 4.0 * c));
}

double sample_path_minimum(std::span<const double> path, double dt, double floor, Rng& rng) {
  double m = path[0];
  for (std::size_t j = 0; j + 1 < path.size(); ++j) {
    m = std::min(m, sample_segment_minimum(path[j], path[j + 1], dt, floor, rng));
  }
  return m;
}

void sample_bridge_into(std::span<double> out, double dt, double x, double y, Rng& rng) {
  const std::size_t n = out.size();
  out[0] = x;
  out[n - 1] = y;
  // Step j -> j+1 given the right endpoint: with m steps remaining the
  // increment has mean (y - v)/m and variance dt (m - 1)/m.
  for (std::size_t j = 0; j + 2 < n; ++j) {
    const double m = static_cast<double>(n - 1 - j);
    const double mean = out[j] + (y - out[j]) / m;
    const double sd = std::sqrt(dt * (m - 1.0) / m);
    out[j + 1] = mean + sd * rng.normal();
  }
}

Path sample_bridge(const Grid& grid, double x, double y, Rng& rng) {
  std::vector<double> v(static_cast<std::size_t>(grid.size()));
  sample_bridge_into(v, grid.spacing(), x, y, rng);
  return Path(grid, std::move(v));
}

LineEnsemble sample_free_ensemble(const Grid& grid, std::span<const double> x_vec,
                                  std::span<const double> y_vec, Rng& rng) {
  if (x_vec.size() != y_vec.size() || x_vec.empty()) {
    throw LengthMismatch("x_vec and y_vec must have the same nonzero length");
  }
  LineEnsemble ens(grid, static_cast<int>(x_vec.size()));
  for (int i = 0; i < ens.k(); ++i) {
    sample_bridge_into(ens.curve(i), grid.spacing(), x_vec[static_cast<std::size_t>(i)],
                       y_vec[static_cast<std::size_t>(i)], rng);
  }
  return ens;
}

double max_windowed_oscillation(std::span<const double> path, int window_points) {
  // Sliding-window max and min via monotone deques.
  std::deque<std::size_t> hi;
  std::deque<std::size_t> lo;
  double best = 0.0;
  const auto w = static_cast<std::size_t>(std::max(window_points, 0));
  for (std::size_t j = 0; j < path.size(); ++j) {
    while (!hi.empty() && path[hi.back()] <= path[j]) hi.pop_back();
    hi.push_back(j);
    while (!lo.empty() && path[lo.back()] >= path[j]) lo.pop_back();
    lo.push_back(j);
    while (hi.front() + w < j) hi.pop_front();
    while (lo.front() + w < j) lo.pop_front();
    best = std::max(best, path[hi.front()] - path[lo.front()]);
  }
  return best;
}

std::vector<McEstimate> oscillation_tail_curve(double d, std::span<const double> Ks,
                                               std::int64_t n, std::uint64_t seed,
                                               int grid_points) {
  if (!(d > 0.0 && d <= 1.0)) throw InvalidInterval("oscillation window d must lie in (0, 1]");
  const Grid grid(0.0, 1.0, grid_points);
  const int window = static_cast<int>(std::floor(d / grid.spacing() + 1e-9));
  std::vector<MeanAccumulator> acc(Ks.size());
  Rng rng(seed);
  std::vector<double> path(static_cast<std::size_t>(grid_points));
  for (std::int64_t s = 0; s < n; ++s) {
    sample_bridge_into(path, grid.spacing(), 0.0, 0.0, rng);
    const double osc = max_windowed_oscillation(path, window);
    for (std::size_t i = 0; i < Ks.size(); ++i) {
      acc[i].add(osc > Ks[i] * std::sqrt(d) ? 1.0 : 0.0);
    }
  }
  std::vector<McEstimate> out;
  out.reserve(Ks.size());
  for (const auto& a : acc) out.push_back(a.estimate(seed));
  return out;
}

McEstimate oscillation_tail_estimate(double d, double K, std::int64_t n, std::uint64_t seed,
                                     int grid_points) {
  const double ks[] = {K};
  return oscillation_tail_curve(d, ks, n, seed, grid_points).front();
}

}  // namespace lineens
