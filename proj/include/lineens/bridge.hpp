#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lineens/core.hpp"
#include "lineens/rng.hpp"

namespace lineens {

// ---------------------------------------------------------------------------
// Closed-form Brownian bridge functionals (diffusion parameter 1).
// ---------------------------------------------------------------------------

/// P(inf_{[a,b]} B <= beta) for a bridge from (a, x) to (b, y).
double bridge_min_tail(double a, double b, double x, double y, double beta);

/// P(sup_{[a,b]} B >= beta) for a bridge from (a, x) to (b, y).
double bridge_max_tail(double a, double b, double x, double y, double beta);

/// Mills-ratio upper bound (2 pi)^{-1/2} a^{-1} e^{-a^2/2} on P(Z > a).
double gaussian_tail_bound(double a);

/// Probability that a bridge with variance rate `diffusion` and endpoints
/// x, y over a segment of length dt dips to or below the level `level`,
/// where the level may itself be linear (give its endpoint values).
/// Returns 1 when either endpoint is at or below the level.
inline double segment_crossing_probability(double x, double y, double level_x, double level_y,
                                           double dt, double diffusion = 1.0) {
  const double gx = x - level_x;
  const double gy = y - level_y;
  if (gx <= 0.0 || gy <= 0.0) return 1.0;
  return std::exp(-2.0 * gx * gy / (diffusion * dt));
}

/// log of the probability that a grid path never touches `level` between
/// grid points, given it is strictly above at every grid point.
/// -inf when some grid value is at or below the level.
double log_no_crossing_above(std::span<const double> path, double level, double dt);
/// Mirror image: path stays strictly below `level`.
double log_no_crossing_below(std::span<const double> path, double level, double dt);

/// Draws the minimum of a bridge segment from x to y over time dt,
/// conditioned on staying above `floor` (use -inf for no conditioning).
double sample_segment_minimum(double x, double y, double dt, double floor, Rng& rng);

/// Continuum minimum of a bridge given its grid values: the minimum of
/// independent per-segment minima.
double sample_path_minimum(std::span<const double> path, double dt, double floor, Rng& rng);

/// Monte Carlo estimate of
///   P(sup_{|u-v| <= d, u, v in [0,1]} |B(u) - B(v)| > K sqrt(d))
/// for a standard bridge on [0, 1], evaluated on a grid of `grid_points`.
McEstimate oscillation_tail_estimate(double d, double K, std::int64_t n, std::uint64_t seed,
                                     int grid_points = 1025);

/// Same functional for several K values sharing the same bridge draws.
std::vector<McEstimate> oscillation_tail_curve(double d, std::span<const double> Ks,
                                               std::int64_t n, std::uint64_t seed,
                                               int grid_points = 1025);

/// Largest |B(u) - B(v)| over grid pairs with |u - v| <= window (in points).
double max_windowed_oscillation(std::span<const double> path, int window_points);

// ---------------------------------------------------------------------------
// Samplers for the free measure.
// ---------------------------------------------------------------------------

/// Brownian bridge from x to y, exact at the grid points.
Path sample_bridge(const Grid& grid, double x, double y, Rng& rng);

/// Fills `out` (size n) with a bridge on a grid of spacing dt.
void sample_bridge_into(std::span<double> out, double dt, double x, double y, Rng& rng);

/// k independent bridges with endpoints x_vec[i] -> y_vec[i].
LineEnsemble sample_free_ensemble(const Grid& grid, std::span<const double> x_vec,
                                  std::span<const double> y_vec, Rng& rng);

}  // namespace lineens
