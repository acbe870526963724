#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lineens/core.hpp"
#include "lineens/rng.hpp"

namespace lineens {

/// Sub-interval (a', b') on which the Boltzmann weight is switched off.
struct Window {
  double a_prime;
  double b_prime;
};

/// Everything that determines a conditional H-Brownian bridge law:
/// curve range k1..k2, interval (a, b), entrance/exit data, boundary curves
/// f (above k1) and g (below k2), Hamiltonian, optional off-window.
struct ConditionalSpec {
  int k1 = 1;
  int k2 = 1;
  double a = 0.0;
  double b = 1.0;
  BoundaryData boundary;
  Hamiltonian hamiltonian = Hamiltonian::exp();
  std::optional<Window> window;
  /// Ordered Hamiltonian only: weight each grid segment by the exact
  /// bridge non-crossing probability instead of checking grid points only.
  bool crossing_correction = true;

  int k() const { return k2 - k1 + 1; }
  /// Throws GridMismatch / LengthMismatch when the spec does not fit `grid`.
  void validate(const Grid& grid) const;
};

/// log W for an ensemble holding curves k1..k2 on the spec interval.
/// Trapezoidal quadrature of H over the grid; returns a value in [-inf, 0].
double log_boltzmann_weight(const LineEnsemble& ens, const ConditionalSpec& spec);

/// Monte Carlo estimate of Z = E_free[W] from n free draws.
McEstimate estimate_Z(const ConditionalSpec& spec, const Grid& grid, std::int64_t n,
                      std::uint64_t seed);

inline constexpr std::int64_t kDefaultRejectionBudget = 1'000'000;

struct ConditionalSample {
  LineEnsemble ensemble;
  std::int64_t attempts;
};

/// Rejection sampler: free candidates accepted when log U <= log W.
/// Throws RejectionBudgetExhausted after `budget` rejected candidates.
ConditionalSample sample_conditional(const ConditionalSpec& spec, const Grid& grid, Rng& rng,
                                     std::int64_t budget = kDefaultRejectionBudget);

/// Curves k1..k2 (1-based, 1 = top) over grid points first..last.
struct Block {
  int k1;
  int k2;
  int first;
  int last;

  std::string describe() const;
};

struct SweepOptions {
  std::int64_t budget = kDefaultRejectionBudget;
  bool crossing_correction = true;
};

/// Resamples one block from its conditional law given the rest of `state`
/// and the outer boundary (used above curve 1 and below curve k).
void resample_block(LineEnsemble& state, const BoundaryData& outer, const Hamiltonian& h,
                    Rng& rng, const Block& block, const SweepOptions& opts = {});

/// One systematic scan over `blocks`.
LineEnsemble mcmc_sweep(LineEnsemble state, const BoundaryData& outer, const Hamiltonian& h,
                        Rng& rng, std::span<const Block> blocks, const SweepOptions& opts = {});

LineEnsemble mcmc_sweep(LineEnsemble state, const BoundaryData& outer, const Hamiltonian& h,
                        Rng& rng, const Block& block, const SweepOptions& opts = {});

// ---------------------------------------------------------------------------
// Single-site heat bath and the monotone coupling built on it.
// ---------------------------------------------------------------------------

struct HeatBathOptions {
  int lattice_points = 1024;
  double span_sigmas = 8.0;
  /// Lattice is extended while an edge carries log-density above max + this.
  double log_tail_cutoff = -27.631021115928547;  // log(1e-12)
  int max_extensions = 64;
};

/// Inputs of the one-site conditional density
///   exp(-(v - mu)^2 / (2 sigma^2) - dt [H(below - v) + H(v - above)]).
struct SiteConditional {
  double left;   // neighbor values along the curve
  double right;
  double above;  // curve above (or +inf)
  double below;  // curve below (or -inf)
  double dt;
};

/// Inverse-CDF draw from the one-site conditional at uniform u.
double heat_bath_site(const SiteConditional& site, const Hamiltonian& h, double u,
                      const HeatBathOptions& opts = {});

/// Coupled draw: both sites use the same u and a shared value lattice, so
/// lo <= hi is preserved whenever the inputs are ordered.
std::pair<double, double> heat_bath_site_coupled(const SiteConditional& lo,
                                                 const SiteConditional& hi, const Hamiltonian& h,
                                                 double u, const HeatBathOptions& opts = {});

/// One heat-bath scan over every interior site (top curve first,
/// left to right). Endpoints stay fixed.
void heat_bath_sweep(LineEnsemble& state, const BoundaryData& outer, const Hamiltonian& h,
                     Rng& rng, const HeatBathOptions& opts = {});

/// One coupled heat-bath scan over both states with shared uniforms.
/// Requires lo <= hi pointwise (curves and curve-valued boundaries).
std::pair<LineEnsemble, LineEnsemble> monotone_coupled_sweep(
    LineEnsemble lo, LineEnsemble hi, const BoundaryData& outer_lo, const BoundaryData& outer_hi,
    const Hamiltonian& h, Rng& shared_rng, const HeatBathOptions& opts = {});

/// Number of (curve, point) sites with lo > hi.
std::int64_t count_order_violations(const LineEnsemble& lo, const LineEnsemble& hi);

// ---------------------------------------------------------------------------
// Stopping domains.
// ---------------------------------------------------------------------------

struct StoppingDomain {
  double left;
  double right;
  bool hit_left;
  bool hit_right;
};

/// Scans left_search = [l0, l1] left to right and right_search = [r0, r1]
/// right to left for the first grid point with curve >= level.
/// `left` is that point (or l0 with hit_left = false when the level is never
/// reached); likewise `right` (or r1 with hit_right = false).
StoppingDomain first_hitting_domain(const Path& curve, double level,
                                    std::pair<double, double> left_search,
                                    std::pair<double, double> right_search);

}  // namespace lineens
