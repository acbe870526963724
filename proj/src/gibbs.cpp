#include "lineens/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lineens/bridge.hpp"

namespace lineens {

void ConditionalSpec::validate(const Grid& grid) const {
  if (k1 > k2) throw LengthMismatch("conditional spec needs k1 <= k2");
  if (std::abs(grid.a() - a) > 1e-9 * grid.spacing() ||
      std::abs(grid.b() - b) > 1e-9 * grid.spacing()) {
    throw GridMismatch("grid does not span the spec interval");
  }
  boundary.validate(grid);
  if (boundary.k() != k()) throw LengthMismatch("boundary vectors do not match k2 - k1 + 1");
  if (window) {
    if (!(a < window->a_prime && window->a_prime < window->b_prime && window->b_prime < b)) {
      throw InvalidInterval("window must satisfy a < a' < b' < b");
    }
    grid.index_of(window->a_prime);
    grid.index_of(window->b_prime);
  }
}

namespace {

// Upper/lower neighbors of pair p (p = 0: f vs curve 1, p = k: curve k vs g).
struct PairView {
  const double* upper = nullptr;  // null means +inf
  const double* lower = nullptr;  // null means -inf
  double diffusion = 1.0;         // variance rate of upper - lower
};

std::vector<PairView> pair_views(const LineEnsemble& ens, const ConditionalSpec& spec) {
  const int k = ens.k();
  std::vector<PairView> pairs;
  pairs.reserve(static_cast<std::size_t>(k + 1));
  for (int p = 0; p <= k; ++p) {
    PairView v;
    if (p == 0) {
      if (spec.boundary.upper.is_curve()) v.upper = spec.boundary.upper.path().values.data();
    } else {
      v.upper = ens.curve(p - 1).data();
    }
    if (p == k) {
      if (spec.boundary.lower.is_curve()) v.lower = spec.boundary.lower.path().values.data();
    } else {
      v.lower = ens.curve(p).data();
    }
    v.diffusion = (p == 0 || p == k) ? 1.0 : 2.0;
    if (v.upper != nullptr && v.lower != nullptr) pairs.push_back(v);
  }
  return pairs;
}

}  // namespace

double log_boltzmann_weight(const LineEnsemble& ens, const ConditionalSpec& spec) {
  const Grid& grid = ens.grid();
  spec.validate(grid);
  if (ens.k() != spec.k()) throw LengthMismatch("ensemble curve count does not match spec");

  const int n = grid.size();
  const double dt = grid.spacing();
  // Segment s joins points s and s+1; excluded when it lies inside the window.
  int win_lo = n;
  int win_hi = n;
  if (spec.window) {
    win_lo = grid.index_of(spec.window->a_prime);
    win_hi = grid.index_of(spec.window->b_prime);
  }
  auto segment_included = [&](int s) { return s + 1 <= win_lo || s >= win_hi; };

  const Hamiltonian& h = spec.hamiltonian;
  double acc = 0.0;
  for (const PairView& pv : pair_views(ens, spec)) {
    if (h.is_ordered()) {
      for (int s = 0; s + 1 < n; ++s) {
        if (!segment_included(s)) continue;
        const double d0 = pv.upper[s] - pv.lower[s];
        const double d1 = pv.upper[s + 1] - pv.lower[s + 1];
        if (d0 < 0.0 || d1 < 0.0) return -kInf;
        if (spec.crossing_correction) {
          if (d0 == 0.0 || d1 == 0.0) return -kInf;
          acc += std::log1p(-std::exp(-2.0 * d0 * d1 / (pv.diffusion * dt)));
        }
      }
      continue;
    }
    double prev = h.eval(pv.lower[0] - pv.upper[0]);
    for (int s = 0; s + 1 < n; ++s) {
      const double next = h.eval(pv.lower[s + 1] - pv.upper[s + 1]);
      if (segment_included(s)) acc -= 0.5 * dt * (prev + next);
      prev = next;
    }
    if (acc == -kInf) return acc;
  }
  return acc;
}

McEstimate estimate_Z(const ConditionalSpec& spec, const Grid& grid, std::int64_t n,
                      std::uint64_t seed) {
  spec.validate(grid);
  Rng rng(seed);
  MeanAccumulator acc;
  for (std::int64_t i = 0; i < n; ++i) {
    const LineEnsemble cand =
        sample_free_ensemble(grid, spec.boundary.x_vec, spec.boundary.y_vec, rng);
    acc.add(std::exp(log_boltzmann_weight(cand, spec)));
  }
  return acc.estimate(seed);
}

ConditionalSample sample_conditional(const ConditionalSpec& spec, const Grid& grid, Rng& rng,
                                     std::int64_t budget) {
  spec.validate(grid);
  for (std::int64_t attempt = 1; attempt <= budget; ++attempt) {
    LineEnsemble cand = sample_free_ensemble(grid, spec.boundary.x_vec, spec.boundary.y_vec, rng);
    const double lw = log_boltzmann_weight(cand, spec);
    if (std::log(rng.uniform()) <= lw) return {std::move(cand), attempt};
  }
  throw RejectionBudgetExhausted(budget, "");
}

std::string Block::describe() const {
  std::ostringstream s;
  s << "curves " << k1 << ".." << k2 << " x points " << first << ".." << last;
  return s.str();
}

namespace {

BoundaryCurve slice_boundary(const BoundaryCurve& c, const Grid& sub, int first) {
  if (!c.is_curve()) return c;
  const auto& v = c.path().values;
  return BoundaryCurve::curve(
      Path(sub, std::vector<double>(v.begin() + first, v.begin() + first + sub.size())));
}

}  // namespace

void resample_block(LineEnsemble& state, const BoundaryData& outer, const Hamiltonian& h,
                    Rng& rng, const Block& block, const SweepOptions& opts) {
  const Grid& grid = state.grid();
  const int k = state.k();
  if (block.k1 < 1 || block.k2 > k || block.k1 > block.k2 || block.first < 0 ||
      block.last >= grid.size() || block.first >= block.last) {
    throw InvalidInterval("invalid block " + block.describe());
  }
  const Grid sub = grid.slice(block.first, block.last);

  ConditionalSpec spec;
  spec.k1 = block.k1;
  spec.k2 = block.k2;
  spec.a = sub.a();
  spec.b = sub.b();
  spec.hamiltonian = h;
  spec.crossing_correction = opts.crossing_correction;
  for (int i = block.k1; i <= block.k2; ++i) {
    spec.boundary.x_vec.push_back(state.at(i - 1, block.first));
    spec.boundary.y_vec.push_back(state.at(i - 1, block.last));
  }
  auto row_slice = [&](int row) {
    auto c = state.curve(row);
    return BoundaryCurve::curve(
        Path(sub, std::vector<double>(c.begin() + block.first, c.begin() + block.last + 1)));
  };
  spec.boundary.upper =
      block.k1 == 1 ? slice_boundary(outer.upper, sub, block.first) : row_slice(block.k1 - 2);
  spec.boundary.lower =
      block.k2 == k ? slice_boundary(outer.lower, sub, block.first) : row_slice(block.k2);

  ConditionalSample draw = [&] {
    try {
      return sample_conditional(spec, sub, rng, opts.budget);
    } catch (const RejectionBudgetExhausted& e) {
      throw RejectionBudgetExhausted(e.attempts(), block.describe());
    }
  }();
  for (int i = block.k1; i <= block.k2; ++i) {
    auto src = draw.ensemble.curve(i - block.k1);
    std::copy(src.begin(), src.end(), state.curve(i - 1).begin() + block.first);
  }
}

LineEnsemble mcmc_sweep(LineEnsemble state, const BoundaryData& outer, const Hamiltonian& h,
                        Rng& rng, std::span<const Block> blocks, const SweepOptions& opts) {
  outer.validate(state.grid());
  for (const Block& b : blocks) resample_block(state, outer, h, rng, b, opts);
  return state;
}

LineEnsemble mcmc_sweep(LineEnsemble state, const BoundaryData& outer, const Hamiltonian& h,
                        Rng& rng, const Block& block, const SweepOptions& opts) {
  return mcmc_sweep(std::move(state), outer, h, rng, std::span<const Block>(&block, 1), opts);
}

// ---------------------------------------------------------------------------
// Heat bath
// ---------------------------------------------------------------------------

namespace {

struct SiteDensity {
  const SiteConditional& s;
  const Hamiltonian& h;
  double mu;
  double sigma;
  double inv_two_var;

  SiteDensity(const SiteConditional& site, const Hamiltonian& ham)
      : s(site),
        h(ham),
        mu(0.5 * (site.left + site.right)),
        sigma(std::sqrt(0.5 * site.dt)),
        inv_two_var(1.0 / site.dt) {}

  double log_density(double v) const {
    const double z = v - mu;
    double e = -z * z * inv_two_var;
    if (h.is_ordered()) {
      return (v < s.above && v > s.below) ? e : -kInf;
    }
    if (s.above != kInf) e -= s.dt * h.eval(v - s.above);
    if (s.below != -kInf) e -= s.dt * h.eval(s.below - v);
    return e;
  }

  // log_density at lattice nodes (m0 + i) * step. The exponential terms are
  // advanced by a constant factor per node and refreshed every kChunk nodes.
  void fill(long long m0, std::size_t count, double step, std::vector<double>& out) const {
    out.resize(count);
    if (h.is_ordered()) {
      for (std::size_t i = 0; i < count; ++i) {
        out[i] = log_density(static_cast<double>(m0 + static_cast<long long>(i)) * step);
      }
      return;
    }
    constexpr std::size_t kChunk = 32;
    const double q_up = std::exp(h.rate() * step);
    const double q_dn = 1.0 / q_up;
    const bool has_up = s.above != kInf;
    const bool has_dn = s.below != -kInf;
    for (std::size_t i0 = 0; i0 < count; i0 += kChunk) {
      const double v0 = static_cast<double>(m0 + static_cast<long long>(i0)) * step;
      double up = has_up ? h.eval(v0 - s.above) : 0.0;
      double dn = has_dn ? h.eval(s.below - v0) : 0.0;
      const std::size_t i1 = std::min(count, i0 + kChunk);
      for (std::size_t i = i0; i < i1; ++i) {
        const double z = static_cast<double>(m0 + static_cast<long long>(i)) * step - mu;
        out[i] = -z * z * inv_two_var - s.dt * (up + dn);
        up *= q_up;
        dn *= q_dn;
      }
    }
  }
};

double lattice_step(const SiteConditional& s, const HeatBathOptions& o) {
  return 2.0 * o.span_sigmas * std::sqrt(0.5 * s.dt) / (o.lattice_points - 1);
}

// Value range carrying all but ~1e-12 of the site's mass.
std::pair<double, double> site_range(const SiteDensity& d, const HeatBathOptions& o) {
  const double span = o.span_sigmas * d.sigma;
  double lo = d.mu - span;
  double hi = d.mu + span;
  const bool ordered = d.h.is_ordered();
  if (ordered) {
    if (d.s.above <= lo) {
      hi = d.s.above;
      lo = std::max(d.s.below, hi - 2.0 * span);
    } else if (d.s.below >= hi) {
      lo = d.s.below;
      hi = std::min(d.s.above, lo + 2.0 * span);
    } else {
      lo = std::max(lo, d.s.below);
      hi = std::min(hi, d.s.above);
    }
  }
  constexpr int kProbe = 65;
  for (int ext = 0; ext < o.max_extensions; ++ext) {
    double mx = -kInf;
    for (int i = 0; i < kProbe; ++i) {
      mx = std::max(mx, d.log_density(lo + (hi - lo) * i / (kProbe - 1)));
    }
    if (mx == -kInf) break;
    const bool grow_lo = !(ordered && lo <= d.s.below) && d.log_density(lo) > mx + o.log_tail_cutoff;
    const bool grow_hi = !(ordered && hi >= d.s.above) && d.log_density(hi) > mx + o.log_tail_cutoff;
    if (!grow_lo && !grow_hi) break;
    if (grow_lo) lo = ordered ? std::max(d.s.below, lo - span) : lo - span;
    if (grow_hi) hi = ordered ? std::min(d.s.above, hi + span) : hi + span;
  }
  return {lo, hi};
}

// Inverse CDF of the density interpolated on the absolute lattice m * step,
// m in [m0, m1]. Cell masses are trapezoids, uniform within a cell.
double sample_on_lattice(const SiteDensity& d, long long m0, long long m1, double step, double u,
                         std::vector<double>& buf) {
  const auto count = static_cast<std::size_t>(m1 - m0 + 1);
  d.fill(m0, count, step, buf);
  double mx = -kInf;
  for (double x : buf) mx = std::max(mx, x);
  double v;
  if (mx == -kInf || count < 2) {
    // No lattice node inside the support (only possible for a very narrow
    // ordered gap): fall back to a uniform draw across the gap.
    const double lo = std::isfinite(d.s.below) ? d.s.below : d.mu - d.sigma;
    const double hi = std::isfinite(d.s.above) ? d.s.above : d.mu + d.sigma;
    v = lo + u * (hi - lo);
  } else {
    double total = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      // Nodes below e^-60 of the peak carry no usable mass.
      buf[i] = buf[i] - mx < -60.0 ? 0.0 : std::exp(buf[i] - mx);
      if (i > 0) total += 0.5 * (buf[i - 1] + buf[i]);
    }
    const double target = u * total;
    double cum = 0.0;
    v = static_cast<double>(m1) * step;
    for (std::size_t i = 0; i + 1 < count; ++i) {
      const double c = 0.5 * (buf[i] + buf[i + 1]);
      if (cum + c > target && c > 0.0) {
        v = (static_cast<double>(m0 + static_cast<long long>(i)) + (target - cum) / c) * step;
        break;
      }
      cum += c;
    }
  }
  if (d.h.is_ordered()) {
    if (v >= d.s.above) v = std::nextafter(d.s.above, -kInf);
    if (v <= d.s.below) v = std::nextafter(d.s.below, kInf);
  }
  return v;
}

thread_local std::vector<double> g_lattice_buf;

}  // namespace

double heat_bath_site(const SiteConditional& site, const Hamiltonian& h, double u,
                      const HeatBathOptions& opts) {
  const SiteDensity d(site, h);
  const double step = lattice_step(site, opts);
  const auto [lo, hi] = site_range(d, opts);
  return sample_on_lattice(d, static_cast<long long>(std::floor(lo / step)),
                           static_cast<long long>(std::ceil(hi / step)), step, u,
                           g_lattice_buf);
}

std::pair<double, double> heat_bath_site_coupled(const SiteConditional& lo,
                                                 const SiteConditional& hi, const Hamiltonian& h,
                                                 double u, const HeatBathOptions& opts) {
  const SiteDensity dlo(lo, h);
  const SiteDensity dhi(hi, h);
  const double step = lattice_step(lo, opts);
  const auto [a0, b0] = site_range(dlo, opts);
  const auto [a1, b1] = site_range(dhi, opts);
  // lo keeps its own upper end and hi its own lower end; extending lo down
  // and hi up to the other's range keeps the node masses MLR-ordered.
  const double vlo = sample_on_lattice(dlo, static_cast<long long>(std::floor(std::min(a0, a1) / step)),
                                       static_cast<long long>(std::ceil(b0 / step)), step, u,
                                       g_lattice_buf);
  const double vhi = sample_on_lattice(dhi, static_cast<long long>(std::floor(a1 / step)),
                                       static_cast<long long>(std::ceil(std::max(b0, b1) / step)),
                                       step, u, g_lattice_buf);
  return {vlo, vhi};
}

namespace {

SiteConditional site_at(const LineEnsemble& s, const BoundaryData& outer, int row, int j) {
  const int k = s.k();
  return SiteConditional{s.at(row, j - 1), s.at(row, j + 1),
                         row == 0 ? outer.upper.at(j) : s.at(row - 1, j),
                         row == k - 1 ? outer.lower.at(j) : s.at(row + 1, j),
                         s.grid().spacing()};
}

bool boundary_leq(const BoundaryCurve& lo, const BoundaryCurve& hi, int n) {
  for (int j = 0; j < n; ++j) {
    if (lo.at(j) > hi.at(j)) return false;
  }
  return true;
}

bool strictly_ordered(const LineEnsemble& s, const BoundaryData& outer) {
  for (int j = 1; j + 1 < s.grid().size(); ++j) {
    double above = outer.upper.at(j);
    for (int row = 0; row < s.k(); ++row) {
      if (!(s.at(row, j) < above)) return false;
      above = s.at(row, j);
    }
    if (!(outer.lower.at(j) < above)) return false;
  }
  return true;
}

}  // namespace

void heat_bath_sweep(LineEnsemble& state, const BoundaryData& outer, const Hamiltonian& h,
                     Rng& rng, const HeatBathOptions& opts) {
  outer.validate(state.grid());
  const int n = state.grid().size();
  for (int row = 0; row < state.k(); ++row) {
    for (int j = 1; j + 1 < n; ++j) {
      state.at(row, j) = heat_bath_site(site_at(state, outer, row, j), h, rng.uniform(), opts);
    }
  }
}

std::pair<LineEnsemble, LineEnsemble> monotone_coupled_sweep(
    LineEnsemble lo, LineEnsemble hi, const BoundaryData& outer_lo, const BoundaryData& outer_hi,
    const Hamiltonian& h, Rng& shared_rng, const HeatBathOptions& opts) {
  if (!(lo.grid() == hi.grid()) || lo.k() != hi.k()) {
    throw OrderViolationInput("coupled states must share grid and curve count");
  }
  outer_lo.validate(lo.grid());
  outer_hi.validate(hi.grid());
  const int n = lo.grid().size();
  if (count_order_violations(lo, hi) != 0) {
    throw OrderViolationInput("lower state exceeds upper state somewhere");
  }
  if (!boundary_leq(outer_lo.upper, outer_hi.upper, n) ||
      !boundary_leq(outer_lo.lower, outer_hi.lower, n)) {
    throw OrderViolationInput("outer boundaries are not ordered");
  }
  if (h.is_ordered() && (!strictly_ordered(lo, outer_lo) || !strictly_ordered(hi, outer_hi))) {
    throw OrderViolationInput("Ordered Hamiltonian needs strictly ordered states");
  }
  for (int row = 0; row < lo.k(); ++row) {
    for (int j = 1; j + 1 < n; ++j) {
      const double u = shared_rng.uniform();
      const auto [vlo, vhi] = heat_bath_site_coupled(site_at(lo, outer_lo, row, j),
                                                     site_at(hi, outer_hi, row, j), h, u, opts);
      lo.at(row, j) = vlo;
      hi.at(row, j) = vhi;
    }
  }
  return {std::move(lo), std::move(hi)};
}

std::int64_t count_order_violations(const LineEnsemble& lo, const LineEnsemble& hi) {
  std::int64_t bad = 0;
  for (int row = 0; row < lo.k(); ++row) {
    for (int j = 0; j < lo.grid().size(); ++j) {
      if (lo.at(row, j) > hi.at(row, j)) ++bad;
    }
  }
  return bad;
}

StoppingDomain first_hitting_domain(const Path& curve, double level,
                                    std::pair<double, double> left_search,
                                    std::pair<double, double> right_search) {
  const Grid& g = curve.grid;
  const int l0 = g.index_of(left_search.first);
  const int l1 = g.index_of(left_search.second);
  const int r0 = g.index_of(right_search.first);
  const int r1 = g.index_of(right_search.second);
  if (l0 > l1 || r0 > r1 || l1 > r0) {
    throw InvalidInterval("search intervals must satisfy l0 <= l1 <= r0 <= r1");
  }
  StoppingDomain out{g.point(l0), g.point(r1), false, false};
  for (int j = l0; j <= l1; ++j) {
    if (curve[j] >= level) {
      out.left = g.point(j);
      out.hit_left = true;
      break;
    }
  }
  for (int j = r1; j >= r0; --j) {
    if (curve[j] >= level) {
      out.right = g.point(j);
      out.hit_right = true;
      break;
    }
  }
  return out;
}

}  // namespace lineens
