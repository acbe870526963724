#include "lineens/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <thread>

#include "lineens/bridge.hpp"
#include "lineens/gibbs.hpp"
#include "lineens/rng.hpp"
#include "lineens/stats.hpp"

namespace lineens {

// ---------------------------------------------------------------------------
// Report plumbing
// ---------------------------------------------------------------------------

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void ExperimentReport::add_config(std::string key, std::string value) {
  config.emplace_back(std::move(key), std::move(value));
}

void ExperimentReport::add_config(std::string key, double value) {
  config.emplace_back(std::move(key), format_real(value));
}

void ExperimentReport::add_estimate(std::string label, McEstimate e) {
  estimates.push_back({std::move(label), e});
}

void ExperimentReport::add_value(std::string label, double value, std::int64_t n,
                                 std::uint64_t seed) {
  estimates.push_back({std::move(label), McEstimate{value, 0.0, n, seed}});
}

void ExperimentReport::add_check(std::string label, bool pass, std::string detail) {
  checks.push_back({std::move(label), pass, std::move(detail)});
}

bool ExperimentReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const ReportCheck& c) { return c.pass; });
}

const McEstimate& ExperimentReport::estimate(std::string_view label) const {
  for (const auto& e : estimates)
    if (e.label == label) return e.estimate;
  throw std::out_of_range("no estimate labelled " + std::string(label));
}

const ReportCheck& ExperimentReport::check(std::string_view label) const {
  for (const auto& c : checks)
    if (c.label == label) return c;
  throw std::out_of_range("no check labelled " + std::string(label));
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Work is cut into fixed chunks, each with its own stream, so results do not
// depend on how many threads process them.
constexpr std::int64_t kChunk = 256;

void for_each_chunk(std::int64_t n, int threads,
                    const std::function<void(std::uint64_t, std::int64_t, std::int64_t)>& body) {
  const std::int64_t chunks = (n + kChunk - 1) / kChunk;
  auto run = [&](std::int64_t c) {
    body(static_cast<std::uint64_t>(c), c * kChunk, std::min(n, (c + 1) * kChunk));
  };
  if (threads <= 1 || chunks <= 1) {
    for (std::int64_t c = 0; c < chunks; ++c) run(c);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  const int used = static_cast<int>(std::min<std::int64_t>(threads, chunks));
  for (int i = 0; i < used; ++i) {
    pool.emplace_back([&] {
      for (std::int64_t c = next++; c < chunks && !failed; c = next++) {
        try {
          run(c);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

McEstimate as_estimate(const stats::WeightedProportion& wp, std::int64_t n, std::uint64_t seed) {
  return {wp.mean, wp.std_error, n, seed};
}

McEstimate proportion(std::span<const char> ind, std::uint64_t seed) {
  MeanAccumulator acc;
  for (char c : ind) acc.add(c ? 1.0 : 0.0);
  return acc.estimate(seed);
}

double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// -log(alpha q/p + 1 - alpha): the free-to-mixture density ratio, given
// log(q/p) for the tilted law (-inf outside its support).
double log_mixture_ratio(double alpha, double log_q_over_p) {
  const double la = alpha > 0.0 ? std::log(alpha) + log_q_over_p : -kInf;
  const double lb = alpha < 1.0 ? std::log1p(-alpha) : -kInf;
  return -log_add_exp(la, lb);
}

bool is_multiple(double v, int per_unit) {
  const double s = v * per_unit;
  return std::abs(s - std::round(s)) <= 1e-9 * std::max(1.0, std::abs(s));
}

// Gaussian pin of a bridge from (0, x) to (T, y) at time s, optionally
// truncated to [lo, hi]. Returns the value and, when truncated, log of the
// interval mass under the untruncated law.
struct Pin {
  double value;
  double log_mass;
  bool inside;
};

Pin draw_pin(double x, double y, double T, double s, double lo, double hi, bool tilt, Rng& rng) {
  const double mean = x + (y - x) * s / T;
  const double sd = std::sqrt(s * (T - s) / T);
  const double zlo = (lo - mean) / sd;
  const double zhi = (hi - mean) / sd;
  const double z = tilt ? stats::sample_truncated_normal(rng, zlo, zhi) : rng.normal();
  const double v = mean + sd * z;
  return {v, stats::log_normal_interval_mass(zlo, zhi), v >= lo && v <= hi};
}

struct PinMass {
  double log_mass;
  bool inside;
};

// Band mass of the pin law and whether `v` lies in the band.
PinMass pin_mass(double x, double y, double T, double s, double lo, double hi, double v) {
  const double mean = x + (y - x) * s / T;
  const double sd = std::sqrt(s * (T - s) / T);
  return {stats::log_normal_interval_mass((lo - mean) / sd, (hi - mean) / sd), v >= lo && v <= hi};
}

double min_over(std::span<const double> c, int a, int b) {
  return *std::min_element(c.begin() + a, c.begin() + b + 1);
}

double max_over(std::span<const double> c, int a, int b) {
  return *std::max_element(c.begin() + a, c.begin() + b + 1);
}

void require(std::vector<std::string>& problems, bool ok, std::string msg) {
  if (!ok) problems.push_back(std::move(msg));
}

void throw_if_any(std::vector<std::string> problems) {
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

}  // namespace

// ---------------------------------------------------------------------------
// Separation
// ---------------------------------------------------------------------------

void SeparationConfig::validate() const {
  std::vector<std::string> p;
  require(p, k >= 1 && k <= 4, "k must lie in 1..4");
  require(p, L >= 1.0, "L must be >= 1");
  require(p, t >= 1.0 && t <= 1e3, "t must lie in [1, 1000]");
  require(p, M >= std::sqrt(L), "M must satisfy M >= sqrt(L) (got M = " + format_real(M) +
                                    ", sqrt(L) = " + format_real(std::sqrt(L)) + ")");
  require(p, n_samples >= 1 && n_samples <= 1000000, "n_samples must lie in 1..1e6");
  require(p, points_per_unit >= 32, "points_per_unit must be >= 32");
  require(p, L >= 1.0 && is_multiple(L, points_per_unit), "L must be a multiple of 1/points_per_unit");
  require(p, k < 1 || k > 4 || 2.0 * (k + 1) * L * points_per_unit + 1 <= 8193.0,
          "grid exceeds 8193 points");
  require(p, proposal_mix >= 0.0 && proposal_mix < 1.0, "proposal_mix must lie in [0, 1)");
  require(p, min_ess > 0.0, "min_ess must be positive");
  require(p, z_boundaries >= 1, "z_boundaries must be >= 1");
  require(p, z_samples >= 1, "z_samples must be >= 1");
  require(p, threads >= 1, "threads must be >= 1");
  throw_if_any(std::move(p));
}

namespace {

struct SeparationSetup {
  int k;
  double L;
  double M;
  Grid grid;
  std::vector<int> left;   // index of l_j, j = 1..k+1
  std::vector<int> right;  // index of r_j
  int pin_lo;              // index of -L
  int pin_hi;              // index of  L
  std::vector<double> level;  // f_j, j = 1..k+1
  std::vector<double> band_lo;
  std::vector<double> band_hi;
  ConditionalSpec spec;
  LineEnsemble base;

  explicit SeparationSetup(const SeparationConfig& cfg)
      : k(cfg.k),
        L(cfg.L),
        M(cfg.M),
        grid(-(cfg.k + 1) * cfg.L, (cfg.k + 1) * cfg.L,
             static_cast<int>(std::lround(2.0 * (cfg.k + 1) * cfg.L * cfg.points_per_unit)) + 1),
        pin_lo(grid.index_of(-cfg.L)),
        pin_hi(grid.index_of(cfg.L)),
        base(grid, cfg.k) {
    for (int j = 1; j <= k + 1; ++j) {
      left.push_back(grid.index_of(-(k + 2 - j) * L));
      right.push_back(grid.index_of((k + 2 - j) * L));
      level.push_back(M - 2.0 * M * (j - 1) / k);
    }
    for (int j = 1; j <= k; ++j) {
      band_lo.push_back((4.0 * k - 4.0 * j + 3.0) * M);
      band_hi.push_back((4.0 * k - 4.0 * j + 5.0) * M);
      auto row = base.curve(j - 1);
      std::fill(row.begin(), row.end(), level[static_cast<std::size_t>(j - 1)]);
    }
    spec.k1 = 1;
    spec.k2 = k;
    spec.a = grid.a();
    spec.b = grid.b();
    spec.boundary.x_vec.assign(level.begin(), level.begin() + k);
    spec.boundary.y_vec = spec.boundary.x_vec;
    spec.boundary.lower = BoundaryCurve::curve(Path::constant(grid, level.back()));
    spec.hamiltonian = Hamiltonian::scaled_exp(cfg.t);
    spec.window = Window{-L, L};
    spec.validate(grid);
  }
};

struct SeparationSamples {
  std::vector<double> log_w;
  std::vector<char> in_e;
  std::vector<char> in_a;
  std::vector<char> in_f;
  std::vector<double> pins;  // per sample: k values at -L, then k at L
  std::int64_t f_outside_e = 0;
};

SeparationSamples draw_separation(const SeparationConfig& cfg, const SeparationSetup& s) {
  const auto n = static_cast<std::size_t>(cfg.n_samples);
  const int k = s.k;
  SeparationSamples out;
  out.log_w.resize(n);
  out.in_e.resize(n);
  out.in_a.resize(n);
  out.in_f.resize(n);
  out.pins.resize(n * 2 * static_cast<std::size_t>(k));
  std::vector<std::int64_t> violations(
      static_cast<std::size_t>((cfg.n_samples + kChunk - 1) / kChunk), 0);
  const double dt = s.grid.spacing();

  for_each_chunk(cfg.n_samples, cfg.threads, [&](std::uint64_t chunk, std::int64_t i0,
                                                 std::int64_t i1) {
    Rng rng(cfg.seed, chunk);
    LineEnsemble ens = s.base;
    for (std::int64_t i = i0; i < i1; ++i) {
      const bool tilt = rng.uniform() < cfg.proposal_mix;
      double log_q_over_p = 0.0;
      bool e = true;
      for (int j = 0; j < k; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        const int a = s.left[ju];
        const int b = s.right[ju];
        const double x = s.level[ju];
        const double T = (b - a) * dt;
        const Pin p1 = draw_pin(x, x, T, (s.pin_lo - a) * dt, s.band_lo[ju], s.band_hi[ju], tilt, rng);
        const Pin p2 = draw_pin(p1.value, x, (b - s.pin_lo) * dt, (s.pin_hi - s.pin_lo) * dt,
                                s.band_lo[ju], s.band_hi[ju], tilt, rng);
        if (p1.inside && p2.inside) {
          log_q_over_p -= p1.log_mass + p2.log_mass;
        } else {
          e = false;
        }
        auto row = ens.curve(j);
        sample_bridge_into(row.subspan(a, s.pin_lo - a + 1), dt, x, p1.value, rng);
        sample_bridge_into(row.subspan(s.pin_lo, s.pin_hi - s.pin_lo + 1), dt, p1.value, p2.value, rng);
        sample_bridge_into(row.subspan(s.pin_hi, b - s.pin_hi + 1), dt, p2.value, x, rng);
      }
      const auto iu = static_cast<std::size_t>(i);
      out.log_w[iu] = log_boltzmann_weight(ens, s.spec) +
                      log_mixture_ratio(cfg.proposal_mix, e ? log_q_over_p : -kInf);

      bool all_a = true;
      bool all_f = true;
      for (int j = 0; j < k; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        auto row = ens.curve(j);
        out.pins[iu * 2 * static_cast<std::size_t>(k) + ju] = row[static_cast<std::size_t>(s.pin_lo)];
        out.pins[iu * 2 * static_cast<std::size_t>(k) + static_cast<std::size_t>(k) + ju] =
            row[static_cast<std::size_t>(s.pin_hi)];
        const int ia = s.left[ju + 1];
        const int ib = s.right[ju + 1];
        const double inner_min = min_over(row, ia, ib);
        const double inner_max = max_over(row, ia, ib);
        const double outer_max = max_over(row, s.left[ju], s.right[ju]);
        if (inner_min < (4.0 * k - 4.0 * (j + 1) + 4.0) * s.M) all_a = false;
        if (inner_min < s.band_lo[ju] || inner_max > s.band_hi[ju] || outer_max > s.band_hi[ju])
          all_f = false;
      }
      out.in_e[iu] = e;
      out.in_a[iu] = all_a;
      out.in_f[iu] = all_f;
      if (all_f && !e) ++violations[chunk];
    }
  });
  for (auto v : violations) out.f_outside_e += v;
  return out;
}

void echo(ExperimentReport& r, const SeparationConfig& c) {
  r.add_config("k", c.k);
  r.add_config("L", c.L);
  r.add_config("t", c.t);
  r.add_config("M", c.M);
  r.add_config("n_samples", static_cast<double>(c.n_samples));
  r.add_config("seed", std::to_string(c.seed));
  r.add_config("points_per_unit", c.points_per_unit);
  r.add_config("proposal_mix", c.proposal_mix);
  r.add_config("min_ess", c.min_ess);
}

}  // namespace

ExperimentReport run_separation_experiment(const SeparationConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();
  const SeparationSetup setup(cfg);
  const SeparationSamples s = draw_separation(cfg, setup);

  const double ess = stats::effective_sample_size_log(s.log_w);
  if (!(ess >= cfg.min_ess)) throw EffectiveSampleSizeTooSmall(ess, cfg.min_ess);

  ExperimentReport r;
  r.name = "separation";
  echo(r, cfg);
  const auto n = cfg.n_samples;
  const auto pe = stats::weighted_proportion(s.log_w, s.in_e);
  const auto pa = stats::weighted_proportion(s.log_w, s.in_a);
  const auto pf = stats::weighted_proportion(s.log_w, s.in_f);
  r.add_estimate("P(E)", as_estimate(pe, n, cfg.seed));
  r.add_estimate("P(A)", as_estimate(pa, n, cfg.seed));
  r.add_estimate("P(F)", as_estimate(pf, n, cfg.seed));
  r.add_value("ESS", ess, n, cfg.seed);
  r.add_value("ESS(E)", pe.ess, n, cfg.seed);
  r.add_value("ESS(A)", pa.ess, n, cfg.seed);
  r.add_value("ESS(F)", pf.ess, n, cfg.seed);
  const double scale = cfg.M * cfg.M / cfg.L + cfg.L;
  const double log_pe = pe.mean > 0.0 ? std::log(pe.mean) : -kInf;
  r.add_estimate("log P(E)", {log_pe, pe.mean > 0.0 ? pe.std_error / pe.mean : 0.0, n, cfg.seed});
  const double d_fit = -log_pe / scale;
  r.add_value("D_fit", d_fit, n, cfg.seed);

  r.add_check("P(E) > 0", pe.mean > 0.0, "P(E) = " + format_real(pe.mean));
  r.add_check("ESS(E) >= min_ess", pe.ess >= cfg.min_ess, "ESS(E) = " + format_real(pe.ess));
  r.add_check("F subset of E samplewise", s.f_outside_e == 0,
              std::to_string(s.f_outside_e) + " samples in F outside E");
  r.add_check("P(F) <= P(E)", pf.mean <= pe.mean,
              format_real(pf.mean) + " vs " + format_real(pe.mean));
  r.add_check("log P(E) >= -D (M^2/L + L)", std::isfinite(d_fit),
              "D = " + format_real(d_fit));
  r.runtime_seconds = seconds_since(start);
  return r;
}

ExperimentReport run_z_lowerbound_experiment(const SeparationConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();
  const SeparationSetup setup(cfg);
  const SeparationSamples s = draw_separation(cfg, setup);
  const double ess = stats::effective_sample_size_log(s.log_w);
  if (!(ess >= cfg.min_ess)) throw EffectiveSampleSizeTooSmall(ess, cfg.min_ess);

  // Systematic resampling of E-samples by weight.
  std::vector<std::size_t> e_idx;
  double mx = -kInf;
  for (std::size_t i = 0; i < s.log_w.size(); ++i) {
    if (s.in_e[i] && s.log_w[i] > -kInf) {
      e_idx.push_back(i);
      mx = std::max(mx, s.log_w[i]);
    }
  }
  if (e_idx.empty()) throw ZeroHits("no importance sample realizes E");
  std::vector<double> cum;
  double total = 0.0;
  for (auto i : e_idx) cum.push_back(total += std::exp(s.log_w[i] - mx));
  const auto nb = static_cast<std::size_t>(cfg.z_boundaries);
  std::vector<std::size_t> chosen(nb);
  {
    Rng rng(cfg.seed, 0xB0B0u);
    const double u0 = rng.uniform();
    std::size_t pos = 0;
    for (std::size_t b = 0; b < nb; ++b) {
      const double target = (u0 + static_cast<double>(b)) / static_cast<double>(nb) * total;
      while (pos + 1 < cum.size() && cum[pos] < target) ++pos;
      chosen[b] = e_idx[pos];
    }
  }

  const int k = cfg.k;
  const Grid sub = setup.grid.slice(setup.pin_lo, setup.pin_hi);
  const double floor_w = -2.0 * k * cfg.L;
  std::vector<double> z_hat(nb);
  std::vector<double> p_osc(nb);
  std::vector<std::int64_t> osc_violations(nb, 0);
  std::vector<std::int64_t> osc_count(nb, 0);

  const std::uint64_t stream_base = 1ull << 40;
  for_each_chunk(static_cast<std::int64_t>(nb), cfg.threads,
                 [&](std::uint64_t chunk, std::int64_t b0, std::int64_t b1) {
    Rng rng(cfg.seed, stream_base + chunk);
    for (std::int64_t b = b0; b < b1; ++b) {
      const auto bu = static_cast<std::size_t>(b);
      const double* pins = &s.pins[chosen[bu] * 2 * static_cast<std::size_t>(k)];
      ConditionalSpec spec;
      spec.k1 = 1;
      spec.k2 = k;
      spec.a = sub.a();
      spec.b = sub.b();
      spec.boundary.x_vec.assign(pins, pins + k);
      spec.boundary.y_vec.assign(pins + k, pins + 2 * k);
      spec.boundary.lower = BoundaryCurve::curve(Path::constant(sub, setup.level.back()));
      spec.hamiltonian = Hamiltonian::scaled_exp(cfg.t);
      MeanAccumulator w;
      std::int64_t hits = 0;
      for (std::int64_t m = 0; m < cfg.z_samples; ++m) {
        const LineEnsemble ens =
            sample_free_ensemble(sub, spec.boundary.x_vec, spec.boundary.y_vec, rng);
        const double lw = log_boltzmann_weight(ens, spec);
        w.add(std::exp(lw));
        bool osc = true;
        for (int j = 0; j < k && osc; ++j) {
          auto row = ens.curve(j);
          const int last = sub.size() - 1;
          for (int q = 0; q <= last; ++q) {
            const double lin = row[0] + (row[static_cast<std::size_t>(last)] - row[0]) * q / last;
            if (std::abs(row[static_cast<std::size_t>(q)] - lin) > cfg.M) {
              osc = false;
              break;
            }
          }
        }
        if (osc) {
          ++hits;
          if (lw < floor_w - 1e-9) ++osc_violations[bu];
        }
      }
      z_hat[bu] = w.mean();
      osc_count[bu] = hits;
      p_osc[bu] = static_cast<double>(hits) / static_cast<double>(cfg.z_samples);
    }
  });

  ExperimentReport r;
  r.name = "z_lowerbound";
  echo(r, cfg);
  r.add_config("z_boundaries", static_cast<double>(cfg.z_boundaries));
  r.add_config("z_samples", static_cast<double>(cfg.z_samples));

  MeanAccumulator zacc;
  MeanAccumulator oacc;
  double z_min = kInf;
  double d4 = 1.0;
  bool z_in_range = true;
  bool z_ge_osc = true;
  std::int64_t violations = 0;
  std::int64_t osc_total = 0;
  const double e2kl = std::exp(floor_w);
  for (std::size_t b = 0; b < nb; ++b) {
    zacc.add(z_hat[b]);
    oacc.add(p_osc[b]);
    z_min = std::min(z_min, z_hat[b]);
    d4 = std::max(d4, z_hat[b] > 0.0 ? e2kl / z_hat[b] : kInf);
    if (!(z_hat[b] > 0.0 && z_hat[b] <= 1.0)) z_in_range = false;
    if (z_hat[b] < e2kl * p_osc[b]) z_ge_osc = false;
    violations += osc_violations[b];
    osc_total += osc_count[b];
  }
  r.add_estimate("mean Z | E", zacc.estimate(cfg.seed));
  r.add_value("min Z | E", z_min, static_cast<std::int64_t>(nb), cfg.seed);
  r.add_value("D4_fit", d4, static_cast<std::int64_t>(nb), cfg.seed);
  r.add_estimate("P(Osc | E)", oacc.estimate(cfg.seed));
  r.add_value("Osc draws", static_cast<double>(osc_total), cfg.z_samples * static_cast<std::int64_t>(nb),
              cfg.seed);
  r.add_value("ESS", ess, cfg.n_samples, cfg.seed);

  r.add_check("Z in (0, 1] for every boundary", z_in_range, "min Z = " + format_real(z_min));
  r.add_check("log W >= -2kL on E and Osc", violations == 0,
              std::to_string(violations) + " of " + std::to_string(osc_total) + " draws below");
  r.add_check("Z >= exp(-2kL) P(Osc) for every boundary", z_ge_osc, "");
  r.add_check("mean Z | E >= exp(-2kL) / D4", zacc.mean() >= e2kl / d4,
              format_real(zacc.mean()) + " vs " + format_real(e2kl / d4));
  r.runtime_seconds = seconds_since(start);
  return r;
}

// ---------------------------------------------------------------------------
// Ordering
// ---------------------------------------------------------------------------

void OrderingConfig::validate() const {
  std::vector<std::string> p;
  require(p, k >= 1 && k <= 4, "k must lie in 1..4");
  require(p, !t_list.empty(), "t_list must not be empty");
  for (double t : t_list) require(p, t > 0.0 && t <= 1e3, "every t must lie in (0, 1000]");
  require(p, gap > 0.0, "gap must be positive");
  require(p, !std::isnan(rho), "rho must be a number");
  require(p, n >= 2 && n <= 1000000, "n must lie in 2..1e6");
  require(p, grid_points >= 17 && grid_points <= 8193 && (grid_points - 1) % 4 == 0,
          "grid_points must be 4m+1 with 17 <= grid_points <= 8193");
  require(p, burn_in >= 1, "burn_in must be >= 1");
  require(p, threads >= 1, "threads must be >= 1");
  throw_if_any(std::move(p));
}

ExperimentReport run_ordering_experiment(const OrderingConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();
  const int curves = cfg.k + 1;
  const Grid grid(-2.0, 2.0, cfg.grid_points);
  const int last = grid.size() - 1;
  const int i_lo = grid.index_of(-1.0);
  const int i_hi = grid.index_of(1.0);

  BoundaryData outer;
  for (int i = 1; i <= curves; ++i) {
    outer.x_vec.push_back(-(i - 1) * cfg.gap);
    outer.y_vec.push_back(-(i - 1) * cfg.gap);
  }
  outer.lower = BoundaryCurve::curve(Path::constant(grid, -curves * cfg.gap));

  // Each curve is resampled on two overlapping halves.
  const int overlap = last / 8;
  std::vector<Block> blocks;
  for (int i = 1; i <= curves; ++i) {
    blocks.push_back({i, i, 0, last / 2 + overlap});
    blocks.push_back({i, i, last / 2 - overlap, last});
  }

  LineEnsemble init(grid, curves);
  for (int i = 0; i < curves; ++i) {
    auto row = init.curve(i);
    for (int j = 0; j <= last; ++j)
      row[static_cast<std::size_t>(j)] =
          outer.x_vec[static_cast<std::size_t>(i)] +
          (outer.y_vec[static_cast<std::size_t>(i)] - outer.x_vec[static_cast<std::size_t>(i)]) * j / last;
  }

  ExperimentReport r;
  r.name = "ordering";
  r.add_config("k", cfg.k);
  std::string tl;
  for (double t : cfg.t_list) tl += (tl.empty() ? "" : ",") + format_real(t);
  r.add_config("t_list", tl);
  r.add_config("gap", cfg.gap);
  r.add_config("rho", cfg.rho);
  r.add_config("n", static_cast<double>(cfg.n));
  r.add_config("seed", std::to_string(cfg.seed));
  r.add_config("grid_points", cfg.grid_points);
  r.add_config("burn_in", cfg.burn_in);

  const auto n = static_cast<std::size_t>(cfg.n);
  std::vector<McEstimate> per_t;
  for (std::size_t ti = 0; ti < cfg.t_list.size(); ++ti) {
    const double t = cfg.t_list[ti];
    const Hamiltonian h = Hamiltonian::scaled_exp(t);
    std::vector<double> gap_early(n);
    std::vector<double> gap_late(n);
    for_each_chunk(cfg.n, cfg.threads, [&](std::uint64_t chunk, std::int64_t c0, std::int64_t c1) {
      Rng rng(cfg.seed, (static_cast<std::uint64_t>(ti) << 32) + chunk);
      for (std::int64_t c = c0; c < c1; ++c) {
        LineEnsemble state = init;
        auto min_gap = [&] {
          auto up = state.curve(cfg.k - 1);
          auto down = state.curve(cfg.k);
          double g = kInf;
          for (int j = i_lo; j <= i_hi; ++j)
            g = std::min(g, up[static_cast<std::size_t>(j)] - down[static_cast<std::size_t>(j)]);
          return g;
        };
        for (int s = 0; s < cfg.burn_in; ++s) state = mcmc_sweep(std::move(state), outer, h, rng, blocks);
        gap_early[static_cast<std::size_t>(c)] = min_gap();
        for (int s = 0; s < cfg.burn_in; ++s) state = mcmc_sweep(std::move(state), outer, h, rng, blocks);
        gap_late[static_cast<std::size_t>(c)] = min_gap();
      }
    });
    std::vector<char> early(n);
    std::vector<char> late(n);
    for (std::size_t c = 0; c < n; ++c) {
      early[c] = gap_early[c] < cfg.rho;
      late[c] = gap_late[c] < cfg.rho;
    }
    const McEstimate pe = proportion(early, cfg.seed);
    const McEstimate pl = proportion(late, cfg.seed);
    const double tol = 3.0 * std::hypot(pe.std_error, pl.std_error);
    if (std::abs(pe.mean - pl.mean) > tol + 1e-12) {
      throw MixingDiagnosticFailure("t = " + format_real(t) + ": P(min gap < rho) is " +
                                    format_real(pe.mean) + " after " + std::to_string(cfg.burn_in) +
                                    " sweeps and " + format_real(pl.mean) + " after " +
                                    std::to_string(2 * cfg.burn_in));
    }
    const std::string tag = "t=" + format_real(t);
    r.add_estimate("P(min gap < rho) " + tag, pl);
    r.add_estimate("P(min gap < rho) half burn-in " + tag, pe);
    std::sort(gap_late.begin(), gap_late.end());
    for (int pct : {5, 25, 50, 75, 95}) {
      const auto idx = static_cast<std::size_t>(pct) * (n - 1) / 100;
      r.add_value("min gap q" + std::to_string(pct) + " " + tag, gap_late[idx], cfg.n, cfg.seed);
    }
    per_t.push_back(pl);
  }
  for (std::size_t i = 1; i < per_t.size(); ++i) {
    const double tol = 3.0 * std::hypot(per_t[i].std_error, per_t[i - 1].std_error);
    r.add_check("nonincreasing t=" + format_real(cfg.t_list[i - 1]) + " -> t=" +
                    format_real(cfg.t_list[i]),
                per_t[i].mean <= per_t[i - 1].mean + tol,
                format_real(per_t[i - 1].mean) + " -> " + format_real(per_t[i].mean) +
                    " (tolerance " + format_real(tol) + ")");
  }
  r.runtime_seconds = seconds_since(start);
  return r;
}

// ---------------------------------------------------------------------------
// Fluctuation
// ---------------------------------------------------------------------------

void FluctuationConfig::validate() const {
  std::vector<std::string> p;
  require(p, d > 0.0 && d <= 1.0, "d must lie in (0, 1]");
  require(p, !K_list.empty(), "K_list must not be empty");
  for (double K : K_list) require(p, K >= 0.0, "every K must be >= 0");
  require(p, boundary_box >= 0.0, "boundary_box must be >= 0");
  require(p, boundary_spacing >= 0.0, "boundary_spacing must be >= 0");
  require(p, t > 0.0 && t <= 1e3, "t must lie in (0, 1000]");
  require(p, n >= 2 && n <= 1000000, "n must lie in 2..1e6");
  require(p, z_samples >= 1, "z_samples must be >= 1");
  require(p, grid_points >= 3 && grid_points <= 8193 && grid_points % 2 == 1,
          "grid_points must be odd and lie in 3..8193");
  if (grid_points >= 3 && grid_points % 2 == 1 && d > 0.0 && d <= 1.0)
    require(p, Grid(-1.0, 1.0, grid_points).contains_point(d), "d must be a grid point");
  require(p, threads >= 1, "threads must be >= 1");
  throw_if_any(std::move(p));
}

ExperimentReport run_fluctuation_experiment(const FluctuationConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();
  const Grid grid(-1.0, 1.0, cfg.grid_points);
  const int i0 = grid.index_of(0.0);
  const int id = grid.index_of(cfg.d);
  const Hamiltonian h = Hamiltonian::scaled_exp(cfg.t);
  const auto n = static_cast<std::size_t>(cfg.n);
  const std::size_t nk = cfg.K_list.size();
  const double root_d = std::sqrt(cfg.d);

  std::vector<double> osc(n);
  std::vector<double> z_hat(n);
  std::vector<double> box(n);
  std::vector<double> p_free(n * nk);

  for_each_chunk(cfg.n, cfg.threads, [&](std::uint64_t chunk, std::int64_t s0, std::int64_t s1) {
    Rng rng(cfg.seed, chunk);
    for (std::int64_t s = s0; s < s1; ++s) {
      const auto su = static_cast<std::size_t>(s);
      ConditionalSpec spec;
      spec.k1 = 1;
      spec.k2 = 3;
      spec.a = -1.0;
      spec.b = 1.0;
      spec.hamiltonian = h;
      for (auto* v : {&spec.boundary.x_vec, &spec.boundary.y_vec}) {
        for (int i = 0; i < 3; ++i)
          v->push_back((1 - i) * cfg.boundary_spacing + cfg.boundary_box * (2.0 * rng.uniform() - 1.0));
        std::sort(v->begin(), v->end(), std::greater<>());
      }
      double b = 0.0;
      for (int i = 0; i < 3; ++i)
        b = std::max({b, std::abs(spec.boundary.x_vec[static_cast<std::size_t>(i)]),
                      std::abs(spec.boundary.y_vec[static_cast<std::size_t>(i)])});
      box[su] = b;
      const auto top_osc = [&](const LineEnsemble& e) {
        auto row = e.curve(0);
        return max_over(row, i0, id) - min_over(row, i0, id);
      };
      osc[su] = top_osc(sample_conditional(spec, grid, rng).ensemble);
      MeanAccumulator w;
      std::vector<std::int64_t> hits(nk, 0);
      for (std::int64_t m = 0; m < cfg.z_samples; ++m) {
        const LineEnsemble e =
            sample_free_ensemble(grid, spec.boundary.x_vec, spec.boundary.y_vec, rng);
        w.add(std::exp(log_boltzmann_weight(e, spec)));
        const double o = top_osc(e);
        for (std::size_t q = 0; q < nk; ++q)
          if (o >= cfg.K_list[q] * root_d) ++hits[q];
      }
      z_hat[su] = w.mean();
      for (std::size_t q = 0; q < nk; ++q)
        p_free[su * nk + q] = static_cast<double>(hits[q]) / static_cast<double>(cfg.z_samples);
    }
  });

  ExperimentReport r;
  r.name = "fluctuation";
  r.add_config("d", cfg.d);
  std::string kl;
  for (double K : cfg.K_list) kl += (kl.empty() ? "" : ",") + format_real(K);
  r.add_config("K_list", kl);
  r.add_config("boundary_box", cfg.boundary_box);
  r.add_config("boundary_spacing", cfg.boundary_spacing);
  r.add_config("t", cfg.t);
  r.add_config("n", static_cast<double>(cfg.n));
  r.add_config("z_samples", static_cast<double>(cfg.z_samples));
  r.add_config("seed", std::to_string(cfg.seed));
  r.add_config("grid_points", cfg.grid_points);

  // C: smallest constant with exp(-K^2/C) above every sampled free tail.
  double c_fit = 0.0;
  for (std::size_t q = 0; q < nk; ++q) {
    const double K = cfg.K_list[q];
    if (K <= 0.0) continue;
    double pmax = 0.0;
    for (std::size_t s = 0; s < n; ++s)
      if (box[s] <= K) pmax = std::max(pmax, p_free[s * nk + q]);
    if (pmax >= 1.0) c_fit = kInf;
    else if (pmax > 0.0) c_fit = std::max(c_fit, K * K / -std::log(pmax));
  }
  r.add_value("C_fit", c_fit, cfg.n, cfg.seed);
  {
    std::vector<double> zs = z_hat;
    std::sort(zs.begin(), zs.end());
    for (int pct : {5, 50, 95})
      r.add_value("Z q" + std::to_string(pct), zs[static_cast<std::size_t>(pct * (n - 1) / 100)],
                  cfg.n, cfg.seed);
  }

  std::vector<double> ks;
  std::vector<double> free_tail;
  std::vector<double> bf_means;
  for (std::size_t q = 0; q < nk; ++q) {
    const double K = cfg.K_list[q];
    const double decay = c_fit > 0.0 ? std::exp(-K * K / (2.0 * c_fit)) : 0.0;
    std::vector<char> bf(n);
    std::vector<char> bad(n);
    MeanAccumulator pf;
    double surrogate = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      bf[s] = osc[s] >= K * root_d;
      const bool good = z_hat[s] >= decay && box[s] <= K;
      bad[s] = !good;
      pf.add(p_free[s * nk + q]);
      if (good) surrogate = std::max(surrogate, std::min(1.0, p_free[s * nk + q] / z_hat[s]));
    }
    const McEstimate e_bf = proportion(bf, cfg.seed);
    const McEstimate e_bad = proportion(bad, cfg.seed);
    const std::string tag = " K=" + format_real(K);
    r.add_estimate("P(BigFluc)" + tag, e_bf);
    r.add_estimate("P(GB^c)" + tag, e_bad);
    r.add_estimate("P_free(BigFluc)" + tag, pf.estimate(cfg.seed));
    r.add_value("sup-term surrogate" + tag, surrogate, cfg.n, cfg.seed);
    r.add_value("decay term" + tag, decay, cfg.n, cfg.seed);
    const double slack = 3.0 * std::hypot(e_bf.std_error, e_bad.std_error);
    r.add_check("P(BigFluc) <= P(GB^c) + sup-term" + tag,
                e_bf.mean <= e_bad.mean + surrogate + slack,
                format_real(e_bf.mean) + " vs " + format_real(e_bad.mean + surrogate));
    r.add_check("P(BigFluc) <= P(GB^c) + exp(-K^2/(2C))" + tag,
                e_bf.mean <= e_bad.mean + decay + slack,
                format_real(e_bf.mean) + " vs " + format_real(e_bad.mean + decay));
    if (K > 0.0) {
      ks.push_back(K);
      free_tail.push_back(pf.mean());
    }
    bf_means.push_back(e_bf.mean);
  }
  bool monotone = true;
  for (std::size_t a = 0; a < nk; ++a)
    for (std::size_t b = 0; b < nk; ++b)
      if (cfg.K_list[a] < cfg.K_list[b] && bf_means[b] > bf_means[a]) monotone = false;
  r.add_check("P(BigFluc) nonincreasing in K", monotone, "");
  if (!ks.empty()) {
    const double c0 = stats::fit_gaussian_decay_constant(ks, free_tail);
    r.add_value("C0_fit", c0, cfg.n, cfg.seed);
  }
  r.runtime_seconds = seconds_since(start);
  return r;
}

// ---------------------------------------------------------------------------
// Bridge jump
// ---------------------------------------------------------------------------

void BBJumpConfig::validate() const {
  std::vector<std::string> p;
  require(p, L > 0.0, "L must be positive");
  require(p, M > 0.0, "M must be positive");
  require(p, r > ell, "r must exceed ell");
  require(p, r - ell > 2.0 * L, "r - ell must exceed 2L");
  require(p, n >= 1 && n <= 1000000, "n must lie in 1..1e6");
  require(p, points_per_unit >= 1, "points_per_unit must be >= 1");
  require(p, is_multiple(L, points_per_unit) && is_multiple(r - ell, points_per_unit),
          "L and r - ell must be multiples of 1/points_per_unit");
  require(p, (r - ell) * points_per_unit + 1 <= 8193.0, "grid exceeds 8193 points");
  require(p, proposal_mix >= 0.0 && proposal_mix < 1.0, "proposal_mix must lie in [0, 1)");
  require(p, threads >= 1, "threads must be >= 1");
  if (check_preconditions) {
    require(p, k >= 1, "k must be >= 1");
    require(p, L >= 1.0, "L must be >= 1");
    require(p, M >= std::sqrt(L), "M must satisfy M >= sqrt(L) (got M = " + format_real(M) +
                                      ", sqrt(L) = " + format_real(std::sqrt(L)) + ")");
    require(p, 4.0 * L <= r - ell && r - ell <= (2.0 * k + 2.0) * L,
            "interval must satisfy 4L <= r - ell <= (2k+2)L");
    require(p, lambda >= 4.0 && lambda <= 4.0 * k, "lambda must lie in [4, 4k]");
    require(p, std::abs(x) <= M && std::abs(y) <= M, "|x| and |y| must be <= M");
  }
  throw_if_any(std::move(p));
}

ExperimentReport run_bbjump_check(const BBJumpConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();
  const Grid grid(cfg.ell, cfg.r,
                  static_cast<int>(std::lround((cfg.r - cfg.ell) * cfg.points_per_unit)) + 1);
  const double dt = grid.spacing();
  const int last = grid.size() - 1;
  const int p1 = grid.index_of(cfg.ell + cfg.L);
  const int p2 = grid.index_of(cfg.r - cfg.L);
  const double lo = cfg.lambda * cfg.M;
  const double hi = (cfg.lambda + 4.0) * cfg.M;
  const double j1_lo = (cfg.lambda + 1.0) * cfg.M;
  const double j1_hi = (cfg.lambda + 3.0) * cfg.M;
  const auto n = static_cast<std::size_t>(cfg.n);

  std::vector<double> log_w(n);
  std::vector<double> corrected(n);
  std::vector<char> ev_j(n), ev1(n), ev2(n), ev3(n), ev4(n), ev_all(n);
  std::vector<std::int64_t> bad(static_cast<std::size_t>((cfg.n + kChunk - 1) / kChunk), 0);

  auto within = [&](std::span<const double> row, int a, int b, double va, double vb) {
    for (int q = a; q <= b; ++q) {
      const double lin = va + (vb - va) * (q - a) / (b - a);
      if (std::abs(row[static_cast<std::size_t>(q)] - lin) > cfg.M) return false;
    }
    return true;
  };

  for_each_chunk(cfg.n, cfg.threads, [&](std::uint64_t chunk, std::int64_t i0, std::int64_t i1) {
    Rng rng(cfg.seed, chunk);
    std::vector<double> row(static_cast<std::size_t>(grid.size()));
    for (std::int64_t i = i0; i < i1; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      // Mixture: free pins, or pins tilted into the J band or the J1 band.
      const double u = rng.uniform();
      const bool tilt = u < cfg.proposal_mix;
      const bool narrow = u < 0.5 * cfg.proposal_mix;
      const double blo = narrow ? j1_lo : lo;
      const double bhi = narrow ? j1_hi : hi;
      const double T = cfg.r - cfg.ell;
      const Pin a = draw_pin(cfg.x, cfg.y, T, p1 * dt, blo, bhi, tilt, rng);
      const Pin b = draw_pin(a.value, cfg.y, (last - p1) * dt, (p2 - p1) * dt, blo, bhi, tilt, rng);
      auto log_q_over_p = [&](double band_lo, double band_hi) {
        const PinMass ma = pin_mass(cfg.x, cfg.y, T, p1 * dt, band_lo, band_hi, a.value);
        const PinMass mb =
            pin_mass(a.value, cfg.y, (last - p1) * dt, (p2 - p1) * dt, band_lo, band_hi, b.value);
        return ma.inside && mb.inside ? -(ma.log_mass + mb.log_mass) : -kInf;
      };
      const double half = 0.5 * cfg.proposal_mix;
      const double mix = log_add_exp(
          log_add_exp(half > 0.0 ? std::log(half) + log_q_over_p(lo, hi) : -kInf,
                      half > 0.0 ? std::log(half) + log_q_over_p(j1_lo, j1_hi) : -kInf),
          std::log1p(-cfg.proposal_mix));
      log_w[iu] = -mix;
      std::span<double> s(row);
      sample_bridge_into(s.subspan(0, static_cast<std::size_t>(p1 + 1)), dt, cfg.x, a.value, rng);
      sample_bridge_into(s.subspan(static_cast<std::size_t>(p1), static_cast<std::size_t>(p2 - p1 + 1)),
                         dt, a.value, b.value, rng);
      sample_bridge_into(s.subspan(static_cast<std::size_t>(p2), static_cast<std::size_t>(last - p2 + 1)),
                         dt, b.value, cfg.y, rng);

      const bool j = min_over(row, p1, p2) >= lo && max_over(row, 0, last) <= hi;
      const bool j1 = a.value >= j1_lo && a.value <= j1_hi && b.value >= j1_lo && b.value <= j1_hi;
      const bool j2 = within(row, 0, p1, cfg.x, a.value);
      const bool j3 = within(row, p1, p2, a.value, b.value);
      const bool j4 = within(row, p2, last, b.value, cfg.y);
      ev_j[iu] = j;
      ev1[iu] = j1;
      ev2[iu] = j2;
      ev3[iu] = j3;
      ev4[iu] = j4;
      ev_all[iu] = j1 && j2 && j3 && j4;
      if (ev_all[iu] && !j) ++bad[chunk];

      double surv = j ? 1.0 : 0.0;
      for (int q = 0; q < last && surv > 0.0; ++q) {
        const double u0 = row[static_cast<std::size_t>(q)];
        const double u1 = row[static_cast<std::size_t>(q + 1)];
        surv *= 1.0 - segment_crossing_probability(hi - u0, hi - u1, 0.0, 0.0, dt);
        if (q >= p1 && q < p2) surv *= 1.0 - segment_crossing_probability(u0, u1, lo, lo, dt);
      }
      corrected[iu] = surv;
    }
  });

  std::int64_t hits = 0;
  for (char c : ev_j) hits += c;
  if (hits == 0) {
    throw ZeroHits("no sample realizes J at lambda = " + format_real(cfg.lambda) +
                   ", M = " + format_real(cfg.M));
  }
  std::int64_t inclusion_failures = 0;
  for (auto b : bad) inclusion_failures += b;

  ExperimentReport r;
  r.name = "bbjump";
  r.add_config("L", cfg.L);
  r.add_config("M", cfg.M);
  r.add_config("lambda", cfg.lambda);
  r.add_config("x", cfg.x);
  r.add_config("y", cfg.y);
  r.add_config("ell", cfg.ell);
  r.add_config("r", cfg.r);
  r.add_config("k", cfg.k);
  r.add_config("n", static_cast<double>(cfg.n));
  r.add_config("seed", std::to_string(cfg.seed));
  r.add_config("points_per_unit", cfg.points_per_unit);
  r.add_config("proposal_mix", cfg.proposal_mix);
  r.add_config("check_preconditions", cfg.check_preconditions ? "true" : "false");

  const auto pj = stats::weighted_proportion(log_w, ev_j);
  const auto pc = stats::weighted_mean(log_w, corrected);
  r.add_estimate("P(J)", as_estimate(pj, cfg.n, cfg.seed));
  r.add_estimate("P_c(J)", as_estimate(pc, cfg.n, cfg.seed));
  double prod = 1.0;
  double rel2 = 0.0;
  const std::vector<char>* subs[] = {&ev1, &ev2, &ev3, &ev4};
  for (int q = 0; q < 4; ++q) {
    const auto wp = stats::weighted_proportion(log_w, *subs[q]);
    r.add_estimate("P(J" + std::to_string(q + 1) + ")", as_estimate(wp, cfg.n, cfg.seed));
    prod *= wp.mean;
    if (wp.mean > 0.0) rel2 += (wp.std_error / wp.mean) * (wp.std_error / wp.mean);
  }
  const auto pall = stats::weighted_proportion(log_w, ev_all);
  r.add_estimate("P(J1 J2 J3 J4)", as_estimate(pall, cfg.n, cfg.seed));
  const McEstimate prod_est{prod, prod * std::sqrt(rel2), cfg.n, cfg.seed};
  r.add_estimate("P(J1) P(J2) P(J3) P(J4)", prod_est);
  r.add_value("ESS", stats::effective_sample_size_log(log_w), cfg.n, cfg.seed);
  r.add_value("ESS(J)", pj.ess, cfg.n, cfg.seed);
  const double d_fit = pc.mean > 0.0 ? -std::log(pc.mean) * cfg.L / (cfg.M * cfg.M) : kInf;
  r.add_value("D_fit", d_fit, cfg.n, cfg.seed);

  r.add_check("J1 J2 J3 J4 subset of J samplewise", inclusion_failures == 0,
              std::to_string(inclusion_failures) + " samples violate the inclusion");
  const double tol = 3.0 * std::hypot(pj.std_error, prod_est.std_error);
  r.add_check("P(J) >= P(J1) P(J2) P(J3) P(J4)", pj.mean + tol >= prod,
              format_real(pj.mean) + " vs " + format_real(prod) + " (tolerance " +
                  format_real(tol) + ")");
  r.add_check("log P_c(J) >= -D M^2 / L", std::isfinite(d_fit), "D = " + format_real(d_fit));
  r.runtime_seconds = seconds_since(start);
  return r;
}

}  // namespace lineens
