#include "lineens/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lineens::stats {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kHalfLog2Pi = 0.91893853320467274178;

// log P(Z > z) for z >= 0, using erfc until it underflows and the
// asymptotic series beyond.
double log_sf_upper(double z) {
  if (z < 30.0) return std::log(0.5 * std::erfc(z * kInvSqrt2));
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -0.5 * z2 - std::log(z) - kHalfLog2Pi + std::log(series);
}

double log_diff_exp(double la, double lb) {
  // log(e^la - e^lb), la >= lb
  if (lb == -std::numeric_limits<double>::infinity()) return la;
  return la + std::log1p(-std::exp(lb - la));
}
}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double normal_sf(double z) { return 0.5 * std::erfc(z * kInvSqrt2); }

double log_normal_interval_mass(double lo, double hi) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (!(lo < hi)) return -inf;
  if (lo >= 0.0) {
    const double a = log_sf_upper(lo);
    const double b = hi == inf ? -inf : log_sf_upper(hi);
    return log_diff_exp(a, b);
  }
  if (hi <= 0.0) return log_normal_interval_mass(-hi, -lo);
  const double left = lo == -inf ? 0.0 : normal_sf(-lo);   // P(Z < lo)
  const double right = hi == inf ? 0.0 : normal_sf(hi);    // P(Z > hi)
  return std::log1p(-(left + right));
}

double sample_truncated_normal(Rng& rng, double lo, double hi) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (!(lo < hi)) return lo;
  if (hi <= 0.0 && lo < 0.0) return -sample_truncated_normal(rng, -hi, -lo);
  if (lo < 0.0) {
    // Interval straddles 0: plain normal rejection unless it is narrow.
    if (hi - lo > 0.5) {
      for (;;) {
        const double z = rng.normal();
        if (z >= lo && z <= hi) return z;
      }
    }
    for (;;) {
      const double z = lo + (hi - lo) * rng.uniform();
      if (rng.uniform() <= std::exp(-0.5 * z * z)) return z;
    }
  }
  // 0 <= lo < hi
  const double lambda = 0.5 * (lo + std::sqrt(lo * lo + 4.0));
  const double width = hi - lo;
  // Uniform proposal wins when the interval is narrow compared to the
  // exponential decay length.
  const bool use_uniform = hi != inf && width < 1.0 / (lo + 1.0);
  if (use_uniform) {
    for (;;) {
      const double z = lo + width * rng.uniform();
      if (rng.uniform() <= std::exp(0.5 * (lo * lo - z * z))) return z;
    }
  }
  if (lo < 0.3) {
    for (;;) {
      const double z = std::abs(rng.normal());
      if (z >= lo && z <= hi) return z;
    }
  }
  for (;;) {
    const double z = lo + rng.exponential() / lambda;
    if (z > hi) continue;
    if (rng.uniform() <= std::exp(-0.5 * (z - lambda) * (z - lambda))) return z;
  }
}

double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_q((ne + 0.12 + 0.11 / ne) * d)};
}

KsResult ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  const double ne = std::sqrt(n);
  return {d, kolmogorov_q((ne + 0.12 + 0.11 / ne) * d)};
}

double effective_sample_size_log(std::span<const double> log_weights) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) mx = std::max(mx, lw);
  if (!std::isfinite(mx)) return 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  for (double lw : log_weights) {
    const double w = std::exp(lw - mx);
    s1 += w;
    s2 += w * w;
  }
  return s1 * s1 / s2;
}

WeightedProportion weighted_mean(std::span<const double> log_weights,
                                 std::span<const double> values) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) mx = std::max(mx, lw);
  WeightedProportion out;
  if (!std::isfinite(mx)) return out;
  double total = 0.0;
  double hit = 0.0;
  double hit_w = 0.0;
  double hit_sq = 0.0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    const double w = std::exp(log_weights[i] - mx);
    total += w;
    hit += w * values[i];
    if (values[i] != 0.0) {
      hit_w += w;
      hit_sq += w * w;
    }
  }
  out.mean = hit / total;
  double var = 0.0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    const double w = std::exp(log_weights[i] - mx) / total;
    const double r = values[i] - out.mean;
    var += w * w * r * r;
  }
  out.std_error = std::sqrt(var);
  out.ess = hit_sq > 0.0 ? hit_w * hit_w / hit_sq : 0.0;
  return out;
}

WeightedProportion weighted_proportion(std::span<const double> log_weights,
                                       std::span<const char> indicator) {
  std::vector<double> values(indicator.size());
  for (std::size_t i = 0; i < indicator.size(); ++i) values[i] = indicator[i] ? 1.0 : 0.0;
  return weighted_mean(log_weights, values);
}

double fit_gaussian_decay_constant(std::span<const double> ks, std::span<const double> probs) {
  auto ok = [&](double c) {
    for (std::size_t i = 0; i < ks.size(); ++i) {
      if (probs[i] <= 0.0) continue;
      if (c * std::exp(-ks[i] * ks[i] / c) < probs[i]) return false;
    }
    return true;
  };
  double lo = 1.0;
  if (ok(lo)) return lo;
  double hi = 2.0;
  while (!ok(hi)) hi *= 2.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

}  // namespace lineens::stats
