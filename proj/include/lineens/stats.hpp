#pragma once

#include <functional>
#include <span>
#include <vector>

#include "lineens/rng.hpp"

namespace lineens::stats {

double normal_cdf(double z);
/// P(Z > z), accurate deep in the upper tail.
double normal_sf(double z);
/// log P(lo < Z < hi) for a standard normal, stable in both tails.
double log_normal_interval_mass(double lo, double hi);

/// Standard normal restricted to [lo, hi]; either bound may be infinite.
/// Exact rejection schemes (Robert 1995) so far tails stay cheap.
double sample_truncated_normal(Rng& rng, double lo, double hi);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Asymptotic Kolmogorov survival function Q(lambda).
double kolmogorov_q(double lambda);

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);
KsResult ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf);

/// (sum w)^2 / sum w^2 for nonnegative weights given in log form.
double effective_sample_size_log(std::span<const double> log_weights);

/// Self-normalized importance-sampling estimate of P(event) with
/// delta-method standard error.
struct WeightedProportion {
  double mean = 0.0;
  double std_error = 0.0;
  double ess = 0.0;  // ESS of the weights restricted to the event
};
WeightedProportion weighted_proportion(std::span<const double> log_weights,
                                       std::span<const char> indicator);

/// Self-normalized weighted mean of arbitrary values; `ess` is the ESS of
/// the weights on samples with a nonzero value.
WeightedProportion weighted_mean(std::span<const double> log_weights,
                                 std::span<const double> values);

/// Smallest C >= 1 with C * exp(-K^2 / C) >= p for every (K, p) pair
/// with p > 0. Used to report existential Gaussian-decay constants.
double fit_gaussian_decay_constant(std::span<const double> ks, std::span<const double> probs);

double mean(std::span<const double> x);

}  // namespace lineens::stats
