#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lineens/core.hpp"

namespace lineens {

struct ReportEstimate {
  std::string label;
  McEstimate estimate;
};

struct ReportCheck {
  std::string label;
  bool pass;
  std::string detail;
};

struct ExperimentReport {
  std::string name;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<ReportEstimate> estimates;
  std::vector<ReportCheck> checks;
  double runtime_seconds = 0.0;

  void add_config(std::string key, std::string value);
  void add_config(std::string key, double value);
  void add_estimate(std::string label, McEstimate e);
  /// Derived or fitted scalar; reported with std_error 0.
  void add_value(std::string label, double value, std::int64_t n, std::uint64_t seed);
  void add_check(std::string label, bool pass, std::string detail = {});
  bool all_passed() const;
  /// Throws std::out_of_range for unknown labels.
  const McEstimate& estimate(std::string_view label) const;
  const ReportCheck& check(std::string_view label) const;
};

/// Formats a real with 17 significant digits.
std::string format_real(double v);

// ---------------------------------------------------------------------------
// Separation on nested intervals with an M-Good boundary.
// ---------------------------------------------------------------------------

/// Nested intervals l_j = -(k+2-j)L, r_j = (k+2-j)L, j = 1..k+1.
/// The boundary is M-Good with constant components
/// f_j = M - 2M(j-1)/k; f_{k+1} is the floor below curve k.
struct SeparationConfig {
  int k = 2;
  double L = 1.0;
  double t = 100.0;
  double M = 1.5;
  std::int64_t n_samples = 100000;
  std::uint64_t seed = 1;
  int points_per_unit = 32;
  /// Probability of the tilted pin proposal in the mixture.
  double proposal_mix = 0.5;
  double min_ess = 100.0;
  /// z_lowerbound only: boundaries drawn from E and free draws per boundary.
  std::int64_t z_boundaries = 200;
  std::int64_t z_samples = 1000;
  int threads = 1;

  /// Throws ValidationError listing every violated constraint.
  void validate() const;
};

ExperimentReport run_separation_experiment(const SeparationConfig& cfg);
ExperimentReport run_z_lowerbound_experiment(const SeparationConfig& cfg);

// ---------------------------------------------------------------------------
// Ordering of curves k and k+1 as t grows.
// ---------------------------------------------------------------------------

struct OrderingConfig {
  int k = 1;
  std::vector<double> t_list{1.0, 8.0, 64.0};
  double gap = 2.0;
  double rho = 0.1;
  std::int64_t n = 2000;  // chains per t
  std::uint64_t seed = 1;
  int grid_points = 65;
  int burn_in = 20;  // sweeps; the diagnostic compares burn_in vs 2 * burn_in
  int threads = 1;

  void validate() const;
};

ExperimentReport run_ordering_experiment(const OrderingConfig& cfg);

// ---------------------------------------------------------------------------
// Three-curve fluctuation pipeline.
// ---------------------------------------------------------------------------

struct FluctuationConfig {
  double d = 0.25;
  std::vector<double> K_list{1.0, 2.0, 3.0};
  /// Entrance (and exit) value i is (2 - i) * spacing + Uniform[-box, box],
  /// sorted decreasingly.
  double boundary_box = 0.25;
  double boundary_spacing = 1.5;
  double t = 8.0;
  std::int64_t n = 2000;
  std::int64_t z_samples = 200;
  std::uint64_t seed = 1;
  int grid_points = 65;
  int threads = 1;

  void validate() const;
};

ExperimentReport run_fluctuation_experiment(const FluctuationConfig& cfg);

// ---------------------------------------------------------------------------
// Single bridge lifted into [lambda M, (lambda + 4) M].
// ---------------------------------------------------------------------------

struct BBJumpConfig {
  double L = 1.0;
  double M = 1.0;
  double lambda = 4.0;
  double x = 0.0;
  double y = 0.0;
  double ell = 0.0;
  double r = 4.0;
  int k = 1;
  std::int64_t n = 1000000;
  std::uint64_t seed = 1;
  int points_per_unit = 32;
  double proposal_mix = 0.5;
  /// When false only structural constraints are enforced.
  bool check_preconditions = true;
  int threads = 1;

  void validate() const;
};

ExperimentReport run_bbjump_check(const BBJumpConfig& cfg);

}  // namespace lineens
