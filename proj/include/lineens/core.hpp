#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lineens/errors.hpp"

namespace lineens {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Exponent arguments above this saturate to +inf instead of overflowing.
inline constexpr double kDefaultExpCap = 700.0;

/// Uniform discretization of [a, b] with n points.
///
/// Point j is a + j*(b-a)/(n-1); the last point is exactly b.
class Grid {
 public:
  Grid(double a, double b, int n);

  double a() const { return a_; }
  double b() const { return b_; }
  int size() const { return n_; }
  double spacing() const { return delta_; }
  double length() const { return b_ - a_; }

  double point(int j) const;
  std::vector<double> points() const;

  /// Index of the grid point equal to u (within a tolerance of 1e-9 spacings).
  /// Throws GridMismatch when u is not on the grid.
  int index_of(double u) const;
  bool contains_point(double u) const;

  /// Sub-grid between two point indices (inclusive).
  Grid slice(int first, int last) const;

  friend bool operator==(const Grid& l, const Grid& r) {
    return l.a_ == r.a_ && l.b_ == r.b_ && l.n_ == r.n_;
  }

 private:
  double a_;
  double b_;
  int n_;
  double delta_;
};

Grid make_grid(double a, double b, int n);

/// Real-valued curve sampled on a grid.
struct Path {
  Grid grid;
  std::vector<double> values;

  Path(Grid g, std::vector<double> v);
  static Path constant(const Grid& g, double c);

  double operator[](int j) const { return values[static_cast<std::size_t>(j)]; }
  int size() const { return grid.size(); }
  double front() const { return values.front(); }
  double back() const { return values.back(); }
};

/// Upper boundary f or lower boundary g of a conditional block.
class BoundaryCurve {
 public:
  struct PlusInfinity {};
  struct MinusInfinity {};

  static BoundaryCurve plus_infinity() { return BoundaryCurve(PlusInfinity{}); }
  static BoundaryCurve minus_infinity() { return BoundaryCurve(MinusInfinity{}); }
  static BoundaryCurve curve(Path p) { return BoundaryCurve(std::move(p)); }

  bool is_plus_infinity() const { return std::holds_alternative<PlusInfinity>(v_); }
  bool is_minus_infinity() const { return std::holds_alternative<MinusInfinity>(v_); }
  bool is_curve() const { return std::holds_alternative<Path>(v_); }
  const Path& path() const { return std::get<Path>(v_); }

  /// Value at grid index j; +-inf for the sentinels.
  double at(int j) const;

 private:
  using Variant = std::variant<PlusInfinity, MinusInfinity, Path>;
  explicit BoundaryCurve(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

/// k curves on a shared grid. Row 0 holds curve index 1 (the top curve).
class LineEnsemble {
 public:
  LineEnsemble(Grid grid, int k);
  LineEnsemble(Grid grid, std::vector<std::vector<double>> curves);

  const Grid& grid() const { return grid_; }
  int k() const { return static_cast<int>(curves_.size()); }

  /// Curve by zero-based row (row 0 is the top curve).
  std::span<double> curve(int row) { return curves_[static_cast<std::size_t>(row)]; }
  std::span<const double> curve(int row) const {
    return curves_[static_cast<std::size_t>(row)];
  }
  double& at(int row, int j) { return curves_[static_cast<std::size_t>(row)][static_cast<std::size_t>(j)]; }
  double at(int row, int j) const {
    return curves_[static_cast<std::size_t>(row)][static_cast<std::size_t>(j)];
  }

  Path path(int row) const;
  const std::vector<std::vector<double>>& curves() const { return curves_; }

  friend bool operator==(const LineEnsemble&, const LineEnsemble&) = default;

 private:
  Grid grid_;
  std::vector<std::vector<double>> curves_;
};

/// Pairwise interaction H applied to the signed gap L_{i+1} - L_i.
class Hamiltonian {
 public:
  enum class Kind { Exp, ScaledExp, Ordered };

  static Hamiltonian exp() { return Hamiltonian(Kind::Exp, 1.0); }
  static Hamiltonian scaled_exp(double t);
  static Hamiltonian ordered() { return Hamiltonian(Kind::Ordered, 0.0); }

  Kind kind() const { return kind_; }
  /// t for ScaledExp; 1 for Exp.
  double t() const { return t_; }
  /// Multiplier of x in the exponent: t^{1/3} (1 for Exp).
  double rate() const { return rate_; }
  bool is_ordered() const { return kind_ == Kind::Ordered; }

  double eval(double x, double exp_cap = kDefaultExpCap) const;
  /// log H(x), -inf when H(x) = 0.
  double log_eval(double x) const;

  std::string describe() const;

 private:
  Hamiltonian(Kind kind, double t);
  Kind kind_;
  double t_;
  double rate_;
};

double hamiltonian_eval(const Hamiltonian& h, double x);

struct BoundaryData {
  std::vector<double> x_vec;
  std::vector<double> y_vec;
  BoundaryCurve upper = BoundaryCurve::plus_infinity();
  BoundaryCurve lower = BoundaryCurve::minus_infinity();

  int k() const { return static_cast<int>(x_vec.size()); }
  /// Checks lengths and the sentinel placement rules against a grid.
  void validate(const Grid& grid) const;
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // sample sd / sqrt(n_samples)
  std::int64_t n_samples = 0;
  std::uint64_t seed = 0;
};

/// Running mean / variance (Welford) that can be merged across replicas.
class MeanAccumulator {
 public:
  void add(double x);
  void merge(const MeanAccumulator& other);

  std::int64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const;  // sample variance, n-1 denominator
  double stderr_of_mean() const;
  McEstimate estimate(std::uint64_t seed) const;

 private:
  std::int64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace lineens
