#include "lineens/core.hpp"

#include <sstream>

namespace lineens {

Grid::Grid(double a, double b, int n) : a_(a), b_(b), n_(n), delta_(0.0) {
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) {
    throw InvalidGrid("grid requires finite a < b");
  }
  if (n < 2) throw InvalidGrid("grid requires at least 2 points");
  delta_ = (b - a) / (n - 1);
}

Grid make_grid(double a, double b, int n) { return Grid(a, b, n); }

double Grid::point(int j) const {
  if (j <= 0) return a_;
  if (j >= n_ - 1) return b_;
  return a_ + j * delta_;
}

std::vector<double> Grid::points() const {
  std::vector<double> out(static_cast<std::size_t>(n_));
  for (int j = 0; j < n_; ++j) out[static_cast<std::size_t>(j)] = point(j);
  return out;
}

int Grid::index_of(double u) const {
  const double pos = (u - a_) / delta_;
  const long long j = std::llround(pos);
  if (j < 0 || j >= n_ || std::abs(pos - static_cast<double>(j)) > 1e-9) {
    std::ostringstream msg;
    msg << "point " << u << " is not on the grid [" << a_ << ", " << b_ << "] with " << n_
        << " points";
    throw GridMismatch(msg.str());
  }
  return static_cast<int>(j);
}

bool Grid::contains_point(double u) const {
  const double pos = (u - a_) / delta_;
  const long long j = std::llround(pos);
  return j >= 0 && j < n_ && std::abs(pos - static_cast<double>(j)) <= 1e-9;
}

Grid Grid::slice(int first, int last) const {
  if (first < 0 || last >= n_ || last <= first) throw InvalidGrid("invalid grid slice");
  return Grid(point(first), point(last), last - first + 1);
}

Path::Path(Grid g, std::vector<double> v) : grid(g), values(std::move(v)) {
  if (static_cast<int>(values.size()) != grid.size()) {
    throw LengthMismatch("path length does not match grid size");
  }
  for (double x : values) {
    if (!std::isfinite(x)) throw Error("path values must be finite");
  }
}

Path Path::constant(const Grid& g, double c) {
  return Path(g, std::vector<double>(static_cast<std::size_t>(g.size()), c));
}

double BoundaryCurve::at(int j) const {
  if (is_plus_infinity()) return kInf;
  if (is_minus_infinity()) return -kInf;
  return path()[j];
}

LineEnsemble::LineEnsemble(Grid grid, int k)
    : grid_(grid),
      curves_(static_cast<std::size_t>(k),
              std::vector<double>(static_cast<std::size_t>(grid.size()), 0.0)) {
  if (k < 1) throw LengthMismatch("line ensemble needs at least one curve");
}

LineEnsemble::LineEnsemble(Grid grid, std::vector<std::vector<double>> curves)
    : grid_(grid), curves_(std::move(curves)) {
  if (curves_.empty()) throw LengthMismatch("line ensemble needs at least one curve");
  for (const auto& c : curves_) {
    if (static_cast<int>(c.size()) != grid_.size()) {
      throw LengthMismatch("curve length does not match grid size");
    }
  }
}

Path LineEnsemble::path(int row) const { return Path(grid_, curves_[static_cast<std::size_t>(row)]); }

Hamiltonian::Hamiltonian(Kind kind, double t) : kind_(kind), t_(t), rate_(1.0) {
  if (kind == Kind::ScaledExp) rate_ = std::cbrt(t);
}

Hamiltonian Hamiltonian::scaled_exp(double t) {
  if (!(t > 0.0)) throw NonPositiveT("ScaledExp requires t > 0");
  return Hamiltonian(Kind::ScaledExp, t);
}

double Hamiltonian::eval(double x, double exp_cap) const {
  if (kind_ == Kind::Ordered) return x > 0.0 ? kInf : 0.0;
  const double arg = rate_ * x;
  if (arg > exp_cap) return kInf;
  return std::exp(arg);
}

double Hamiltonian::log_eval(double x) const {
  if (kind_ == Kind::Ordered) return x > 0.0 ? kInf : -kInf;
  return rate_ * x;
}

std::string Hamiltonian::describe() const {
  switch (kind_) {
    case Kind::Exp:
      return "Exp";
    case Kind::ScaledExp: {
      std::ostringstream s;
      s << "ScaledExp(t=" << t_ << ")";
      return s.str();
    }
    case Kind::Ordered:
      return "Ordered";
  }
  return "?";
}

double hamiltonian_eval(const Hamiltonian& h, double x) { return h.eval(x); }

void BoundaryData::validate(const Grid& grid) const {
  if (x_vec.size() != y_vec.size()) throw LengthMismatch("x_vec and y_vec lengths differ");
  if (x_vec.empty()) throw LengthMismatch("boundary data needs k >= 1");
  if (upper.is_minus_infinity()) throw Error("-inf is not a legal upper boundary");
  if (lower.is_plus_infinity()) throw Error("+inf is not a legal lower boundary");
  if (upper.is_curve() && !(upper.path().grid == grid)) {
    throw GridMismatch("upper boundary lives on a different grid");
  }
  if (lower.is_curve() && !(lower.path().grid == grid)) {
    throw GridMismatch("lower boundary lives on a different grid");
  }
}

void MeanAccumulator::add(double x) {
  ++n_;
  const double d = x - mean_;
  mean_ += d / static_cast<double>(n_);
  m2_ += d * (x - mean_);
}

void MeanAccumulator::merge(const MeanAccumulator& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double n = static_cast<double>(n_ + other.n_);
  const double d = other.mean_ - mean_;
  mean_ += d * static_cast<double>(other.n_) / n;
  m2_ += other.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(other.n_) / n;
  n_ += other.n_;
}

double MeanAccumulator::variance() const {
  return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
}

double MeanAccumulator::stderr_of_mean() const {
  return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

McEstimate MeanAccumulator::estimate(std::uint64_t seed) const {
  return McEstimate{mean_, stderr_of_mean(), n_, seed};
}

}  // namespace lineens
