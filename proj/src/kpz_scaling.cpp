#include "lineens/kpz_scaling.hpp"

#include <cmath>

namespace lineens {

namespace {

void check(const ScalingParams& p) {
  if (!(p.t > 0.0)) throw NonPositiveT("KPZ scaling requires t > 0");
  if (p.n < 1) throw InvalidInterval("curve index n must be >= 1");
}

double index_shift(const ScalingParams& p) {
  return (p.n - 1) * std::log(std::pow(p.t, 2.0 / 3.0)) / std::cbrt(p.t);
}

}  // namespace

double scale_value(double value, const ScalingParams& p) {
  check(p);
  return (value + p.t / 24.0) / std::cbrt(p.t) + index_shift(p);
}

double unscale_value(double value, const ScalingParams& p) {
  check(p);
  return (value - index_shift(p)) * std::cbrt(p.t) - p.t / 24.0;
}

Path scale_to_kpz_frame(const Path& path, const ScalingParams& p) {
  check(p);
  const double space = std::pow(p.t, 2.0 / 3.0);
  const Grid g(path.grid.a() / space, path.grid.b() / space, path.grid.size());
  std::vector<double> v(path.values.size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = scale_value(path.values[j], p);
  return Path(g, std::move(v));
}

Path unscale_from_kpz_frame(const Path& path, const ScalingParams& p) {
  check(p);
  const double space = std::pow(p.t, 2.0 / 3.0);
  const Grid g(path.grid.a() * space, path.grid.b() * space, path.grid.size());
  std::vector<double> v(path.values.size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = unscale_value(path.values[j], p);
  return Path(g, std::move(v));
}

Path parabola_shift(const Path& path, int sign) {
  std::vector<double> v(path.values.size());
  for (int j = 0; j < path.grid.size(); ++j) {
    const double u = path.grid.point(j);
    v[static_cast<std::size_t>(j)] = path[j] + sign * 0.5 * u * u;
  }
  return Path(path.grid, std::move(v));
}

}  // namespace lineens
