#pragma once

#include "lineens/core.hpp"

namespace lineens {

/// Time t and curve index n of the scaled KPZ line ensemble.
struct ScalingParams {
  double t;
  int n;
};

/// Maps samples of the unscaled curve H_n(u) to the scaled frame:
/// x = u / t^{2/3}, value (H_n(t^{2/3} x) + t/24) / t^{1/3} + (n-1) t^{-1/3} log t^{2/3}.
Path scale_to_kpz_frame(const Path& path, const ScalingParams& p);

/// Exact inverse of scale_to_kpz_frame.
Path unscale_from_kpz_frame(const Path& path, const ScalingParams& p);

/// Scalar versions of the value maps, for boundary data.
double scale_value(double value, const ScalingParams& p);
double unscale_value(double value, const ScalingParams& p);

/// Adds sign * u^2 / 2 pointwise.
Path parabola_shift(const Path& path, int sign);

}  // namespace lineens
