#pragma once

#include <cmath>
#include <vector>

#include "gammaplast/errors.hpp"

namespace gammaplast {

/// Least-squares slope of log(metric) against log(eps).
inline double fit_order(const std::vector<double>& eps, const std::vector<double>& metric) {
  if (eps.size() != metric.size()) throw ArgumentError("fit_order: size mismatch");
  if (eps.size() < 3) throw ArgumentError("fit_order: need at least 3 ladder points");
  for (double m : metric)
    if (m == 0.0) throw DegenerateFit("fit_order: metric vanishes (exact convergence)");
  for (std::size_t i = 0; i < eps.size(); ++i)
    if (!(eps[i] > 0.0) || !(metric[i] > 0.0) || !std::isfinite(metric[i]))
      throw ArgumentError("fit_order: values must be positive and finite");
  const double n = static_cast<double>(eps.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    sx += std::log(eps[i]);
    sy += std::log(metric[i]);
  }
  const double mx = sx / n, my = sy / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double dx = std::log(eps[i]) - mx;
    sxy += dx * (std::log(metric[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw ArgumentError("fit_order: ladder values must differ");
  return sxy / sxx;
}

}  // namespace gammaplast
