#include "datamarket/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace datamarket::rng {

double standard_normal(std::mt19937_64& gen) {
  for (;;) {
    const double u = 2.0 * uniform01(gen) - 1.0;
    const double v = 2.0 * uniform01(gen) - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

namespace {

// Marsaglia–Tsang for shape >= 1.
double gamma_large_shape(std::mt19937_64& gen, double shape) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = standard_normal(gen);
    const double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    const double v = t * t * t;
    const double u = uniform01(gen);
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x2 + d - d * v + d * std::log(v)) {
      return d * v;
    }
  }
}

}  // namespace

double gamma(std::mt19937_64& gen, double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0)) {
    throw std::invalid_argument("gamma: shape and scale must be positive");
  }
  if (shape >= 1.0) {
    return scale * gamma_large_shape(gen, shape);
  }
  // Boost trick: Gamma(a) = Gamma(a + 1) * U^(1/a) for a < 1.
  const double g = gamma_large_shape(gen, shape + 1.0);
  const double u = uniform01(gen);
  return scale * g * std::pow(u, 1.0 / shape);
}

double chi_squared(std::mt19937_64& gen, double dof) {
  if (!(dof > 0.0)) {
    throw std::invalid_argument("chi_squared: dof must be positive");
  }
  return gamma(gen, 0.5 * dof, 2.0);
}

}  // namespace datamarket::rng
