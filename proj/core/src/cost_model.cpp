#include "datamarket/cost_model.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace datamarket {

namespace {

constexpr int kGridPoints = 1001;

[[noreturn]] void fail(const std::string& what) {
  throw std::invalid_argument("cost model: " + what);
}

}  // namespace

CostModel::CostModel(double c_min, double c_max, double density_lower,
                     double density_upper)
    : c_min_(c_min),
      c_max_(c_max),
      density_lower_(density_lower),
      density_upper_(density_upper) {
  if (!(std::isfinite(c_min) && std::isfinite(c_max))) {
    fail("support bounds must be finite");
  }
  if (!(c_min > 0.0)) fail("min_cost must be positive");
  if (!(c_max > c_min)) fail("max_cost must exceed min_cost");
  if (!(density_lower > 0.0)) fail("density lower bound must be positive");
  if (!(density_upper >= density_lower)) {
    fail("density upper bound must be >= lower bound");
  }
}

void CostModel::check_assumptions() const {
  const double span = c_max_ - c_min_;
  // Relative slack for comparisons: the bounds are mathematical statements,
  // but pdf/cdf are evaluated in floating point.
  const double eps = 1e-9;
  double prev_cdf = -1.0;
  double prev_psi = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGridPoints; ++i) {
    const double c = c_min_ + span * static_cast<double>(i) /
                                  static_cast<double>(kGridPoints - 1);
    const double f = pdf(c);
    if (!(f >= density_lower_ * (1.0 - eps)) ||
        !(f <= density_upper_ * (1.0 + eps))) {
      std::ostringstream msg;
      msg << "density " << f << " at c=" << c
          << " violates declared bounds [" << density_lower_ << ", "
          << density_upper_ << "]";
      fail(msg.str());
    }
    const double F = cdf(c);
    if (!(F >= prev_cdf - eps)) fail("cdf is not nondecreasing");
    prev_cdf = F;
    const double psi = c + F / f;
    if (!(psi >= prev_psi - eps * (1.0 + std::fabs(prev_psi)))) {
      fail("virtual cost is not nondecreasing (regular distribution required)");
    }
    prev_psi = psi;
  }
  if (std::fabs(cdf(c_min_)) > 1e-9) fail("cdf(min_cost) must be 0");
  if (std::fabs(cdf(c_max_) - 1.0) > 1e-9) fail("cdf(max_cost) must be 1");
  // Quantile must invert the CDF (checked loosely; exactness is a per-model
  // concern).
  for (double u : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const double c = quantile(u);
    if (!(c >= c_min_ - eps * span) || !(c <= c_max_ + eps * span)) {
      fail("quantile leaves the support");
    }
    if (std::fabs(cdf(c) - u) > 1e-6) fail("quantile does not invert cdf");
  }
}

double CostModel::virtual_cost(double c) const {
  const double slack = 1e-12 * (1.0 + std::fabs(c_max_));
  if (!(c >= c_min_ - slack) || !(c <= c_max_ + slack)) {
    throw std::domain_error("virtual_cost: cost outside support");
  }
  return c + cdf(c) / pdf(c);
}

double CostModel::inverse_virtual_cost(double v) const {
  const double lo_v = virtual_cost(c_min_);
  const double hi_v = virtual_cost(c_max_);
  const double slack = 1e-9 * (1.0 + std::fabs(hi_v));
  if (!(v >= lo_v - slack) || !(v <= hi_v + slack)) {
    throw std::domain_error("inverse_virtual_cost: value outside psi range");
  }
  double lo = c_min_;
  double hi = c_max_;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (virtual_cost(mid) < v) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

UniformCostModel::UniformCostModel(double c_min, double c_max)
    : CostModel(c_min, c_max, 1.0 / (c_max - c_min), 1.0 / (c_max - c_min)) {
  check_assumptions();
}

double UniformCostModel::pdf(double c) const {
  if (c < min_cost() || c > max_cost()) return 0.0;
  return 1.0 / (max_cost() - min_cost());
}

double UniformCostModel::cdf(double c) const {
  if (c <= min_cost()) return 0.0;
  if (c >= max_cost()) return 1.0;
  return (c - min_cost()) / (max_cost() - min_cost());
}

double UniformCostModel::quantile(double u) const {
  if (u < 0.0 || u > 1.0) {
    throw std::domain_error("quantile: u outside [0, 1]");
  }
  return min_cost() + u * (max_cost() - min_cost());
}

double UniformCostModel::virtual_cost(double c) const {
  const double slack = 1e-12 * (1.0 + std::fabs(max_cost()));
  if (!(c >= min_cost() - slack) || !(c <= max_cost() + slack)) {
    throw std::domain_error("virtual_cost: cost outside support");
  }
  // c + (c - c_min)/(1/(c_max-c_min) * (c_max-c_min)) collapses to 2c - c_min.
  return 2.0 * c - min_cost();
}

double UniformCostModel::inverse_virtual_cost(double v) const {
  const double lo_v = virtual_cost(min_cost());
  const double hi_v = virtual_cost(max_cost());
  const double slack = 1e-9 * (1.0 + std::fabs(hi_v));
  if (!(v >= lo_v - slack) || !(v <= hi_v + slack)) {
    throw std::domain_error("inverse_virtual_cost: value outside psi range");
  }
  return 0.5 * (v + min_cost());
}

FunctionalCostModel::FunctionalCostModel(
    double c_min, double c_max, double density_lower, double density_upper,
    std::function<double(double)> pdf, std::function<double(double)> cdf,
    std::function<double(double)> quantile)
    : CostModel(c_min, c_max, density_lower, density_upper),
      pdf_(std::move(pdf)),
      cdf_(std::move(cdf)),
      quantile_(std::move(quantile)) {
  if (!pdf_ || !cdf_ || !quantile_) {
    throw std::invalid_argument("cost model: callables must be non-empty");
  }
  check_assumptions();
}

}  // namespace datamarket
